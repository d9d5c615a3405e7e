#include "probelens/synth.hpp"

#include <Eigen/QR>

#include "probelens/error.hpp"
#include "probelens/rng.hpp"

namespace probelens {
namespace {

// Synthetic schedule: classes map to positions 1..n_classes.
Manifest synthetic_manifest(std::uint32_t n_classes, std::uint32_t per_class, const std::string& model_name) {
  Manifest m;
  m.model_name = model_name;
  m.extractor_version = "probelens-synth";
  m.task = Task::kKv;
  m.schedule.n = n_classes;
  for (std::uint32_t c = 0; c < n_classes; ++c) m.schedule.positions.push_back(c + 1);
  for (std::uint32_t c = 0; c < n_classes; ++c) {
    for (std::uint32_t i = 0; i < per_class; ++i) {
      m.prompt_ids.push_back("synth-c" + std::to_string(c) + "-" + std::to_string(i));
      m.gold_classes.push_back(c);
      m.gold_positions.push_back(c + 1);
    }
  }
  return m;
}

}  // namespace

void PlantSpec::validate() const {
  if (n_layers < 1 || hidden_dim < 1 || n_classes < 2 || n_prompts_per_class < 1) {
    throw ValidationError("plant spec needs n_layers, hidden_dim, n_prompts_per_class >= 1 and n_classes >= 2");
  }
  if (signal_layer >= n_layers) throw ValidationError("signal_layer must be < n_layers");
  if (decay_start && (*decay_start <= signal_layer || *decay_start >= n_layers)) {
    throw ValidationError("decay_start must lie in (signal_layer, n_layers)");
  }
  if (!(noise_sigma > 0.0)) throw ValidationError("noise_sigma must be > 0");
  if (!(separation > 0.0)) throw ValidationError("separation must be > 0");
  if (n_classes > hidden_dim) throw ValidationError("n_classes must not exceed hidden_dim");
}

double planted_alpha(const PlantSpec& spec, std::uint32_t layer) {
  if (layer < spec.signal_layer) return 0.0;
  if (!spec.decay_start || layer < *spec.decay_start) return 1.0;
  const double span = static_cast<double>(spec.n_layers - 1 - *spec.decay_start);
  if (span <= 0.0) return 0.0;
  return static_cast<double>(spec.n_layers - 1 - layer) / span;
}

EmbeddingArchive planted_archive(const PlantSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.hidden_dim);

  // Random rotation: Q of the QR factorisation of a Gaussian matrix.
  Rng rot_rng(derive_seed(spec.seed, streams::kSynthRotation));
  Eigen::MatrixXd gaussian(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) gaussian(i, j) = rot_rng.gaussian();
  }
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian).householderQ();

  std::vector<Eigen::VectorXd> means(spec.n_classes);
  for (std::uint32_t c = 0; c < spec.n_classes; ++c) {
    means[c] = spec.layout == ClassLayout::kOrthogonal ? Eigen::VectorXd(spec.separation * q.col(c))
                                                       : Eigen::VectorXd(c * spec.separation * q.col(0));
  }

  EmbeddingArchive archive;
  archive.manifest = synthetic_manifest(spec.n_classes, spec.n_prompts_per_class, "synthetic-planted");
  archive.header.n_prompts = spec.n_classes * spec.n_prompts_per_class;
  archive.header.n_layers = spec.n_layers;
  archive.header.hidden_dim = spec.hidden_dim;
  archive.data.resize(archive.header.element_count());

  const std::uint64_t noise_seed = derive_seed(spec.seed, streams::kSynthNoise, spec.sample_stream);
  for (std::uint32_t p = 0; p < archive.header.n_prompts; ++p) {
    Rng rng(derive_seed(noise_seed, 0, p));
    const auto& mu = means[archive.manifest.gold_classes[p]];
    for (std::uint32_t l = 0; l < spec.n_layers; ++l) {
      const double alpha = planted_alpha(spec, l);
      float* out = archive.data.data() + (static_cast<std::size_t>(p) * spec.n_layers + l) * spec.hidden_dim;
      for (Eigen::Index i = 0; i < d; ++i) {
        out[i] = static_cast<float>(alpha * mu[i] + spec.noise_sigma * rng.gaussian());
      }
    }
  }
  return archive;
}

EmbeddingArchive chance_archive(std::uint32_t n_layers, std::uint32_t hidden_dim, std::uint32_t n_classes,
                                std::uint32_t n_per_class, std::uint64_t seed) {
  if (n_layers < 1 || hidden_dim < 1 || n_classes < 1 || n_per_class < 1) {
    throw ValidationError("chance archive counts must all be >= 1");
  }
  EmbeddingArchive archive;
  archive.manifest = synthetic_manifest(n_classes, n_per_class, "synthetic-chance");
  archive.header.n_prompts = n_classes * n_per_class;
  archive.header.n_layers = n_layers;
  archive.header.hidden_dim = hidden_dim;
  archive.data.resize(archive.header.element_count());
  const std::uint64_t noise_seed = derive_seed(seed, streams::kSynthNoise);
  const std::size_t per_prompt = static_cast<std::size_t>(n_layers) * hidden_dim;
  for (std::uint32_t p = 0; p < archive.header.n_prompts; ++p) {
    Rng rng(derive_seed(noise_seed, 0, p));
    float* out = archive.data.data() + p * per_prompt;
    for (std::size_t i = 0; i < per_prompt; ++i) out[i] = static_cast<float>(rng.gaussian());
  }
  return archive;
}

}  // namespace probelens
