#pragma once

#include <cstdint>
#include <optional>

#include "probelens/tensor_store.hpp"

namespace probelens {

/// Where the class means sit relative to each other.
enum class ClassLayout {
  kOrthogonal,  // separation * u_c over mutually orthogonal unit directions
  kLine,        // c * separation * u_0: equally spaced on one line
};

struct PlantSpec {
  std::uint32_t n_layers = 8;
  std::uint32_t hidden_dim = 16;
  std::uint32_t n_classes = 11;
  std::uint32_t signal_layer = 3;
  std::optional<std::uint32_t> decay_start;
  double noise_sigma = 0.1;
  double separation = 4.0;
  std::uint32_t n_prompts_per_class = 100;
  std::uint64_t seed = 0;
  // Selects the noise stream only; class directions depend on `seed` alone,
  // so stream 0 and stream 1 give a train/test pair from one distribution.
  std::uint64_t sample_stream = 0;
  ClassLayout layout = ClassLayout::kOrthogonal;

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

/// Noise below signal_layer, mu_c + noise from it, and a linearly fading
/// alpha(l) * mu_c + noise from decay_start (alpha reaches 0 on the last layer).
/// Prompts are ordered class-major.
EmbeddingArchive planted_archive(const PlantSpec& spec);

/// Signal strength alpha(l) used by planted_archive.
double planted_alpha(const PlantSpec& spec, std::uint32_t layer);

/// Unit-Gaussian noise at every layer with balanced labels.
EmbeddingArchive chance_archive(std::uint32_t n_layers, std::uint32_t hidden_dim, std::uint32_t n_classes,
                                std::uint32_t n_per_class, std::uint64_t seed);

}  // namespace probelens
