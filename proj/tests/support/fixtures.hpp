#pragma once

#include <random>
#include <string>

#include "probelens/corpus.hpp"
#include "probelens/tensor_store.hpp"

namespace fixtures {

// Schedule with positions 1..classes.
inline probelens::PositionSchedule simple_schedule(std::uint32_t classes) {
  probelens::PositionSchedule s;
  s.n = classes;
  for (std::uint32_t c = 1; c <= classes; ++c) s.positions.push_back(c);
  return s;
}

// Archive with a consistent manifest; prompt p has class p % classes.
inline probelens::EmbeddingArchive make_archive(std::uint32_t n_prompts, std::uint32_t n_layers, std::uint32_t dim,
                                                std::uint32_t classes = 2) {
  probelens::EmbeddingArchive a;
  a.header.n_prompts = n_prompts;
  a.header.n_layers = n_layers;
  a.header.hidden_dim = dim;
  a.data.resize(a.header.element_count());
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] = static_cast<float>(i);
  a.manifest.model_name = "fixture";
  a.manifest.extractor_version = "test";
  a.manifest.schedule = simple_schedule(classes);
  a.manifest.schedule.n = classes;
  for (std::uint32_t p = 0; p < n_prompts; ++p) {
    a.manifest.prompt_ids.push_back("p" + std::to_string(p));
    a.manifest.gold_classes.push_back(p % classes);
    a.manifest.gold_positions.push_back(p % classes + 1);
  }
  return a;
}

// Random payload including awkward float bit patterns (subnormals, -0, extremes).
inline probelens::EmbeddingArchive random_archive(std::mt19937_64& gen) {
  std::uniform_int_distribution<std::uint32_t> small(1, 6);
  std::uniform_int_distribution<std::uint32_t> dim(1, 24);
  std::uniform_int_distribution<std::uint32_t> cls(1, 5);
  const std::uint32_t classes = cls(gen);
  auto a = make_archive(small(gen) + classes, small(gen), dim(gen), classes);
  std::uniform_real_distribution<float> u(-1e3f, 1e3f);
  std::uniform_int_distribution<int> pick(0, 19);
  for (auto& v : a.data) {
    switch (pick(gen)) {
      case 0: v = -0.0f; break;
      case 1: v = std::numeric_limits<float>::denorm_min(); break;
      case 2: v = std::numeric_limits<float>::max(); break;
      case 3: v = std::numeric_limits<float>::lowest(); break;
      default: v = u(gen);
    }
  }
  if (pick(gen) < 10) {
    std::vector<probelens::GenerationRecord> gens;
    for (std::size_t p = 0; p < a.manifest.prompt_ids.size(); ++p) {
      gens.push_back({a.manifest.prompt_ids[p], "output \"quoted\" ü " + std::to_string(p), "ans", {"ans", "alias"}});
    }
    a.manifest.generations = gens;
    std::vector<std::uint32_t> rows(a.manifest.prompt_ids.size(), 3);
    a.manifest.first_answer_token_rows = rows;
    a.manifest.skipped.push_back({"p-skipped", "exceeds context"});
  }
  return a;
}

}  // namespace fixtures
