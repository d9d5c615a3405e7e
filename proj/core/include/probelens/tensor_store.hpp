#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "probelens/corpus.hpp"

namespace probelens {

// On-disk layout of a .prbe file (all integers u32 little-endian):
//   magic "PRBE" | version | n_prompts | n_layers | hidden_dim | dtype_code
//   payload: n_prompts * n_layers * hidden_dim float32 LE, [prompt][layer][dim]
// The manifest lives next to it as <path>.manifest.json.
inline constexpr std::array<char, 4> kArchiveMagic = {'P', 'R', 'B', 'E'};
inline constexpr std::array<char, 4> kWeightMagic = {'P', 'R', 'W', 'M'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 1;
inline constexpr std::size_t kArchiveHeaderBytes = 24;

inline constexpr const char* kDefaultLayerIndexingNote =
    "layer 0 = input-embedding output; layers 1..L = transformer block outputs; "
    "embedding taken at the final prompt token before generation";

struct ArchiveHeader {
  std::uint32_t version = kFormatVersion;
  std::uint32_t n_prompts = 0;
  std::uint32_t n_layers = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t dtype_code = kDtypeFloat32;

  std::size_t element_count() const {
    return static_cast<std::size_t>(n_prompts) * n_layers * hidden_dim;
  }
  std::size_t payload_bytes() const { return element_count() * 4; }

  bool operator==(const ArchiveHeader&) const = default;
};

struct GenerationRecord {
  std::string prompt_id;
  std::string output_text;
  std::string answer;
  std::vector<std::string> answer_aliases;

  bool operator==(const GenerationRecord&) const = default;
};

struct SkippedPrompt {
  std::string prompt_id;
  std::string reason;

  bool operator==(const SkippedPrompt&) const = default;
};

struct Manifest {
  std::string model_name;
  std::string layer_indexing_note = kDefaultLayerIndexingNote;
  std::vector<std::string> prompt_ids;
  std::vector<std::uint32_t> gold_classes;
  std::vector<std::uint32_t> gold_positions;
  Task task = Task::kKv;
  PositionSchedule schedule;
  std::optional<std::vector<GenerationRecord>> generations;
  std::string extractor_version;
  // Vocabulary row of each prompt's first answer token (logit lens target).
  std::optional<std::vector<std::uint32_t>> first_answer_token_rows;
  std::vector<SkippedPrompt> skipped;

  bool operator==(const Manifest&) const = default;
};

struct EmbeddingArchive {
  ArchiveHeader header;
  std::vector<float> data;  // [prompt][layer][dim], row-major
  Manifest manifest;

  float at(std::size_t prompt, std::size_t layer, std::size_t dim) const {
    return data[(prompt * header.n_layers + layer) * header.hidden_dim + dim];
  }
  const float* embedding(std::size_t prompt, std::size_t layer) const {
    return data.data() + (prompt * header.n_layers + layer) * header.hidden_dim;
  }
};

struct WeightMatrix {
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> data;  // row-major
  std::optional<std::vector<std::string>> token_strings;

  bool operator==(const WeightMatrix&) const = default;
};

std::filesystem::path manifest_path(const std::filesystem::path& archive_path);

/// Throws ValidationError when the in-memory archive breaks an invariant.
void check_archive(const EmbeddingArchive& archive);

void write_archive(const EmbeddingArchive& archive, const std::filesystem::path& path);

/// Reads the .prbe file and its manifest sidecar. Throws FormatError (magic,
/// version, dtype, zero counts, manifest syntax), LengthError (payload size)
/// or ValidationError (non-finite values, manifest inconsistencies).
EmbeddingArchive read_archive(const std::filesystem::path& path);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

using RowMatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerSlice {
  RowMatrixF features;  // n_prompts x hidden_dim
  std::vector<std::uint32_t> labels;
};

LayerSlice slice_layer(const EmbeddingArchive& archive, std::uint32_t layer);

struct ValidationFailure {
  std::string kind;  // e.g. "header", "length", "non_finite", "manifest"
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFailure> failures;
  bool ok() const { return failures.empty(); }
};

/// Collects every problem instead of stopping at the first. Only an
/// unreadable file throws (IoError).
ValidationReport validate_archive(const std::filesystem::path& path);

// .wmat layout (u32 LE unless noted):
//   magic "PRWM" | version | rows | cols | dtype_code | name_len | name bytes
//   payload rows*cols float32 LE row-major
//   n_tokens (0 or rows) | per token: len | bytes
void write_weight_matrix(const WeightMatrix& matrix, const std::filesystem::path& path);
WeightMatrix read_weight_matrix(const std::filesystem::path& path);

}  // namespace probelens
