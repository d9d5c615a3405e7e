#include "probelens/tensor_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "json.hpp"
#include "probelens/error.hpp"

namespace probelens {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

void put_floats(std::string& out, const std::vector<float>& values) {
  out.reserve(out.size() + values.size() * 4);
  for (const float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

float get_f32(const char* p) { return std::bit_cast<float>(get_u32(p)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

// Header problems, in the order they are checked. Empty when the header is usable.
std::vector<ValidationFailure> header_failures(const std::string& bytes, ArchiveHeader& header) {
  std::vector<ValidationFailure> failures;
  if (bytes.size() < kArchiveHeaderBytes) {
    failures.push_back({"header", "file has " + std::to_string(bytes.size()) +
                                      " bytes, shorter than the 24-byte header"});
    return failures;
  }
  if (std::memcmp(bytes.data(), kArchiveMagic.data(), 4) != 0) {
    failures.push_back({"header", "bad magic (expected PRBE)"});
    return failures;
  }
  header.version = get_u32(bytes.data() + 4);
  header.n_prompts = get_u32(bytes.data() + 8);
  header.n_layers = get_u32(bytes.data() + 12);
  header.hidden_dim = get_u32(bytes.data() + 16);
  header.dtype_code = get_u32(bytes.data() + 20);
  if (header.version != kFormatVersion) {
    failures.push_back({"header", "unsupported version " + std::to_string(header.version)});
  }
  if (header.dtype_code != kDtypeFloat32) {
    failures.push_back({"header", "unsupported dtype_code " + std::to_string(header.dtype_code)});
  }
  if (header.n_prompts == 0 || header.n_layers == 0 || header.hidden_dim == 0) {
    failures.push_back({"header", "n_prompts, n_layers and hidden_dim must all be >= 1"});
  }
  return failures;
}

std::string non_finite_message(const ArchiveHeader& h, std::size_t flat) {
  const std::size_t dim = flat % h.hidden_dim;
  const std::size_t layer = (flat / h.hidden_dim) % h.n_layers;
  const std::size_t prompt = flat / (static_cast<std::size_t>(h.hidden_dim) * h.n_layers);
  return "non-finite value at prompt " + std::to_string(prompt) + ", layer " +
         std::to_string(layer) + ", dim " + std::to_string(dim);
}

std::vector<ValidationFailure> manifest_failures(const Manifest& m, const ArchiveHeader& h) {
  std::vector<ValidationFailure> failures;
  auto fail = [&](std::string msg) { failures.push_back({"manifest", std::move(msg)}); };
  if (m.prompt_ids.size() != h.n_prompts) {
    fail("manifest lists " + std::to_string(m.prompt_ids.size()) + " prompt ids but header has n_prompts=" +
         std::to_string(h.n_prompts));
  }
  if (m.gold_classes.size() != m.prompt_ids.size()) {
    fail("gold_classes has " + std::to_string(m.gold_classes.size()) + " entries, prompt_ids has " +
         std::to_string(m.prompt_ids.size()));
  }
  if (m.gold_positions.size() != m.prompt_ids.size()) {
    fail("gold_positions has " + std::to_string(m.gold_positions.size()) + " entries, prompt_ids has " +
         std::to_string(m.prompt_ids.size()));
  }
  if (m.schedule.positions.empty()) fail("schedule has no positions");
  for (std::size_t i = 1; i < m.schedule.positions.size(); ++i) {
    if (m.schedule.positions[i] <= m.schedule.positions[i - 1]) {
      fail("schedule positions are not strictly increasing");
      break;
    }
  }
  const std::size_t n_classes = m.schedule.positions.size();
  for (std::size_t i = 0; i < m.gold_classes.size(); ++i) {
    if (m.gold_classes[i] >= n_classes) {
      fail("gold_class " + std::to_string(m.gold_classes[i]) + " of prompt " + std::to_string(i) +
           " is outside the " + std::to_string(n_classes) + "-class schedule");
    } else if (i < m.gold_positions.size() && m.schedule.positions[m.gold_classes[i]] != m.gold_positions[i]) {
      fail("prompt " + std::to_string(i) + ": gold_position " + std::to_string(m.gold_positions[i]) +
           " disagrees with gold_class " + std::to_string(m.gold_classes[i]));
    }
  }
  std::unordered_set<std::string> ids;
  for (const auto& id : m.prompt_ids) {
    if (!ids.insert(id).second) fail("duplicate prompt id '" + id + "'");
  }
  if (m.generations) {
    for (const auto& g : *m.generations) {
      if (!ids.contains(g.prompt_id)) fail("generation for unknown prompt id '" + g.prompt_id + "'");
    }
  }
  if (m.first_answer_token_rows && m.first_answer_token_rows->size() != m.prompt_ids.size()) {
    fail("first_answer_token_rows has " + std::to_string(m.first_answer_token_rows->size()) +
         " entries, prompt_ids has " + std::to_string(m.prompt_ids.size()));
  }
  return failures;
}

ordered_json manifest_to_json(const Manifest& m) {
  ordered_json j;
  j["model_name"] = m.model_name;
  j["layer_indexing_note"] = m.layer_indexing_note;
  j["extractor_version"] = m.extractor_version;
  j["task"] = to_string(m.task);
  j["schedule"] = {{"n", m.schedule.n}, {"positions", m.schedule.positions}};
  j["prompt_ids"] = m.prompt_ids;
  j["gold_classes"] = m.gold_classes;
  j["gold_positions"] = m.gold_positions;
  if (m.first_answer_token_rows) j["first_answer_token_rows"] = *m.first_answer_token_rows;
  if (m.generations) {
    ordered_json gens = ordered_json::array();
    for (const auto& g : *m.generations) {
      gens.push_back({{"prompt_id", g.prompt_id},
                      {"output_text", g.output_text},
                      {"answer", g.answer},
                      {"answer_aliases", g.answer_aliases}});
    }
    j["generations"] = std::move(gens);
  }
  ordered_json skipped = ordered_json::array();
  for (const auto& s : m.skipped) skipped.push_back({{"prompt_id", s.prompt_id}, {"reason", s.reason}});
  j["skipped"] = std::move(skipped);
  return j;
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.model_name = j.value("model_name", "");
  m.layer_indexing_note = j.value("layer_indexing_note", "");
  m.extractor_version = j.value("extractor_version", "");
  m.task = parse_task(j.at("task").get<std::string>());
  m.schedule.n = j.at("schedule").at("n").get<std::uint32_t>();
  m.schedule.positions = j.at("schedule").at("positions").get<std::vector<std::uint32_t>>();
  m.prompt_ids = j.at("prompt_ids").get<std::vector<std::string>>();
  m.gold_classes = j.at("gold_classes").get<std::vector<std::uint32_t>>();
  m.gold_positions = j.at("gold_positions").get<std::vector<std::uint32_t>>();
  if (j.contains("first_answer_token_rows") && !j["first_answer_token_rows"].is_null()) {
    m.first_answer_token_rows = j["first_answer_token_rows"].get<std::vector<std::uint32_t>>();
  }
  if (j.contains("generations") && !j["generations"].is_null()) {
    std::vector<GenerationRecord> gens;
    for (const auto& g : j["generations"]) {
      GenerationRecord r;
      r.prompt_id = g.at("prompt_id").get<std::string>();
      r.output_text = g.at("output_text").get<std::string>();
      r.answer = g.value("answer", "");
      r.answer_aliases = g.value("answer_aliases", std::vector<std::string>{});
      gens.push_back(std::move(r));
    }
    m.generations = std::move(gens);
  }
  if (j.contains("skipped")) {
    for (const auto& s : j["skipped"]) {
      m.skipped.push_back({s.at("prompt_id").get<std::string>(), s.value("reason", "")});
    }
  }
  return m;
}

std::string join_messages(const std::vector<ValidationFailure>& failures) {
  std::string out;
  for (const auto& f : failures) {
    if (!out.empty()) out += "; ";
    out += f.message;
  }
  return out;
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& archive_path) {
  return std::filesystem::path(archive_path.string() + ".manifest.json");
}

void check_archive(const EmbeddingArchive& archive) {
  const auto& h = archive.header;
  if (h.version != kFormatVersion || h.dtype_code != kDtypeFloat32) {
    throw ValidationError("archive header has unsupported version or dtype");
  }
  if (h.n_prompts == 0 || h.n_layers == 0 || h.hidden_dim == 0) {
    throw ValidationError("archive counts must all be >= 1");
  }
  if (archive.data.size() != h.element_count()) {
    throw ValidationError("archive holds " + std::to_string(archive.data.size()) +
                          " values, header implies " + std::to_string(h.element_count()));
  }
  for (std::size_t i = 0; i < archive.data.size(); ++i) {
    if (!std::isfinite(archive.data[i])) throw ValidationError(non_finite_message(h, i));
  }
  const auto failures = manifest_failures(archive.manifest, h);
  if (!failures.empty()) throw ValidationError(join_messages(failures));
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file(path, manifest_to_json(manifest).dump(2) + "\n");
}

Manifest read_manifest(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return manifest_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("manifest " + path.string() + ": " + e.what());
  }
}

void write_archive(const EmbeddingArchive& archive, const std::filesystem::path& path) {
  check_archive(archive);
  std::string bytes;
  bytes.append(kArchiveMagic.data(), 4);
  put_u32(bytes, archive.header.version);
  put_u32(bytes, archive.header.n_prompts);
  put_u32(bytes, archive.header.n_layers);
  put_u32(bytes, archive.header.hidden_dim);
  put_u32(bytes, archive.header.dtype_code);
  put_floats(bytes, archive.data);
  write_file(path, bytes);
  write_manifest(archive.manifest, manifest_path(path));
}

EmbeddingArchive read_archive(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  EmbeddingArchive archive;
  const auto header_problems = header_failures(bytes, archive.header);
  if (!header_problems.empty()) throw FormatError(path.string() + ": " + join_messages(header_problems));

  const std::size_t expected = archive.header.payload_bytes();
  const std::size_t actual = bytes.size() - kArchiveHeaderBytes;
  if (actual != expected) {
    throw LengthError(path.string() + ": payload is " + std::to_string(actual) + " bytes, expected " +
                      std::to_string(expected));
  }
  archive.data.resize(archive.header.element_count());
  const char* p = bytes.data() + kArchiveHeaderBytes;
  for (std::size_t i = 0; i < archive.data.size(); ++i) {
    archive.data[i] = get_f32(p + 4 * i);
    if (!std::isfinite(archive.data[i])) {
      throw ValidationError(path.string() + ": " + non_finite_message(archive.header, i));
    }
  }

  const auto mpath = manifest_path(path);
  if (!std::filesystem::exists(mpath)) throw FormatError("missing manifest sidecar " + mpath.string());
  archive.manifest = read_manifest(mpath);
  const auto problems = manifest_failures(archive.manifest, archive.header);
  if (!problems.empty()) throw ValidationError(path.string() + ": " + join_messages(problems));
  return archive;
}

LayerSlice slice_layer(const EmbeddingArchive& archive, std::uint32_t layer) {
  const auto& h = archive.header;
  if (layer >= h.n_layers) {
    throw RangeError("layer " + std::to_string(layer) + " out of range (archive has " +
                     std::to_string(h.n_layers) + " layers)");
  }
  LayerSlice slice;
  slice.features.resize(h.n_prompts, h.hidden_dim);
  for (std::size_t p = 0; p < h.n_prompts; ++p) {
    std::memcpy(slice.features.row(static_cast<Eigen::Index>(p)).data(), archive.embedding(p, layer),
                sizeof(float) * h.hidden_dim);
  }
  slice.labels = archive.manifest.gold_classes;
  return slice;
}

ValidationReport validate_archive(const std::filesystem::path& path) {
  ValidationReport report;
  const std::string bytes = read_file(path);
  ArchiveHeader header;
  report.failures = header_failures(bytes, header);
  const bool header_usable = report.failures.empty();

  if (header_usable) {
    const std::size_t expected = header.payload_bytes();
    const std::size_t actual = bytes.size() - kArchiveHeaderBytes;
    if (actual != expected) {
      report.failures.push_back({"length", "payload is " + std::to_string(actual) + " bytes, expected " +
                                               std::to_string(expected)});
    }
    const std::size_t scan = std::min(expected, actual) / 4;
    const char* p = bytes.data() + kArchiveHeaderBytes;
    for (std::size_t i = 0; i < scan; ++i) {
      if (!std::isfinite(get_f32(p + 4 * i))) {
        report.failures.push_back({"non_finite", non_finite_message(header, i)});
      }
    }
  }

  const auto mpath = manifest_path(path);
  if (!std::filesystem::exists(mpath)) {
    report.failures.push_back({"manifest", "missing manifest sidecar " + mpath.string()});
    return report;
  }
  try {
    const Manifest manifest = read_manifest(mpath);
    if (header_usable) {
      for (auto& f : manifest_failures(manifest, header)) report.failures.push_back(std::move(f));
    }
  } catch (const FormatError& e) {
    report.failures.push_back({"manifest", e.what()});
  }
  return report;
}

void write_weight_matrix(const WeightMatrix& matrix, const std::filesystem::path& path) {
  if (matrix.rows == 0 || matrix.cols == 0) throw ValidationError("weight matrix must be non-empty");
  if (matrix.data.size() != static_cast<std::size_t>(matrix.rows) * matrix.cols) {
    throw ValidationError("weight matrix '" + matrix.name + "' data length does not match rows x cols");
  }
  if (matrix.token_strings && matrix.token_strings->size() != matrix.rows) {
    throw ValidationError("token_strings must have one entry per row");
  }
  for (const float f : matrix.data) {
    if (!std::isfinite(f)) throw ValidationError("weight matrix '" + matrix.name + "' has non-finite values");
  }
  std::string bytes;
  bytes.append(kWeightMagic.data(), 4);
  put_u32(bytes, kFormatVersion);
  put_u32(bytes, matrix.rows);
  put_u32(bytes, matrix.cols);
  put_u32(bytes, kDtypeFloat32);
  put_u32(bytes, static_cast<std::uint32_t>(matrix.name.size()));
  bytes += matrix.name;
  put_floats(bytes, matrix.data);
  if (matrix.token_strings) {
    put_u32(bytes, static_cast<std::uint32_t>(matrix.token_strings->size()));
    for (const auto& t : *matrix.token_strings) {
      put_u32(bytes, static_cast<std::uint32_t>(t.size()));
      bytes += t;
    }
  } else {
    put_u32(bytes, 0);
  }
  write_file(path, bytes);
}

WeightMatrix read_weight_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (bytes.size() - pos < n) {
      throw LengthError(path.string() + ": truncated while reading " + what + " (need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos) + ", file has " +
                        std::to_string(bytes.size()) + ")");
    }
  };
  auto u32 = [&](const char* what) {
    need(4, what);
    const auto v = get_u32(bytes.data() + pos);
    pos += 4;
    return v;
  };

  need(4, "magic");
  if (std::memcmp(bytes.data(), kWeightMagic.data(), 4) != 0) {
    throw FormatError(path.string() + ": bad magic (expected PRWM)");
  }
  pos = 4;
  WeightMatrix m;
  if (const auto version = u32("version"); version != kFormatVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  m.rows = u32("rows");
  m.cols = u32("cols");
  if (const auto dtype = u32("dtype_code"); dtype != kDtypeFloat32) {
    throw FormatError(path.string() + ": unsupported dtype_code " + std::to_string(dtype));
  }
  if (m.rows == 0 || m.cols == 0) throw FormatError(path.string() + ": rows and cols must be >= 1");
  const auto name_len = u32("name length");
  need(name_len, "name");
  m.name = bytes.substr(pos, name_len);
  pos += name_len;

  const std::size_t count = static_cast<std::size_t>(m.rows) * m.cols;
  need(count * 4, "payload");
  m.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    m.data[i] = get_f32(bytes.data() + pos + 4 * i);
    if (!std::isfinite(m.data[i])) {
      throw ValidationError(path.string() + ": non-finite value at row " + std::to_string(i / m.cols) +
                            ", col " + std::to_string(i % m.cols));
    }
  }
  pos += count * 4;

  const auto n_tokens = u32("token count");
  if (n_tokens != 0) {
    if (n_tokens != m.rows) {
      throw FormatError(path.string() + ": token count " + std::to_string(n_tokens) + " != rows " +
                        std::to_string(m.rows));
    }
    std::vector<std::string> tokens;
    tokens.reserve(n_tokens);
    for (std::uint32_t t = 0; t < n_tokens; ++t) {
      const auto len = u32("token length");
      need(len, "token bytes");
      tokens.push_back(bytes.substr(pos, len));
      pos += len;
    }
    m.token_strings = std::move(tokens);
  }
  if (pos != bytes.size()) {
    throw LengthError(path.string() + ": " + std::to_string(bytes.size() - pos) + " trailing bytes");
  }
  if (m.name == "final_norm_scale" && m.rows != 1) {
    throw ValidationError(path.string() + ": final_norm_scale must have exactly one row");
  }
  return m;
}

}  // namespace probelens
