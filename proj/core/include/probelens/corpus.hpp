#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "probelens/rng.hpp"

namespace probelens {

enum class Task { kKv, kMdqa };

std::string_view to_string(Task task);
/// Accepts "kv" or "mdqa" (case-insensitive); throws ConfigError otherwise.
Task parse_task(std::string_view text);

struct KvPair {
  std::string key;
  std::string value;

  bool operator==(const KvPair&) const = default;
};

struct MdqaDocument {
  std::string title;
  std::string body;
  bool contains_answer = false;

  bool operator==(const MdqaDocument&) const = default;
};

struct QaPoolEntry {
  std::string question;
  std::vector<std::string> answer_aliases;
  MdqaDocument gold_document;
  std::vector<MdqaDocument> distractors;
};

/// Gold positions probed for a context of n items (1-based, strictly increasing).
struct PositionSchedule {
  std::uint32_t n = 0;
  std::vector<std::uint32_t> positions;

  std::size_t num_classes() const { return positions.size(); }
  /// Index of `position` in `positions`; throws RangeError if unscheduled.
  std::uint32_t class_of(std::uint32_t position) const;

  bool operator==(const PositionSchedule&) const = default;
};

struct PromptRecord {
  std::string prompt_id;
  Task task = Task::kKv;
  std::string text;
  std::uint32_t gold_position = 0;  // 1-based
  std::uint32_t gold_class = 0;     // 0-based index into the schedule
  std::string answer;
  std::vector<std::string> answer_aliases;
  std::uint32_t n_items = 0;
  std::uint32_t iteration = 0;  // content group; split_corpus never separates one

  bool operator==(const PromptRecord&) const = default;
};

struct Corpus {
  std::vector<PromptRecord> records;
  PositionSchedule schedule;
  std::uint64_t seed = 0;
  Task task = Task::kKv;
};

/// Formats 128 bits as a version-4 UUID: version nibble forced to 4 and the
/// variant bits to 10. `hi` supplies the first 64 bits in reading order.
std::string format_uuid_v4(std::uint64_t hi, std::uint64_t lo);

/// Draws exactly two 64-bit words from `rng`.
std::string uuid_v4(Rng& rng);

/// {1} ∪ {round_half_up(k·n/10) : k = 1..10}, clamped to [1, n], deduplicated.
PositionSchedule position_schedule(std::uint32_t n);

/// Renders the key-value retrieval prompt. JSON object uses two-space
/// indentation with one pair per line. gold_index is 1-based.
std::string render_kv_prompt(const std::vector<KvPair>& pairs, std::uint32_t gold_index);

struct MdqaOptions {
  std::size_t max_document_chars = 1500;
};

struct MdqaPrompt {
  std::string text;
  std::vector<MdqaDocument> documents;
};

/// Samples n_docs-1 distractors without replacement, shuffles them and puts
/// the gold document at gold_index (1-based).
MdqaPrompt render_mdqa_prompt(const QaPoolEntry& entry, std::uint32_t n_docs,
                              std::uint32_t gold_index, Rng& rng,
                              const MdqaOptions& options = {});

struct CorpusRequest {
  Task task = Task::kKv;
  std::uint32_t n_items = 100;
  std::uint32_t iterations = 1;
  std::uint64_t seed = 0;
  MdqaOptions mdqa;
};

/// iterations × |schedule| records; each iteration draws fresh content and
/// emits one record per scheduled position. `pool` is required for MDQA.
Corpus generate_corpus(const CorpusRequest& request, const std::vector<QaPoolEntry>* pool = nullptr);

/// Splits by iteration group so no content crosses halves.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double test_fraction, std::uint64_t seed);

/// Line-delimited JSON. Pool lines carry `question`, `answers`, `gold`
/// ({title, body}) and `distractors` (list of {title, body}).
std::vector<QaPoolEntry> read_qa_pool(const std::filesystem::path& path);
std::vector<QaPoolEntry> parse_qa_pool(std::istream& in);

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);
std::vector<PromptRecord> read_corpus_jsonl(std::istream& in);
std::vector<PromptRecord> read_corpus_jsonl(const std::filesystem::path& path);

}  // namespace probelens
