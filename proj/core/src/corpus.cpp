#include "probelens/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "probelens/error.hpp"
#include "probelens/text.hpp"

namespace probelens {

using nlohmann::ordered_json;

std::string_view to_string(Task task) {
  return task == Task::kKv ? "kv" : "mdqa";
}

Task parse_task(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lowered == "kv") return Task::kKv;
  if (lowered == "mdqa") return Task::kMdqa;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected kv or mdqa)");
}

std::uint32_t PositionSchedule::class_of(std::uint32_t position) const {
  const auto it = std::lower_bound(positions.begin(), positions.end(), position);
  if (it == positions.end() || *it != position) {
    throw RangeError("position " + std::to_string(position) + " is not in the schedule");
  }
  return static_cast<std::uint32_t>(it - positions.begin());
}

std::string format_uuid_v4(std::uint64_t hi, std::uint64_t lo) {
  hi = (hi & ~0x000000000000f000ULL) | 0x0000000000004000ULL;
  lo = (lo & ~0xc000000000000000ULL) | 0x8000000000000000ULL;
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi >> 32),
                static_cast<unsigned long long>((hi >> 16) & 0xffff),
                static_cast<unsigned long long>(hi & 0xffff),
                static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return std::string(buf, 36);
}

std::string uuid_v4(Rng& rng) {
  const std::uint64_t hi = rng.next_u64();
  const std::uint64_t lo = rng.next_u64();
  return format_uuid_v4(hi, lo);
}

PositionSchedule position_schedule(std::uint32_t n) {
  if (n == 0) throw RangeError("position_schedule needs n >= 1");
  PositionSchedule schedule;
  schedule.n = n;
  schedule.positions.push_back(1);
  for (std::uint64_t k = 1; k <= 10; ++k) {
    // round-half-up of k*n/10 in integers
    auto p = static_cast<std::uint32_t>((k * n * 2 + 10) / 20);
    p = std::clamp<std::uint32_t>(p, 1, n);
    if (p != schedule.positions.back()) schedule.positions.push_back(p);
  }
  return schedule;
}

std::string render_kv_prompt(const std::vector<KvPair>& pairs, std::uint32_t gold_index) {
  if (gold_index < 1 || gold_index > pairs.size()) {
    throw RangeError("gold_index " + std::to_string(gold_index) + " outside [1, " +
                     std::to_string(pairs.size()) + "]");
  }
  std::string out;
  out += "Extract the value corresponding to the specified key in the JSON object below.\n";
  out += "\n";
  out += "JSON data:\n";
  out += "{\n";
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out += "  \"" + pairs[i].key + "\": \"" + pairs[i].value + "\"";
    out += (i + 1 < pairs.size()) ? ",\n" : "\n";
  }
  out += "}\n";
  out += "\n";
  out += "Key: \"" + pairs[gold_index - 1].key + "\"\n";
  out += "Corresponding value:";
  return out;
}

MdqaPrompt render_mdqa_prompt(const QaPoolEntry& entry, std::uint32_t n_docs,
                              std::uint32_t gold_index, Rng& rng, const MdqaOptions& options) {
  if (n_docs == 0 || gold_index < 1 || gold_index > n_docs) {
    throw RangeError("gold_index " + std::to_string(gold_index) + " outside [1, " +
                     std::to_string(n_docs) + "]");
  }
  if (entry.distractors.size() < n_docs - 1) {
    throw CapacityError("question '" + entry.question + "' has " +
                        std::to_string(entry.distractors.size()) + " distractors, needs " +
                        std::to_string(n_docs - 1));
  }

  // Partial Fisher-Yates picks n_docs-1 distinct distractors.
  std::vector<std::size_t> order(entry.distractors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i + 1 < n_docs; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  order.resize(n_docs - 1);
  rng.shuffle(std::span<std::size_t>(order));

  MdqaPrompt prompt;
  prompt.documents.reserve(n_docs);
  for (const auto idx : order) prompt.documents.push_back(entry.distractors[idx]);
  MdqaDocument gold = entry.gold_document;
  gold.contains_answer = true;
  prompt.documents.insert(prompt.documents.begin() + (gold_index - 1), std::move(gold));

  std::string& out = prompt.text;
  out += "Write a high-quality answer for the given question using only the provided search "
         "results (some of which might be irrelevant).\n";
  out += "\n";
  for (std::size_t i = 0; i < prompt.documents.size(); ++i) {
    const auto& doc = prompt.documents[i];
    out += "Document [" + std::to_string(i + 1) + "](Title: " + doc.title + ") ";
    out += utf8_prefix(doc.body, options.max_document_chars);
    out += "\n";
  }
  out += "\n";
  out += "Question: " + entry.question + "\n";
  out += "Answer:";
  return prompt;
}

namespace {

std::string prompt_id(Task task, std::uint32_t iteration, std::uint32_t position) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%06u-%03u", std::string(to_string(task)).c_str(), iteration,
                position);
  return buf;
}

std::vector<KvPair> draw_kv_pairs(Rng& rng, std::uint32_t n) {
  std::vector<KvPair> pairs;
  pairs.reserve(n);
  std::unordered_set<std::string> seen;
  while (pairs.size() < n) {
    KvPair pair{uuid_v4(rng), uuid_v4(rng)};
    // Collisions are astronomically unlikely; redraw keeps the invariants total.
    if (pair.key == pair.value || seen.contains(pair.key) || seen.contains(pair.value)) continue;
    seen.insert(pair.key);
    seen.insert(pair.value);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace

Corpus generate_corpus(const CorpusRequest& request, const std::vector<QaPoolEntry>* pool) {
  if (request.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (request.n_items < 1) throw ConfigError("n_items must be >= 1");
  if (request.task == Task::kMdqa && (pool == nullptr || pool->empty())) {
    throw ConfigError("MDQA corpus generation needs a non-empty QA pool");
  }

  Corpus corpus;
  corpus.task = request.task;
  corpus.seed = request.seed;
  corpus.schedule = position_schedule(request.n_items);
  const auto& positions = corpus.schedule.positions;
  corpus.records.reserve(static_cast<std::size_t>(request.iterations) * positions.size());

  for (std::uint32_t it = 0; it < request.iterations; ++it) {
    const std::uint64_t iter_seed = derive_seed(request.seed, streams::kCorpusIteration, it);
    Rng rng(iter_seed);

    if (request.task == Task::kKv) {
      const auto fresh = draw_kv_pairs(rng, request.n_items);
      const KvPair& gold = fresh.front();
      for (std::uint32_t c = 0; c < positions.size(); ++c) {
        std::vector<KvPair> ordered(fresh.begin() + 1, fresh.end());
        ordered.insert(ordered.begin() + (positions[c] - 1), gold);
        PromptRecord record;
        record.prompt_id = prompt_id(Task::kKv, it, positions[c]);
        record.task = Task::kKv;
        record.text = render_kv_prompt(ordered, positions[c]);
        record.gold_position = positions[c];
        record.gold_class = c;
        record.answer = gold.value;
        record.answer_aliases = {gold.value};
        record.n_items = request.n_items;
        record.iteration = it;
        corpus.records.push_back(std::move(record));
      }
    } else {
      const QaPoolEntry& entry = (*pool)[rng.uniform_below(pool->size())];
      if (entry.answer_aliases.empty()) {
        throw ValidationError("QA entry '" + entry.question + "' has no answers");
      }
      const std::uint64_t layout_seed = derive_seed(iter_seed, streams::kMdqaLayout);
      for (std::uint32_t c = 0; c < positions.size(); ++c) {
        // Same layout seed for every position: one document set, gold rotated.
        Rng layout(layout_seed);
        auto prompt = render_mdqa_prompt(entry, request.n_items, positions[c], layout, request.mdqa);
        PromptRecord record;
        record.prompt_id = prompt_id(Task::kMdqa, it, positions[c]);
        record.task = Task::kMdqa;
        record.text = std::move(prompt.text);
        record.gold_position = positions[c];
        record.gold_class = c;
        record.answer = entry.answer_aliases.front();
        record.answer_aliases = entry.answer_aliases;
        record.n_items = request.n_items;
        record.iteration = it;
        corpus.records.push_back(std::move(record));
      }
    }
  }
  return corpus;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double test_fraction,
                                       std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw RangeError("test_fraction must lie strictly between 0 and 1");
  }
  std::vector<std::uint32_t> groups;
  for (const auto& r : corpus.records) {
    if (groups.empty() || groups.back() != r.iteration) groups.push_back(r.iteration);
  }
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  if (groups.size() < 2) {
    throw CapacityError("corpus has " + std::to_string(groups.size()) +
                        " content group(s); a split needs at least 2");
  }

  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(groups.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, groups.size() - 1);

  Rng rng(derive_seed(seed, streams::kSplit));
  std::vector<std::uint32_t> shuffled = groups;
  rng.shuffle(std::span<std::uint32_t>(shuffled));
  std::unordered_set<std::uint32_t> test_groups(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));

  std::pair<Corpus, Corpus> halves;
  for (Corpus* half : {&halves.first, &halves.second}) {
    half->schedule = corpus.schedule;
    half->seed = corpus.seed;
    half->task = corpus.task;
  }
  for (const auto& r : corpus.records) {
    (test_groups.contains(r.iteration) ? halves.second : halves.first).records.push_back(r);
  }
  return halves;
}

namespace {

MdqaDocument parse_document(const nlohmann::json& j, bool contains_answer) {
  MdqaDocument doc;
  doc.title = j.at("title").get<std::string>();
  doc.body = j.at("body").get<std::string>();
  doc.contains_answer = contains_answer;
  return doc;
}

}  // namespace

std::vector<QaPoolEntry> parse_qa_pool(std::istream& in) {
  std::vector<QaPoolEntry> pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      QaPoolEntry entry;
      entry.question = j.at("question").get<std::string>();
      entry.answer_aliases = j.at("answers").get<std::vector<std::string>>();
      entry.gold_document = parse_document(j.at("gold"), true);
      for (const auto& d : j.at("distractors")) entry.distractors.push_back(parse_document(d, false));
      if (entry.answer_aliases.empty()) throw ValidationError("empty answers list");
      const bool gold_ok = std::any_of(entry.answer_aliases.begin(), entry.answer_aliases.end(),
                                       [&](const std::string& a) {
                                         return contains_normalized(entry.gold_document.body, a);
                                       });
      if (!gold_ok) throw ValidationError("gold document body contains no answer alias");
      for (const auto& d : entry.distractors) {
        for (const auto& a : entry.answer_aliases) {
          if (contains_normalized(d.body, a)) {
            throw ValidationError("distractor '" + d.title + "' contains answer '" + a + "'");
          }
        }
      }
      pool.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("QA pool line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("QA pool line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pool;
}

std::vector<QaPoolEntry> read_qa_pool(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open QA pool " + path.string());
  return parse_qa_pool(in);
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& r : corpus.records) {
    ordered_json j;
    j["prompt_id"] = r.prompt_id;
    j["task"] = to_string(r.task);
    j["iteration"] = r.iteration;
    j["n_items"] = r.n_items;
    j["gold_position"] = r.gold_position;
    j["gold_class"] = r.gold_class;
    j["answer"] = r.answer;
    j["answer_aliases"] = r.answer_aliases;
    j["text"] = r.text;
    out << j.dump() << '\n';
  }
}

void write_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_corpus_jsonl(corpus, out);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<PromptRecord> read_corpus_jsonl(std::istream& in) {
  std::vector<PromptRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PromptRecord r;
      r.prompt_id = j.at("prompt_id").get<std::string>();
      r.task = parse_task(j.at("task").get<std::string>());
      r.iteration = j.value("iteration", 0u);
      r.n_items = j.at("n_items").get<std::uint32_t>();
      r.gold_position = j.at("gold_position").get<std::uint32_t>();
      r.gold_class = j.at("gold_class").get<std::uint32_t>();
      r.answer = j.at("answer").get<std::string>();
      r.answer_aliases = j.at("answer_aliases").get<std::vector<std::string>>();
      r.text = j.at("text").get<std::string>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

std::vector<PromptRecord> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return read_corpus_jsonl(in);
}

}  // namespace probelens
