#include "themedet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "themedet/text.hpp"

namespace themedet {

using nlohmann::json;

bool TagSet::contains(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

namespace {

void normalize_tags(Question& q) {
  std::sort(q.tags.begin(), q.tags.end());
  q.tags.erase(std::unique(q.tags.begin(), q.tags.end()), q.tags.end());
}

Question question_from_json(const json& rec, std::size_t line_no) {
  auto fail = [line_no](const std::string& what) -> DataError {
    return DataError("line " + std::to_string(line_no) + ": " + what);
  };
  if (!rec.is_object()) throw fail("record is not an object");
  for (const char* field : {"id", "body", "tags", "created_at"})
    if (!rec.contains(field)) throw fail(std::string("missing field `") + field + "`");
  Question q;
  if (!rec["id"].is_string()) throw fail("`id` must be a string");
  q.id = rec["id"].get<std::string>();
  if (!rec["body"].is_string()) throw fail("`body` must be a string");
  q.body = rec["body"].get<std::string>();
  if (!rec["tags"].is_array()) throw fail("`tags` must be an array");
  for (const auto& t : rec["tags"]) {
    if (!t.is_string()) throw fail("`tags` entries must be strings");
    q.tags.push_back(t.get<std::string>());
  }
  if (q.tags.empty()) throw fail("`tags` must be non-empty");
  if (!rec["created_at"].is_string()) throw fail("`created_at` must be a string");
  q.created_at = rec["created_at"].get<std::string>();
  normalize_tags(q);
  return q;
}

// RFC-4180-ish: quoted fields, doubled quotes, no embedded newlines.
std::vector<std::string> parse_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted)
    throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<Question> load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);

  std::vector<Question> corpus;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;

  auto add = [&](Question q, std::size_t at_line) {
    if (!seen_ids.insert(q.id).second)
      throw DataError("duplicate question id `" + q.id + "` at line " + std::to_string(at_line));
    corpus.push_back(std::move(q));
  };

  if (format == CorpusFormat::Jsonl) {
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
      }
      add(question_from_json(rec, line_no), line_no);
    }
  } else {
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path);
    ++line_no;
    auto header = parse_csv_line(line, line_no);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
    for (const char* field : {"id", "body", "tags", "created_at"})
      if (!col.count(field))
        throw DataError("CSV header missing column `" + std::string(field) + "`");
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto fields = parse_csv_line(line, line_no);
      if (fields.size() < header.size())
        throw DataError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " columns, got " +
                        std::to_string(fields.size()));
      Question q;
      q.id = fields[col["id"]];
      q.body = fields[col["body"]];
      q.created_at = fields[col["created_at"]];
      std::stringstream tags(fields[col["tags"]]);
      std::string tag;
      while (std::getline(tags, tag, '|'))
        if (!tag.empty()) q.tags.push_back(tag);
      if (q.tags.empty())
        throw DataError("line " + std::to_string(line_no) + ": `tags` must be non-empty");
      normalize_tags(q);
      add(std::move(q), line_no);
    }
  }
  return corpus;
}

TagSet select_tags(const std::vector<Question>& corpus, int min_support,
                   const std::optional<std::vector<std::string>>& allowlist) {
  if (min_support < 1) throw ConfigError("min_support must be >= 1");
  std::map<std::string, int> freq;
  for (const auto& q : corpus)
    for (const auto& t : q.tags) ++freq[t];

  std::optional<std::set<std::string>> allowed;
  if (allowlist) allowed.emplace(allowlist->begin(), allowlist->end());

  std::vector<std::pair<std::string, int>> kept;
  for (const auto& [tag, count] : freq) {
    if (count < min_support) continue;
    if (allowed && !allowed->count(tag)) continue;
    kept.emplace_back(tag, count);
  }
  if (kept.empty()) throw DataError("no tags meet support");

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  TagSet out;
  out.min_support = min_support;
  for (auto& [tag, count] : kept) out.tags.push_back(std::move(tag));
  return out;
}

SplitCorpus split_train_test(const std::vector<Question>& corpus, const TagSet& tagset,
                             double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must be in (0, 1)");

  std::map<std::string, const Question*> by_id;
  for (const auto& q : corpus) by_id[q.id] = &q;

  // Shuffle sorted ids so the split depends only on id content and seed.
  std::vector<std::string> ids;
  ids.reserve(by_id.size());
  for (const auto& [id, q] : by_id) ids.push_back(id);
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng() % i]);

  const std::size_t n_train =
      static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(ids.size())));

  SplitCorpus split;
  split.seed = seed;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Question& q = *by_id[ids[i]];
    if (i < n_train) {
      Question kept = q;
      std::erase_if(kept.tags, [&](const std::string& t) { return !tagset.contains(t); });
      if (!kept.tags.empty()) split.train.push_back(std::move(kept));
    } else {
      if (q.tags.size() == 1 && tagset.contains(q.tags.front()))
        split.test.push_back(q);
    }
  }
  if (split.train.empty()) throw DataError("train split empty after tag filtering");
  if (split.test.empty()) throw DataError("test split empty after single-tag filtering");

  auto by_id_order = [](const Question& a, const Question& b) { return a.id < b.id; };
  std::sort(split.train.begin(), split.train.end(), by_id_order);
  std::sort(split.test.begin(), split.test.end(), by_id_order);
  return split;
}

std::vector<SentenceUnit> extract_sentence_units(const std::vector<Question>& questions,
                                                 const Segmenter& segmenter, int max_n) {
  if (max_n < 1) throw ConfigError("max_n must be >= 1");
  std::vector<SentenceUnit> units;
  for (const auto& q : questions) {
    auto sentences = segmenter(strip_html(q.body));
    if (sentences.empty()) {
      std::cerr << "warning: question " << q.id << " segments to 0 sentences, skipped\n";
      continue;
    }
    const int n = std::min<int>(max_n, static_cast<int>(sentences.size()));
    for (int i = 0; i < n; ++i) {
      SentenceUnit u;
      u.question_id = q.id;
      u.position = i;
      u.sentence_id = q.id + "#" + std::to_string(i);
      u.text = sentences[static_cast<std::size_t>(i)];
      u.tags = q.tags;
      units.push_back(std::move(u));
    }
  }
  return units;
}

void write_split_manifest(const SplitCorpus& split, std::ostream& out) {
  for (const auto& q : split.train)
    out << json{{"id", q.id}, {"split", "train"}}.dump() << "\n";
  for (const auto& q : split.test)
    out << json{{"id", q.id}, {"split", "test"}}.dump() << "\n";
}

}  // namespace themedet
