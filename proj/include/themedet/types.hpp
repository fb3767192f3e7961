#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace themedet {

// Configuration / usage errors (CLI exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (CLI exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Question {
  std::string id;
  std::string body;
  std::vector<std::string> tags;  // sorted, unique, non-empty
  std::string created_at;         // ISO-8601
};

struct TagSet {
  std::vector<std::string> tags;  // descending frequency, lexicographic tie-break
  int min_support = 1;

  bool contains(const std::string& tag) const;
};

struct SplitCorpus {
  std::vector<Question> train;
  std::vector<Question> test;
  std::uint64_t seed = 0;
};

struct SentenceUnit {
  std::string sentence_id;  // "<question_id>#<position>"
  std::string question_id;
  int position = 0;  // 0-based sentence index within the question
  std::string text;
  std::vector<std::string> tags;  // inherited from the question
};

// Id-aligned vectors of uniform dimensionality. Values are stored as 32-bit
// floats (the on-disk format); distance math upcasts to double.
struct VectorSet {
  std::vector<std::string> ids;
  std::vector<std::vector<float>> vectors;
  bool normalized = false;

  std::size_t size() const { return ids.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : vectors.front().size(); }
};

}  // namespace themedet
