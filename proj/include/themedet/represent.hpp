#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "themedet/types.hpp"

namespace themedet {

// Rule-based sentence segmentation: terminators . ! ? followed by whitespace
// and a capital/digit, with an abbreviation list and a decimal-number guard.
std::vector<std::string> segment(const std::string& text);

struct Mention {
  int sentence_index = 0;
  int start = 0;  // byte offsets into the sentence
  int end = 0;    // exclusive
  std::string text;
  bool is_antecedent = false;
  bool is_human = false;
};

// >=2 mentions, exactly one marked antecedent (the earliest non-pronominal).
using CorefChain = std::vector<Mention>;

struct QuestionCoref {
  std::string question_id;
  std::vector<CorefChain> chains;
};

// Replaces non-personal pronominal mentions with their chain's antecedent
// text. Personal pronouns and mentions whose span no longer matches the text
// are left alone, which also makes the operation idempotent.
std::vector<std::string> resolve_pronouns(const std::vector<std::string>& sentences,
                                          const std::vector<CorefChain>& chains);

struct TokenSpan {
  std::string text;
  int start = 0;
  int end = 0;  // exclusive byte offset into source_text
};

struct SrlArgument {
  std::string role;  // e.g. ARG0, ARG1, ARGM-ADV
  TokenSpan span;
  std::string head_pos;  // UPOS or Penn tag of the argument head
};

struct SrlParse {
  std::string sentence_id;
  TokenSpan predicate;
  std::vector<SrlArgument> arguments;
  std::string source_text;
};

struct ReducedString {
  std::string sentence_id;
  std::string text;  // "(arg, predicate, arg, ...)" lemmatized + lowercased
};

// Exception table from a TSV file plus regular inflection rules; unknown
// tokens pass through unchanged.
class Lemmatizer {
 public:
  Lemmatizer() = default;
  static Lemmatizer from_file(const std::string& tsv_path);
  static Lemmatizer from_pairs(std::vector<std::pair<std::string, std::string>> pairs);

  std::string lemma(const std::string& token) const;

 private:
  std::unordered_map<std::string, std::string> table_;
};

// Drops adverb/adjective-headed arguments, lemmatizes and lowercases, and
// renders the predicate in span order among the surviving arguments. Returns
// nullopt (Discard) when no subject/object argument has a nominal head.
std::optional<ReducedString> reduce_parse(const SrlParse& parse, const Lemmatizer& lemmatizer);

// For <subject, need|want, to-infinitive> sentences parsed twice, drops the
// parse headed by the embedded verb and keeps the need/want parse.
std::vector<SrlParse> filter_infinitive_complements(const std::vector<SrlParse>& parses);

// JSONL loaders for the annotation files.
std::vector<SrlParse> load_srl_file(const std::string& path);
std::vector<QuestionCoref> load_coref_file(const std::string& path);

}  // namespace themedet
