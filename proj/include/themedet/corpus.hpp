#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "themedet/types.hpp"

namespace themedet {

enum class CorpusFormat { Jsonl, Csv };

// One object/row per question: id, body, tags (CSV: pipe-delimited), created_at.
// Malformed records and duplicate ids are DataErrors naming the line/id.
std::vector<Question> load_corpus(const std::string& path, CorpusFormat format);

// Tags with >= min_support occurrences, optionally intersected with an
// allowlist, ordered by descending frequency then lexicographically.
TagSet select_tags(const std::vector<Question>& corpus, int min_support,
                   const std::optional<std::vector<std::string>>& allowlist = std::nullopt);

// Seeded shuffle of ids, first ceil(ratio*N) become train. Train keeps
// questions with >=1 allowlisted tag (non-allowlisted tags dropped from the
// tag set); test keeps only questions whose full tag set is exactly one
// allowlisted tag.
SplitCorpus split_train_test(const std::vector<Question>& corpus, const TagSet& tagset,
                             double ratio, std::uint64_t seed);

using Segmenter = std::function<std::vector<std::string>(const std::string&)>;

// First min(max_n, sentence count) sentences of each question, in order.
// Bodies are HTML-stripped before segmentation. Questions segmenting to zero
// sentences are skipped (warning on stderr).
std::vector<SentenceUnit> extract_sentence_units(const std::vector<Question>& questions,
                                                 const Segmenter& segmenter, int max_n);

// JSONL of {id, split} for reproducibility audits.
void write_split_manifest(const SplitCorpus& split, std::ostream& out);

}  // namespace themedet
