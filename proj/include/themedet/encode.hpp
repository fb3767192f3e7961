#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "themedet/types.hpp"

namespace themedet {

struct TfidfConfig {
  int ngram_min = 1;
  int ngram_max = 2;
  int min_df = 2;
  bool lowercase = true;
};

struct TfidfModel {
  std::map<std::string, std::size_t> vocabulary;  // ngram -> dense column index
  std::vector<double> idf;                        // aligned with column indices
  TfidfConfig config;
};

// idf(t) = ln((1+N)/(1+df(t))) + 1 over the given texts; ngrams below min_df
// are dropped. Empty vocabulary after thresholds is a DataError.
TfidfModel fit_tfidf(const std::vector<std::string>& texts, const TfidfConfig& config);

// Raw term counts weighted by idf, L2-normalized. Out-of-vocabulary ngrams are
// ignored; a text with no in-vocabulary ngrams yields the zero vector.
std::vector<float> transform_tfidf(const TfidfModel& model, const std::string& text);

VectorSet transform_tfidf_all(const TfidfModel& model, const std::vector<std::string>& ids,
                              const std::vector<std::string>& texts);

// Binary embedding store: magic "EMB1", u32le count, u32le dim, then per
// record u16le id length, id bytes, dim f32le values.
void save_embeddings(const VectorSet& vs, const std::string& path);
VectorSet load_embeddings(const std::string& path);

struct EncoderEndpoint {
  std::string host;
  int port = 80;
  std::string path = "/encode";
  int timeout_seconds = 30;
  int max_retries = 3;
};

// POSTs {"texts": [...]} batches and collects {"vectors": [[...]]}, order
// aligned with the input. Responses are cached by text within one call, so
// duplicate texts get identical vectors.
VectorSet fetch_embeddings(const EncoderEndpoint& endpoint, const std::vector<std::string>& ids,
                           const std::vector<std::string>& texts, std::size_t batch_size);

// Scales nonzero vectors to unit L2 norm in place; returns the number of zero
// vectors left untouched.
std::size_t l2_normalize(VectorSet& vs);

}  // namespace themedet
