#include "themedet/encode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "themedet/text.hpp"

namespace themedet {

using nlohmann::json;

namespace {

std::vector<std::string> ngrams_of(const std::string& text, const TfidfConfig& cfg) {
  auto tokens = tokenize_words(cfg.lowercase ? to_lower(text) : text);
  std::vector<std::string> grams;
  for (int n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
    if (n < 1 || static_cast<std::size_t>(n) > tokens.size()) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string g = tokens[i];
      for (std::size_t j = 1; j < static_cast<std::size_t>(n); ++j) g += " " + tokens[i + j];
      grams.push_back(std::move(g));
    }
  }
  return grams;
}

}  // namespace

TfidfModel fit_tfidf(const std::vector<std::string>& texts, const TfidfConfig& config) {
  if (texts.empty()) throw DataError("fit_tfidf: no input texts");
  if (config.ngram_min < 1 || config.ngram_max < config.ngram_min)
    throw ConfigError("invalid ngram range");

  std::map<std::string, std::size_t> df;
  for (const auto& text : texts) {
    std::set<std::string> seen;
    for (auto& g : ngrams_of(text, config)) seen.insert(std::move(g));
    for (const auto& g : seen) ++df[g];
  }

  TfidfModel model;
  model.config = config;
  const double n_docs = static_cast<double>(texts.size());
  for (const auto& [gram, count] : df) {
    if (static_cast<int>(count) < config.min_df) continue;
    std::size_t col = model.vocabulary.size();
    model.vocabulary.emplace(gram, col);
    model.idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  if (model.vocabulary.empty()) throw DataError("fit_tfidf: empty vocabulary after thresholds");
  return model;
}

std::vector<float> transform_tfidf(const TfidfModel& model, const std::string& text) {
  std::vector<double> weights(model.idf.size(), 0.0);
  for (const auto& g : ngrams_of(text, model.config)) {
    auto it = model.vocabulary.find(g);
    if (it != model.vocabulary.end()) weights[it->second] += model.idf[it->second];
  }
  double norm_sq = 0.0;
  for (double w : weights) norm_sq += w * w;
  const double norm = std::sqrt(norm_sq);
  std::vector<float> out(weights.size(), 0.0f);
  if (norm > 0.0)
    for (std::size_t i = 0; i < weights.size(); ++i)
      out[i] = static_cast<float>(weights[i] / norm);
  return out;
}

VectorSet transform_tfidf_all(const TfidfModel& model, const std::vector<std::string>& ids,
                              const std::vector<std::string>& texts) {
  if (ids.size() != texts.size()) throw ConfigError("transform_tfidf_all: ids/texts mismatch");
  VectorSet vs;
  vs.ids = ids;
  vs.normalized = true;
  vs.vectors.reserve(texts.size());
  for (const auto& t : texts) vs.vectors.push_back(transform_tfidf(model, t));
  return vs;
}

namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

void save_embeddings(const VectorSet& vs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open embedding file for writing: " + path);
  out.write("EMB1", 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(vs.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(vs.dim()));
  for (std::size_t r = 0; r < vs.size(); ++r) {
    const std::string& id = vs.ids[r];
    write_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float f : vs.vectors[r]) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      write_le<std::uint32_t>(out, bits);
    }
  }
  if (!out) throw DataError("write failed: " + path);
}

VectorSet load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "EMB1", 4) != 0)
    throw DataError("unknown magic bytes in embedding file: " + path);
  const auto count = read_le<std::uint32_t>(in);
  const auto dim = read_le<std::uint32_t>(in);
  if (!in) throw DataError("truncated embedding file header: " + path);

  VectorSet vs;
  vs.ids.reserve(count);
  vs.vectors.reserve(count);
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto id_len = read_le<std::uint16_t>(in);
    std::string id(id_len, '\0');
    in.read(id.data(), id_len);
    std::vector<float> vec(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
      std::uint32_t bits = read_le<std::uint32_t>(in);
      std::memcpy(&vec[d], &bits, 4);
    }
    if (!in)
      throw DataError("embedding file " + path + ": truncated record " + std::to_string(r) +
                      (id.empty() ? "" : " (id `" + id + "`)"));
    vs.ids.push_back(std::move(id));
    vs.vectors.push_back(std::move(vec));
  }
  return vs;
}

VectorSet fetch_embeddings(const EncoderEndpoint& endpoint, const std::vector<std::string>& ids,
                           const std::vector<std::string>& texts, std::size_t batch_size) {
  if (ids.size() != texts.size()) throw ConfigError("fetch_embeddings: ids/texts mismatch");
  if (batch_size == 0) throw ConfigError("fetch_embeddings: batch_size must be > 0");

  httplib::Client client(endpoint.host, endpoint.port);
  client.set_connection_timeout(endpoint.timeout_seconds);
  client.set_read_timeout(endpoint.timeout_seconds);

  std::unordered_map<std::string, std::vector<float>> cache;
  VectorSet vs;
  vs.ids = ids;
  vs.vectors.resize(texts.size());

  // Unique uncached texts, in first-appearance order.
  std::vector<std::string> pending;
  for (const auto& t : texts)
    if (!cache.count(t)) {
      cache.emplace(t, std::vector<float>{});
      pending.push_back(t);
    }
  cache.clear();

  std::size_t expected_dim = 0;
  for (std::size_t off = 0; off < pending.size(); off += batch_size) {
    const std::size_t n = std::min(batch_size, pending.size() - off);
    json req;
    req["texts"] = json::array();
    for (std::size_t i = 0; i < n; ++i) req["texts"].push_back(pending[off + i]);

    json resp_json;
    bool ok = false;
    for (int attempt = 0; attempt <= endpoint.max_retries && !ok; ++attempt) {
      auto resp = client.Post(endpoint.path, req.dump(), "application/json");
      if (!resp || resp->status != 200) continue;
      try {
        resp_json = json::parse(resp->body);
        ok = resp_json.contains("vectors") && resp_json["vectors"].is_array() &&
             resp_json["vectors"].size() == n;
      } catch (const json::parse_error&) {
        ok = false;
      }
    }
    if (!ok) {
      std::string range = std::to_string(off) + ".." + std::to_string(off + n - 1);
      throw DataError("encoder endpoint failed after " + std::to_string(endpoint.max_retries + 1) +
                      " attempts for batch indices " + range);
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<float> vec;
      for (const auto& v : resp_json["vectors"][i]) vec.push_back(v.get<float>());
      if (expected_dim == 0) expected_dim = vec.size();
      if (vec.size() != expected_dim)
        throw DataError("encoder endpoint dimension disagreement: expected " +
                        std::to_string(expected_dim) + ", got " + std::to_string(vec.size()));
      cache[pending[off + i]] = std::move(vec);
    }
  }

  for (std::size_t i = 0; i < texts.size(); ++i) vs.vectors[i] = cache[texts[i]];
  return vs;
}

std::size_t l2_normalize(VectorSet& vs) {
  std::size_t zero_count = 0;
  for (auto& vec : vs.vectors) {
    double norm_sq = 0.0;
    for (float f : vec) norm_sq += static_cast<double>(f) * static_cast<double>(f);
    if (norm_sq == 0.0) {
      ++zero_count;
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& f : vec) f = static_cast<float>(static_cast<double>(f) * inv);
  }
  vs.normalized = true;
  return zero_count;
}

}  // namespace themedet
