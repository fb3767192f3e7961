#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "themedet/corpus.hpp"
#include "themedet/encode.hpp"
#include "themedet/evaluate.hpp"
#include "themedet/types.hpp"

namespace themedet {

// SHA-256 hex digests; stage caching is keyed by these.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

enum class Representation { Sentence, Srl };
enum class EncoderKind { Tfidf, EmbeddingFile, EncoderEndpoint };
enum class ClustererKind { KMeans, Hdbscan };

struct ElbowConfig {
  bool enabled = false;
  int k_start = 100;
  int k_step = 100;
  int k_max = 1000;
  int trials = 5;
};

struct KMeansConfig {
  int k = 700;  // the empirically determined default
  ElbowConfig elbow;
  int max_iter = 100;
  double tol = 1e-6;
  std::uint64_t seed = 7;
};

struct HdbscanConfig {
  int min_cluster_size = 5;
  int min_samples = 3;
};

struct RunConfig {
  std::string corpus_path;
  CorpusFormat corpus_format = CorpusFormat::Jsonl;

  int tag_min_support = 50;
  std::optional<std::string> tag_allowlist_path;

  double split_ratio = 0.8;
  std::uint64_t split_seed = 13;

  int max_n = 5;
  Representation representation = Representation::Sentence;
  std::string srl_path;    // required for the srl representation
  std::string coref_path;  // optional
  std::string lemma_lexicon_path = "data/lemmas.tsv";

  EncoderKind encoder = EncoderKind::Tfidf;
  std::string encoder_name = "tfidf";  // recorded in run metadata
  TfidfConfig tfidf;
  std::string embedding_file_path;
  EncoderEndpoint endpoint;
  std::size_t endpoint_batch_size = 32;

  ClustererKind clusterer = ClustererKind::KMeans;
  KMeansConfig kmeans;
  HdbscanConfig hdbscan;

  int report_top_m = 5;
  int report_top_n = 3;
  std::string out_dir = "out";
  int workers = 1;
};

// Declarative config file (JSON) with environment-variable overrides for
// paths and the encoder endpoint (THEMEDET_CORPUS_PATH, THEMEDET_OUT_DIR,
// THEMEDET_ENDPOINT_HOST, THEMEDET_ENDPOINT_PORT).
RunConfig load_run_config(const std::string& path);

struct RunManifest {
  std::map<std::string, std::string> config;          // flattened snapshot
  std::map<std::string, std::string> artifact_hashes; // stage -> sha256
  std::map<std::string, std::string> artifact_paths;
  std::map<std::string, double> timings_seconds;
  double micro_f1 = 0.0;
  std::string split_identity;  // hash tying comparable runs together

  std::string to_json() const;
  static RunManifest from_json_file(const std::string& path);
};

struct RunOutput {
  RunManifest manifest;
  EvalReport report;
};

enum class Stage { Ingest, Represent, Encode, Cluster, Evaluate };

// Parses a stage name ("ingest", ..., "evaluate"); unknown names are a
// ConfigError.
Stage parse_stage(const std::string& name);

// ingest -> represent -> encode -> cluster -> evaluate, with content-hash
// keyed caching of each stage under <out_dir>/cache. `until` stops the run
// after the named stage (the manifest is still written).
RunOutput run_pipeline(const RunConfig& config, Stage until = Stage::Evaluate);

struct ComparisonRow {
  std::string encoder;
  std::string clusterer;
  int max_n = 0;
  double micro_f1 = 0.0;
};

// Micro-F1 by (encoder, clusterer, max_n), sorted descending. Manifests from
// different splits are not comparable and raise a ConfigError.
std::vector<ComparisonRow> compare_runs(const std::vector<RunManifest>& manifests);
std::string comparison_table_text(const std::vector<ComparisonRow>& rows);

}  // namespace themedet
