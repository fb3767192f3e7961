#include "themedet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "themedet/corpus.hpp"
#include "themedet/hdbscan.hpp"
#include "themedet/model_io.hpp"
#include "themedet/represent.hpp"
#include "themedet/text.hpp"

namespace themedet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

namespace {

std::string env_or(const char* var, const std::string& fallback) {
  const char* v = std::getenv(var);
  return v ? std::string(v) : fallback;
}

std::string short_key(const std::string& hash) { return hash.substr(0, 16); }

struct StageTimer {
  std::map<std::string, double>& sink;
  std::string stage;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  StageTimer(std::map<std::string, double>& s, std::string name) : sink(s), stage(std::move(name)) {}
  ~StageTimer() {
    sink[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void write_units_jsonl(const std::vector<SentenceUnit>& units, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& u : units)
    out << json{{"sentence_id", u.sentence_id},
                {"question_id", u.question_id},
                {"position", u.position},
                {"text", u.text},
                {"tags", u.tags}}
               .dump()
        << "\n";
}

std::vector<SentenceUnit> read_units_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open units file: " + path);
  std::vector<SentenceUnit> units;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    SentenceUnit u;
    u.sentence_id = rec["sentence_id"].get<std::string>();
    u.question_id = rec["question_id"].get<std::string>();
    u.position = rec["position"].get<int>();
    u.text = rec["text"].get<std::string>();
    u.tags = rec["tags"].get<std::vector<std::string>>();
    units.push_back(std::move(u));
  }
  return units;
}

// SRL track: cap sentences first, then reduce each sentence's surviving
// parses; every reduced parse becomes its own unit.
std::vector<SentenceUnit> reduce_units_with_srl(const std::vector<SentenceUnit>& sentence_units,
                                                const RunConfig& config) {
  auto parses = load_srl_file(config.srl_path);
  std::map<std::string, std::vector<SrlParse>> parses_by_sentence;
  for (auto& p : parses) parses_by_sentence[p.sentence_id].push_back(std::move(p));
  const auto lemmatizer = Lemmatizer::from_file(config.lemma_lexicon_path);

  std::vector<SentenceUnit> reduced;
  for (const auto& u : sentence_units) {
    auto it = parses_by_sentence.find(u.sentence_id);
    if (it == parses_by_sentence.end()) continue;
    auto kept = filter_infinitive_complements(it->second);
    int index = 0;
    for (const auto& p : kept) {
      auto r = reduce_parse(p, lemmatizer);
      if (!r) continue;
      SentenceUnit ru = u;
      ru.sentence_id = u.sentence_id + "#p" + std::to_string(index++);
      ru.text = r->text;
      reduced.push_back(std::move(ru));
    }
  }
  return reduced;
}

std::vector<SentenceUnit> build_units(const std::vector<Question>& questions,
                                      const RunConfig& config,
                                      const std::vector<QuestionCoref>& corefs) {
  std::map<std::string, const QuestionCoref*> coref_of;
  for (const auto& c : corefs) coref_of[c.question_id] = &c;

  Segmenter segmenter = segment;
  std::vector<SentenceUnit> units = extract_sentence_units(questions, segmenter, config.max_n);

  if (!corefs.empty()) {
    // Coref chains are question-scoped over the segmented sentences.
    std::map<std::string, std::vector<SentenceUnit*>> by_question;
    for (auto& u : units) by_question[u.question_id].push_back(&u);
    for (auto& [qid, qunits] : by_question) {
      auto it = coref_of.find(qid);
      if (it == coref_of.end()) continue;
      std::sort(qunits.begin(), qunits.end(),
                [](const SentenceUnit* a, const SentenceUnit* b) { return a->position < b->position; });
      std::vector<std::string> sentences;
      for (const auto* u : qunits) sentences.push_back(u->text);
      auto resolved = resolve_pronouns(sentences, it->second->chains);
      for (std::size_t i = 0; i < qunits.size(); ++i) qunits[i]->text = resolved[i];
    }
  }

  if (config.representation == Representation::Srl)
    return reduce_units_with_srl(units, config);
  return units;
}

VectorSet vectors_from_store(const VectorSet& store, const std::vector<SentenceUnit>& units) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < store.size(); ++i) index[store.ids[i]] = i;
  VectorSet out;
  out.normalized = store.normalized;
  for (const auto& u : units) {
    auto it = index.find(u.sentence_id);
    if (it == index.end())
      throw DataError("embedding store has no vector for sentence " + u.sentence_id);
    out.ids.push_back(u.sentence_id);
    out.vectors.push_back(store.vectors[it->second]);
  }
  return out;
}

Matrix to_matrix(const std::vector<std::vector<float>>& vecs) {
  Matrix m;
  m.reserve(vecs.size());
  for (const auto& v : vecs) m.emplace_back(v.begin(), v.end());
  return m;
}

bool is_zero_vec(const std::vector<float>& v) {
  for (float f : v)
    if (f != 0.0f) return false;
  return true;
}

std::string config_fingerprint(const std::map<std::string, std::string>& snapshot) {
  json j(snapshot);
  return sha256_hex(j.dump());
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  RunConfig c;
  try {
    const auto& corpus = j.at("corpus");
    c.corpus_path = corpus.at("path").get<std::string>();
    const std::string fmt = corpus.value("format", "jsonl");
    if (fmt == "jsonl") c.corpus_format = CorpusFormat::Jsonl;
    else if (fmt == "csv") c.corpus_format = CorpusFormat::Csv;
    else throw ConfigError("unknown corpus format: " + fmt);

    if (j.contains("tags")) {
      c.tag_min_support = j["tags"].value("min_support", 50);
      if (j["tags"].contains("allowlist_path") && !j["tags"]["allowlist_path"].is_null())
        c.tag_allowlist_path = j["tags"]["allowlist_path"].get<std::string>();
    }
    if (j.contains("split")) {
      c.split_ratio = j["split"].value("ratio", 0.8);
      c.split_seed = j["split"].value("seed", 13ULL);
    }
    c.max_n = j.value("max_n", 5);
    if (c.max_n < 1 || c.max_n > 5) throw ConfigError("max_n must be in 1..5");

    const std::string rep = j.value("representation", "sentence");
    if (rep == "sentence") c.representation = Representation::Sentence;
    else if (rep == "srl") c.representation = Representation::Srl;
    else throw ConfigError("unknown representation: " + rep);
    if (j.contains("srl")) {
      c.srl_path = j["srl"].value("annotations_path", "");
      c.coref_path = j["srl"].value("coref_path", "");
      c.lemma_lexicon_path = j["srl"].value("lemma_lexicon_path", c.lemma_lexicon_path);
    }
    if (c.representation == Representation::Srl && c.srl_path.empty())
      throw ConfigError("srl representation requires srl.annotations_path");

    const auto& enc = j.at("encoder");
    const std::string kind = enc.at("kind").get<std::string>();
    if (kind == "tfidf") {
      c.encoder = EncoderKind::Tfidf;
      c.encoder_name = "tfidf";
      if (enc.contains("tfidf")) {
        c.tfidf.ngram_min = enc["tfidf"].value("ngram_min", 1);
        c.tfidf.ngram_max = enc["tfidf"].value("ngram_max", 2);
        c.tfidf.min_df = enc["tfidf"].value("min_df", 2);
        c.tfidf.lowercase = enc["tfidf"].value("lowercase", true);
      }
    } else if (kind == "embedding-file") {
      c.encoder = EncoderKind::EmbeddingFile;
      c.embedding_file_path = enc.at("path").get<std::string>();
      c.encoder_name = enc.value("name", "embedding-file");
    } else if (kind == "encoder-endpoint") {
      c.encoder = EncoderKind::EncoderEndpoint;
      c.endpoint.host = enc.at("host").get<std::string>();
      c.endpoint.port = enc.value("port", 80);
      c.endpoint.path = enc.value("path", "/encode");
      c.endpoint.timeout_seconds = enc.value("timeout_seconds", 30);
      c.endpoint.max_retries = enc.value("max_retries", 3);
      c.endpoint_batch_size = enc.value("batch_size", 32U);
      c.encoder_name = enc.value("name", "encoder-endpoint");
    } else {
      throw ConfigError("unknown encoder kind: " + kind);
    }

    const auto& clu = j.at("clusterer");
    const std::string ckind = clu.at("kind").get<std::string>();
    if (ckind == "kmeans") {
      c.clusterer = ClustererKind::KMeans;
      if (clu.contains("kmeans")) {
        const auto& km = clu["kmeans"];
        c.kmeans.k = km.value("k", 700);
        c.kmeans.max_iter = km.value("max_iter", 100);
        c.kmeans.tol = km.value("tol", 1e-6);
        c.kmeans.seed = km.value("seed", 7ULL);
        if (km.contains("elbow")) {
          const auto& el = km["elbow"];
          c.kmeans.elbow.enabled = el.value("enabled", false);
          c.kmeans.elbow.k_start = el.value("k_start", 100);
          c.kmeans.elbow.k_step = el.value("k_step", 100);
          c.kmeans.elbow.k_max = el.value("k_max", 1000);
          c.kmeans.elbow.trials = el.value("trials", 5);
        }
      }
    } else if (ckind == "hdbscan") {
      c.clusterer = ClustererKind::Hdbscan;
      if (clu.contains("hdbscan")) {
        c.hdbscan.min_cluster_size = clu["hdbscan"].value("min_cluster_size", 5);
        c.hdbscan.min_samples = clu["hdbscan"].value("min_samples", 3);
      }
    } else {
      throw ConfigError("unknown clusterer kind: " + ckind);
    }

    if (j.contains("report")) {
      c.report_top_m = j["report"].value("top_m", 5);
      c.report_top_n = j["report"].value("top_n", 3);
    }
    c.out_dir = j.value("out_dir", "out");
    c.workers = j.value("workers", 1);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }

  c.corpus_path = env_or("THEMEDET_CORPUS_PATH", c.corpus_path);
  c.out_dir = env_or("THEMEDET_OUT_DIR", c.out_dir);
  c.endpoint.host = env_or("THEMEDET_ENDPOINT_HOST", c.endpoint.host);
  if (const char* p = std::getenv("THEMEDET_ENDPOINT_PORT")) c.endpoint.port = std::atoi(p);
  return c;
}

std::string RunManifest::to_json() const {
  json j;
  j["config"] = config;
  j["artifact_hashes"] = artifact_hashes;
  j["artifact_paths"] = artifact_paths;
  j["timings_seconds"] = timings_seconds;
  j["micro_f1"] = micro_f1;
  j["split_identity"] = split_identity;
  return j.dump(2);
}

RunManifest RunManifest::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j = json::parse(in);
  RunManifest m;
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  m.artifact_hashes = j.at("artifact_hashes").get<std::map<std::string, std::string>>();
  m.artifact_paths = j.at("artifact_paths").get<std::map<std::string, std::string>>();
  m.timings_seconds = j.at("timings_seconds").get<std::map<std::string, double>>();
  m.micro_f1 = j.at("micro_f1").get<double>();
  m.split_identity = j.at("split_identity").get<std::string>();
  return m;
}

Stage parse_stage(const std::string& name) {
  if (name == "ingest") return Stage::Ingest;
  if (name == "represent") return Stage::Represent;
  if (name == "encode") return Stage::Encode;
  if (name == "cluster") return Stage::Cluster;
  if (name == "evaluate") return Stage::Evaluate;
  throw ConfigError("unknown stage: " + name);
}

RunOutput run_pipeline(const RunConfig& config, Stage until) {
  RunOutput out;
  RunManifest& manifest = out.manifest;
  const fs::path out_dir(config.out_dir);
  const fs::path cache_dir = out_dir / "cache";
  fs::create_directories(cache_dir);

  // Config snapshot (ordered, stringly — goes into the manifest verbatim).
  auto& snap = manifest.config;
  snap["corpus_path"] = config.corpus_path;
  snap["corpus_format"] = config.corpus_format == CorpusFormat::Jsonl ? "jsonl" : "csv";
  snap["tag_min_support"] = std::to_string(config.tag_min_support);
  snap["tag_allowlist_path"] = config.tag_allowlist_path.value_or("");
  snap["split_ratio"] = std::to_string(config.split_ratio);
  snap["split_seed"] = std::to_string(config.split_seed);
  snap["max_n"] = std::to_string(config.max_n);
  snap["representation"] = config.representation == Representation::Srl ? "srl" : "sentence";
  snap["encoder"] = config.encoder_name;
  snap["clusterer"] = config.clusterer == ClustererKind::KMeans ? "kmeans" : "hdbscan";
  if (config.clusterer == ClustererKind::KMeans) {
    snap["kmeans_seed"] = std::to_string(config.kmeans.seed);
    snap["kmeans_k"] = std::to_string(config.kmeans.k);
    snap["kmeans_elbow"] = config.kmeans.elbow.enabled ? "true" : "false";
  } else {
    snap["hdbscan_min_cluster_size"] = std::to_string(config.hdbscan.min_cluster_size);
    snap["hdbscan_min_samples"] = std::to_string(config.hdbscan.min_samples);
  }
  if (config.encoder == EncoderKind::Tfidf) {
    snap["tfidf_ngram_min"] = std::to_string(config.tfidf.ngram_min);
    snap["tfidf_ngram_max"] = std::to_string(config.tfidf.ngram_max);
    snap["tfidf_min_df"] = std::to_string(config.tfidf.min_df);
  }

  const auto finish = [&]() -> RunOutput {
    manifest.config["config_fingerprint"] = config_fingerprint(snap);
    const fs::path manifest_path = out_dir / "manifest.json";
    std::ofstream(manifest_path, std::ios::binary) << manifest.to_json() << "\n";
    manifest.artifact_paths["manifest"] = manifest_path.string();
    return out;
  };

  // ---- ingest ----------------------------------------------------------
  const std::string corpus_hash = sha256_file(config.corpus_path);
  SplitCorpus split;
  TagSet tagset;
  {
    StageTimer timer(manifest.timings_seconds, "ingest");
    auto corpus = load_corpus(config.corpus_path, config.corpus_format);
    std::optional<std::vector<std::string>> allowlist;
    if (config.tag_allowlist_path) {
      std::ifstream in(*config.tag_allowlist_path);
      if (!in) throw DataError("ingest: cannot open tag allowlist: " + *config.tag_allowlist_path);
      allowlist.emplace();
      std::string tag;
      while (std::getline(in, tag))
        if (!trim(tag).empty()) allowlist->push_back(trim(tag));
    }
    try {
      tagset = select_tags(corpus, config.tag_min_support, allowlist);
      split = split_train_test(corpus, tagset, config.split_ratio, config.split_seed);
    } catch (const std::exception& e) {
      throw DataError(std::string("ingest: ") + e.what());
    }
  }
  const std::string ingest_key =
      sha256_hex(corpus_hash + "|" + std::to_string(config.tag_min_support) + "|" +
                 config.tag_allowlist_path.value_or("") + "|" + std::to_string(config.split_ratio) +
                 "|" + std::to_string(config.split_seed));
  const fs::path split_path = cache_dir / ("split-" + short_key(ingest_key) + ".jsonl");
  if (!fs::exists(split_path)) {
    std::ofstream sm(split_path, std::ios::binary);
    write_split_manifest(split, sm);
  }
  manifest.artifact_paths["split"] = split_path.string();
  manifest.artifact_hashes["split"] = sha256_file(split_path.string());
  manifest.split_identity = sha256_hex(corpus_hash + "|" + manifest.artifact_hashes["split"]);
  if (until == Stage::Ingest) return finish();

  // ---- represent -------------------------------------------------------
  std::string represent_key = ingest_key + "|" + std::to_string(config.max_n) + "|" +
                              snap["representation"];
  if (config.representation == Representation::Srl) {
    represent_key += "|" + sha256_file(config.srl_path);
    represent_key += "|" + (config.coref_path.empty() ? "-" : sha256_file(config.coref_path));
    represent_key += "|" + sha256_file(config.lemma_lexicon_path);
  }
  represent_key = sha256_hex(represent_key);
  const fs::path train_units_path = cache_dir / ("units_train-" + short_key(represent_key) + ".jsonl");
  const fs::path test_units_path = cache_dir / ("units_test-" + short_key(represent_key) + ".jsonl");

  std::vector<SentenceUnit> train_units, test_units;
  {
    StageTimer timer(manifest.timings_seconds, "represent");
    try {
      if (fs::exists(train_units_path) && fs::exists(test_units_path)) {
        train_units = read_units_jsonl(train_units_path.string());
        test_units = read_units_jsonl(test_units_path.string());
      } else {
        std::vector<QuestionCoref> corefs;
        if (!config.coref_path.empty()) corefs = load_coref_file(config.coref_path);
        train_units = build_units(split.train, config, corefs);
        test_units = build_units(split.test, config, corefs);
        write_units_jsonl(train_units, train_units_path.string());
        write_units_jsonl(test_units, test_units_path.string());
      }
    } catch (const std::exception& e) {
      throw DataError(std::string("represent: ") + e.what());
    }
  }
  manifest.artifact_paths["units_train"] = train_units_path.string();
  manifest.artifact_hashes["units_train"] = sha256_file(train_units_path.string());
  manifest.artifact_paths["units_test"] = test_units_path.string();
  manifest.artifact_hashes["units_test"] = sha256_file(test_units_path.string());
  if (until == Stage::Represent) return finish();

  // ---- encode ----------------------------------------------------------
  std::string encode_key = represent_key + "|" + config.encoder_name;
  if (config.encoder == EncoderKind::Tfidf)
    encode_key += "|" + std::to_string(config.tfidf.ngram_min) + "," +
                  std::to_string(config.tfidf.ngram_max) + "," + std::to_string(config.tfidf.min_df) +
                  "," + (config.tfidf.lowercase ? "1" : "0");
  else if (config.encoder == EncoderKind::EmbeddingFile)
    encode_key += "|" + sha256_file(config.embedding_file_path);
  else
    encode_key += "|" + config.endpoint.host + ":" + std::to_string(config.endpoint.port) +
                  config.endpoint.path;
  encode_key = sha256_hex(encode_key);
  const fs::path train_emb_path = cache_dir / ("vectors_train-" + short_key(encode_key) + ".emb");
  const fs::path test_emb_path = cache_dir / ("vectors_test-" + short_key(encode_key) + ".emb");

  VectorSet train_vecs, test_vecs;
  {
    StageTimer timer(manifest.timings_seconds, "encode");
    try {
      if (fs::exists(train_emb_path) && fs::exists(test_emb_path)) {
        train_vecs = load_embeddings(train_emb_path.string());
        test_vecs = load_embeddings(test_emb_path.string());
      } else {
        std::vector<std::string> train_ids, train_texts, test_ids, test_texts;
        for (const auto& u : train_units) {
          train_ids.push_back(u.sentence_id);
          train_texts.push_back(u.text);
        }
        for (const auto& u : test_units) {
          test_ids.push_back(u.sentence_id);
          test_texts.push_back(u.text);
        }
        if (config.encoder == EncoderKind::Tfidf) {
          auto model = fit_tfidf(train_texts, config.tfidf);
          train_vecs = transform_tfidf_all(model, train_ids, train_texts);
          test_vecs = transform_tfidf_all(model, test_ids, test_texts);
        } else if (config.encoder == EncoderKind::EmbeddingFile) {
          auto store = load_embeddings(config.embedding_file_path);
          train_vecs = vectors_from_store(store, train_units);
          test_vecs = vectors_from_store(store, test_units);
        } else {
          train_vecs = fetch_embeddings(config.endpoint, train_ids, train_texts,
                                        config.endpoint_batch_size);
          test_vecs = fetch_embeddings(config.endpoint, test_ids, test_texts,
                                       config.endpoint_batch_size);
        }
        l2_normalize(train_vecs);
        l2_normalize(test_vecs);
        save_embeddings(train_vecs, train_emb_path.string());
        save_embeddings(test_vecs, test_emb_path.string());
      }
    } catch (const std::exception& e) {
      throw DataError(std::string("encode: ") + e.what());
    }
  }
  manifest.artifact_paths["vectors_train"] = train_emb_path.string();
  manifest.artifact_hashes["vectors_train"] = sha256_file(train_emb_path.string());
  manifest.artifact_paths["vectors_test"] = test_emb_path.string();
  manifest.artifact_hashes["vectors_test"] = sha256_file(test_emb_path.string());
  if (until == Stage::Encode) return finish();

  // ---- cluster ---------------------------------------------------------
  std::string cluster_key = encode_key + "|" + snap["clusterer"];
  if (config.clusterer == ClustererKind::KMeans)
    cluster_key += "|" + std::to_string(config.kmeans.k) + "|" +
                   std::to_string(config.kmeans.seed) + "|" +
                   (config.kmeans.elbow.enabled
                        ? std::to_string(config.kmeans.elbow.k_start) + "," +
                              std::to_string(config.kmeans.elbow.k_step) + "," +
                              std::to_string(config.kmeans.elbow.k_max) + "," +
                              std::to_string(config.kmeans.elbow.trials)
                        : "fixed");
  else
    cluster_key += "|" + std::to_string(config.hdbscan.min_cluster_size) + "," +
                   std::to_string(config.hdbscan.min_samples);
  cluster_key = sha256_hex(cluster_key);
  const fs::path model_path = cache_dir / ("model-" + short_key(cluster_key) + ".tdm");
  const fs::path summary_path = cache_dir / ("model-" + short_key(cluster_key) + ".json");

  ClusterModel model;
  {
    StageTimer timer(manifest.timings_seconds, "cluster");
    try {
      if (fs::exists(model_path)) {
        model = load_cluster_model(model_path.string());
      } else {
        // Zero vectors are retained in datasets but excluded from clustering.
        std::vector<std::string> ids;
        Matrix points;
        for (std::size_t i = 0; i < train_vecs.size(); ++i) {
          if (is_zero_vec(train_vecs.vectors[i])) continue;
          ids.push_back(train_vecs.ids[i]);
          points.emplace_back(train_vecs.vectors[i].begin(), train_vecs.vectors[i].end());
        }
        if (config.clusterer == ClustererKind::KMeans) {
          int k = config.kmeans.k;
          if (config.kmeans.elbow.enabled) {
            auto elbow = elbow_select(points, config.kmeans.elbow.k_start,
                                      config.kmeans.elbow.k_step, config.kmeans.elbow.k_max,
                                      config.kmeans.elbow.trials, config.kmeans.seed,
                                      config.kmeans.max_iter, config.kmeans.tol);
            k = elbow.chosen_k;
            manifest.config["kmeans_k_effective"] = std::to_string(k);
          }
          auto res = kmeans_fit(points, static_cast<std::size_t>(k), config.kmeans.seed,
                                config.kmeans.max_iter, config.kmeans.tol);
          model.algorithm = "kmeans";
          model.seed = config.kmeans.seed;
          model.centroids = std::move(res.centroids);
          model.ids = std::move(ids);
          model.assignments = std::move(res.assignments);
          model.iterations = res.iterations_run;
          model.distortion = res.distortion;
        } else {
          auto res = hdbscan_fit(points, config.hdbscan.min_cluster_size,
                                 config.hdbscan.min_samples);
          model.algorithm = "hdbscan";
          model.ids = std::move(ids);
          model.assignments = res.labels;
          model.min_cluster_size = res.min_cluster_size;
          model.min_samples = res.min_samples;
          // Derived centroids: unweighted member means, L2-normalized.
          const std::size_t dim = points.empty() ? 0 : points.front().size();
          Matrix sums(static_cast<std::size_t>(res.n_clusters), std::vector<double>(dim, 0.0));
          std::vector<int> counts(static_cast<std::size_t>(res.n_clusters), 0);
          for (std::size_t i = 0; i < points.size(); ++i) {
            if (res.labels[i] < 0) continue;
            ++counts[static_cast<std::size_t>(res.labels[i])];
            for (std::size_t d = 0; d < dim; ++d)
              sums[static_cast<std::size_t>(res.labels[i])][d] += points[i][d];
          }
          for (std::size_t c = 0; c < sums.size(); ++c) {
            double norm_sq = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
              sums[c][d] /= std::max(1, counts[c]);
              norm_sq += sums[c][d] * sums[c][d];
            }
            if (norm_sq > 0.0)
              for (std::size_t d = 0; d < dim; ++d) sums[c][d] /= std::sqrt(norm_sq);
          }
          model.centroids = std::move(sums);
        }
        save_cluster_model(model, model_path.string());
        std::ofstream summary(summary_path, std::ios::binary);
        summary << cluster_model_summary_json(model) << "\n";
      }
    } catch (const std::exception& e) {
      throw DataError(std::string("cluster: ") + e.what());
    }
  }
  manifest.artifact_paths["model"] = model_path.string();
  manifest.artifact_hashes["model"] = sha256_file(model_path.string());
  if (until == Stage::Cluster) return finish();

  // ---- evaluate --------------------------------------------------------
  {
    StageTimer timer(manifest.timings_seconds, "evaluate");
    try {
      std::map<std::string, std::vector<std::string>> tags_of_unit;
      for (const auto& u : train_units) tags_of_unit[u.sentence_id] = u.tags;
      std::vector<std::vector<std::string>> assigned_tags;
      for (const auto& id : model.ids) assigned_tags.push_back(tags_of_unit.at(id));
      auto distributions = tag_distributions(model.assignments, assigned_tags);

      std::map<std::string, std::string> golds;
      for (const auto& q : split.test) golds[q.id] = q.tags.front();

      // Group test sentence vectors by question, in unit order.
      std::map<std::string, std::vector<std::vector<double>>> question_vecs;
      std::vector<std::string> question_order;
      for (std::size_t i = 0; i < test_units.size(); ++i) {
        const auto& qid = test_units[i].question_id;
        if (!question_vecs.count(qid)) question_order.push_back(qid);
        question_vecs[qid].emplace_back(test_vecs.vectors[i].begin(), test_vecs.vectors[i].end());
      }
      // Questions with no units at all still count (as Abstains).
      for (const auto& q : split.test)
        if (!question_vecs.count(q.id)) {
          question_order.push_back(q.id);
          question_vecs[q.id] = {};
        }
      std::sort(question_order.begin(), question_order.end());

      std::vector<QuestionPrediction> predictions;
      for (const auto& qid : question_order) {
        if (model.centroids.empty()) {
          QuestionPrediction abstain;
          abstain.question_id = qid;
          abstain.skipped_sentences = static_cast<int>(question_vecs[qid].size());
          predictions.push_back(std::move(abstain));
          continue;
        }
        predictions.push_back(
            predict_question(qid, question_vecs[qid], model.centroids, distributions));
      }

      out.report = build_eval_report(predictions, golds, config.report_top_m);
      manifest.micro_f1 = out.report.micro_f1;

      std::map<std::string, const SentenceUnit*> unit_of;
      for (const auto& u : train_units) unit_of[u.sentence_id] = &u;
      std::vector<SentenceUnit> model_units;
      for (const auto& id : model.ids) model_units.push_back(*unit_of.at(id));
      VectorSet model_vecs = vectors_from_store(train_vecs, model_units);
      auto exemplars = cluster_exemplars(model.assignments, model.centroids, model_vecs,
                                         model_units, distributions, config.report_top_n);

      const fs::path report_json_path = out_dir / "report.json";
      const fs::path report_text_path = out_dir / "report.txt";
      const fs::path confusion_path = out_dir / "confusion.csv";
      const fs::path exemplars_path = out_dir / "exemplars.md";
      std::ofstream(report_json_path, std::ios::binary) << eval_report_json(out.report) << "\n";
      {
        std::ofstream f(report_text_path, std::ios::binary);
        write_eval_report_text(out.report, f);
      }
      {
        std::ofstream f(confusion_path, std::ios::binary);
        write_confusion_csv(out.report.confusion, f);
      }
      {
        std::ofstream f(exemplars_path, std::ios::binary);
        write_exemplars_markdown(exemplars, f);
      }
      manifest.artifact_paths["report_json"] = report_json_path.string();
      manifest.artifact_hashes["report_json"] = sha256_file(report_json_path.string());
      manifest.artifact_paths["confusion_csv"] = confusion_path.string();
      manifest.artifact_hashes["confusion_csv"] = sha256_file(confusion_path.string());
      manifest.artifact_paths["exemplars_md"] = exemplars_path.string();
      manifest.artifact_hashes["exemplars_md"] = sha256_file(exemplars_path.string());
    } catch (const std::exception& e) {
      throw DataError(std::string("evaluate: ") + e.what());
    }
  }

  return finish();
}

std::vector<ComparisonRow> compare_runs(const std::vector<RunManifest>& manifests) {
  if (manifests.size() < 2) throw ConfigError("compare_runs: need at least 2 manifests");
  const std::string& identity = manifests.front().split_identity;
  for (const auto& m : manifests)
    if (m.split_identity != identity)
      throw ConfigError("compare_runs: manifests come from different splits; scores not comparable");

  std::vector<ComparisonRow> rows;
  for (const auto& m : manifests) {
    ComparisonRow r;
    r.encoder = m.config.count("encoder") ? m.config.at("encoder") : "?";
    r.clusterer = m.config.count("clusterer") ? m.config.at("clusterer") : "?";
    r.max_n = m.config.count("max_n") ? std::atoi(m.config.at("max_n").c_str()) : 0;
    r.micro_f1 = m.micro_f1;
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.micro_f1 != b.micro_f1) return a.micro_f1 > b.micro_f1;
    if (a.encoder != b.encoder) return a.encoder < b.encoder;
    if (a.clusterer != b.clusterer) return a.clusterer < b.clusterer;
    return a.max_n < b.max_n;
  });
  return rows;
}

std::string comparison_table_text(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(20) << "encoder" << std::setw(12) << "clusterer" << std::right
      << std::setw(8) << "max_n" << std::setw(12) << "micro_f1" << "\n";
  for (const auto& r : rows)
    out << std::left << std::setw(20) << r.encoder << std::setw(12) << r.clusterer << std::right
        << std::setw(8) << r.max_n << std::setw(12) << std::fixed << std::setprecision(4)
        << r.micro_f1 << "\n";
  return out.str();
}

}  // namespace themedet
