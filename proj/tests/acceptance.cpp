// Acceptance checks for the theme-detection pipeline. Each criterion prints
// one PASS/FAIL line; the exit code is the number of failures.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "themedet/encode.hpp"
#include "themedet/evaluate.hpp"
#include "themedet/hdbscan.hpp"
#include "themedet/kmeans.hpp"
#include "themedet/model_io.hpp"
#include "themedet/pipeline.hpp"

using namespace themedet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(const std::string& name, double budget_seconds,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  const auto start = std::chrono::steady_clock::now();
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0 && elapsed > budget_seconds) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over time budget");
  }
  std::printf("[%s] %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), elapsed,
              detail.empty() ? "" : " — ", detail.c_str());
  if (!ok) ++g_failures;
}

fs::path fresh_dir(const std::string& stem) {
  static std::mt19937_64 rng{std::random_device{}()};
  auto dir = fs::temp_directory_path() / (stem + "-" + std::to_string(rng()));
  fs::create_directories(dir);
  return dir;
}

// 5 tags x 200 questions with disjoint topic vocabularies. A nonzero
// contamination rate lets the given share of questions borrow a sentence
// from another topic, for a harder variant of the same corpus.
fs::path write_separable_corpus(int contamination_percent) {
  const std::vector<std::pair<std::string, std::vector<std::string>>> topics = {
      {"mortgage", {"mortgage", "escrow", "refinance", "downpayment", "amortize", "lien", "appraisal"}},
      {"investing", {"stock", "dividend", "portfolio", "etf", "broker", "equity", "index"}},
      {"taxes", {"tax", "deduction", "refund", "withholding", "bracket", "irs", "filing"}},
      {"credit", {"credit", "score", "card", "utilization", "bureau", "limit", "apr"}},
      {"budgeting", {"budget", "expense", "grocery", "envelope", "spending", "tracker", "frugal"}},
  };
  auto dir = fresh_dir("themedet-acc-corpus");
  auto path = dir / "corpus.jsonl";
  std::ofstream out(path, std::ios::binary);
  std::mt19937_64 rng(2468);
  int id = 0;
  for (std::size_t t = 0; t < topics.size(); ++t)
    for (int i = 0; i < 200; ++i) {
      const auto& tag = topics[t].first;
      const auto& words = topics[t].second;
      auto pick = [&]() { return words[rng() % words.size()]; };
      const auto& other = topics[(t + 1 + rng() % (topics.size() - 1)) % topics.size()].second;
      auto pick_other = [&]() { return other[rng() % other.size()]; };
      const bool contaminated =
          static_cast<int>(rng() % 100) < contamination_percent;
      std::string second =
          contaminated ? "Should the " + pick_other() + " change my " + pick_other() + " plan? "
                       : "Should the " + pick() + " change my " + pick() + " plan? ";
      std::string body = "My " + pick() + " and " + pick() + " situation is confusing. " + second +
                         "Thanks in advance for any help with this.";
      out << json{{"id", "q" + std::to_string(id++)},
                  {"body", body},
                  {"tags", {tag}},
                  {"created_at", "2020-01-01T00:00:00Z"}}
                 .dump()
          << "\n";
    }
  return path;
}

RunConfig separable_config(const fs::path& corpus, const fs::path& out_dir) {
  RunConfig c;
  c.corpus_path = corpus.string();
  c.tag_min_support = 50;
  c.max_n = 3;
  c.kmeans.k = 25;
  c.kmeans.seed = 7;
  c.out_dir = out_dir.string();
  return c;
}

Matrix random_points(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({u(rng), u(rng)});
  return pts;
}

double brute_force_optimal_distortion(const Matrix& points, std::size_t k) {
  const std::size_t n = points.size();
  const std::size_t dim = points.front().size();
  std::vector<int> assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    Matrix means(k, std::vector<double>(dim, 0.0));
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[static_cast<std::size_t>(assign[i])];
      for (std::size_t d = 0; d < dim; ++d)
        means[static_cast<std::size_t>(assign[i])][d] += points[i][d];
    }
    bool all_used = true;
    for (std::size_t c = 0; c < k && all_used; ++c) {
      if (counts[c] == 0) all_used = false;
      else
        for (std::size_t d = 0; d < dim; ++d) means[c][d] /= counts[c];
    }
    if (all_used) best = std::min(best, distortion(points, means, assign));
    std::size_t pos = 0;
    while (pos < n && assign[pos] == static_cast<int>(k) - 1) assign[pos++] = 0;
    if (pos == n) break;
    ++assign[pos];
  }
  return best;
}

struct GroupedTest {
  std::map<std::string, std::string> golds;
  std::vector<std::string> question_order;
  std::map<std::string, std::vector<std::vector<double>>> vectors;
};

GroupedTest group_test_vectors(const RunManifest& manifest) {
  GroupedTest g;
  auto vs = load_embeddings(manifest.artifact_paths.at("vectors_test"));
  std::ifstream units(manifest.artifact_paths.at("units_test"));
  std::string line;
  std::size_t i = 0;
  while (std::getline(units, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    const std::string qid = rec["question_id"].get<std::string>();
    if (!g.vectors.count(qid)) g.question_order.push_back(qid);
    g.vectors[qid].emplace_back(vs.vectors[i].begin(), vs.vectors[i].end());
    g.golds[qid] = rec["tags"].get<std::vector<std::string>>().front();
    ++i;
  }
  std::sort(g.question_order.begin(), g.question_order.end());
  return g;
}

std::vector<TagDistribution> model_distributions(const RunManifest& manifest,
                                                 const ClusterModel& model) {
  std::map<std::string, std::vector<std::string>> tags_of;
  std::ifstream units(manifest.artifact_paths.at("units_train"));
  std::string line;
  while (std::getline(units, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    tags_of[rec["sentence_id"].get<std::string>()] = rec["tags"].get<std::vector<std::string>>();
  }
  std::vector<std::vector<std::string>> aligned;
  for (const auto& id : model.ids) aligned.push_back(tags_of.at(id));
  return tag_distributions(model.assignments, aligned);
}

}  // namespace

int main() {
  criterion("prediction worked example scores 0.55 for mortgage", 0, [](std::string& detail) {
    Matrix centroids = {{1.0, 0.0}, {0.0, 1.0}};
    std::vector<TagDistribution> dists(2);
    dists[0].cluster = 0;
    dists[0].p = {{"mortgage", 0.7}, {"loans", 0.3}};
    dists[1].cluster = 1;
    dists[1].p = {{"mortgage", 0.4}, {"investing", 0.6}};
    auto pred = predict_question("q", {{1.0, 0.0}, {0.0, 1.0}}, centroids, dists);
    detail = "predicted " + pred.predicted_tag + " score " +
             std::to_string(pred.scores.at("mortgage"));
    return pred.predicted_tag == "mortgage" && pred.scores.at("mortgage") == 0.55;
  });

  criterion("4/6 cluster yields tag distribution {0.4, 0.6} exactly", 0, [](std::string&) {
    std::vector<int> assignments(10, 0);
    std::vector<std::vector<std::string>> tags;
    for (int i = 0; i < 4; ++i) tags.push_back({"mortgage"});
    for (int i = 0; i < 6; ++i) tags.push_back({"investing"});
    auto dists = tag_distributions(assignments, tags);
    return dists.size() == 1 && dists[0].p.at("mortgage") == 0.4 &&
           dists[0].p.at("investing") == 0.6;
  });

  criterion("kmeans matches the brute-force oracle on 20 random instances", 10,
            [](std::string& detail) {
              std::mt19937_64 rng(90210);
              for (int inst = 0; inst < 20; ++inst) {
                const std::size_t n = 5 + rng() % 4;
                const std::size_t k = 2 + rng() % 2;
                auto pts = random_points(rng, n, 5.0);
                const double expected = brute_force_optimal_distortion(pts, k);
                auto res = kmeans_fit_restarts(pts, k, 500 + inst, 10);
                if (std::abs(res.distortion - expected) > 1e-9) {
                  detail = "instance " + std::to_string(inst) + " off by " +
                           std::to_string(res.distortion - expected);
                  return false;
                }
              }
              return true;
            });

  criterion("kmeans distortion is non-increasing on 1000 instances", 0, [](std::string& detail) {
    std::mt19937_64 rng(31337);
    for (int inst = 0; inst < 1000; ++inst) {
      const std::size_t n = 10 + rng() % 30;
      const std::size_t k = 2 + rng() % 4;
      auto pts = random_points(rng, n, 3.0);
      auto res = kmeans_fit(pts, std::min(k, pts.size()), inst);
      for (std::size_t i = 1; i < res.distortion_history.size(); ++i)
        if (res.distortion_history[i] > res.distortion_history[i - 1] + 1e-12) {
          detail = "instance " + std::to_string(inst) + " increased at iteration " +
                   std::to_string(i);
          return false;
        }
    }
    return true;
  });

  criterion("elbow finds the blob count for c in {3,5,8}", 30, [](std::string& detail) {
    std::mt19937_64 rng(60);
    std::normal_distribution<double> noise(0.0, 0.08);
    for (int c : {3, 5, 8}) {
      // Blob centers on orthogonal axes: all pairwise distances equal, so the
      // distortion curve is linear until k = c and flat after.
      Matrix pts;
      for (int b = 0; b < c; ++b)
        for (int i = 0; i < 25; ++i) {
          std::vector<double> p(static_cast<std::size_t>(c), 0.0);
          for (auto& x : p) x = noise(rng);
          p[static_cast<std::size_t>(b)] += 10.0;
          pts.push_back(std::move(p));
        }
      auto res = elbow_select(pts, 2, 1, c + 5, 5, 17);
      int agree = 0;
      for (int k : res.trial_inflections) agree += k == c;
      if (agree < 4) {
        detail = "c=" + std::to_string(c) + " only " + std::to_string(agree) + "/5 trials agreed";
        return false;
      }
    }
    return true;
  });

  criterion("hdbscan matches the reference labels on all 10 fixtures", 0,
            [](std::string& detail) {
              int checked = 0;
              for (const auto& entry : fs::directory_iterator("tests/data/hdbscan")) {
                if (entry.path().extension() != ".json") continue;
                std::ifstream in(entry.path());
                json j = json::parse(in);
                auto pts = j["points"].get<Matrix>();
                auto ref = j["labels"].get<std::vector<int>>();
                auto res =
                    hdbscan_fit(pts, j["min_cluster_size"].get<int>(), j["min_samples"].get<int>());
                std::map<int, int> fwd, bwd;
                for (std::size_t i = 0; i < ref.size(); ++i) {
                  if ((res.labels[i] < 0) != (ref[i] < 0)) {
                    detail = j["name"].get<std::string>() + ": noise set differs at point " +
                             std::to_string(i);
                    return false;
                  }
                  if (ref[i] < 0) continue;
                  auto f = fwd.emplace(res.labels[i], ref[i]);
                  auto b = bwd.emplace(ref[i], res.labels[i]);
                  if ((!f.second && f.first->second != ref[i]) ||
                      (!b.second && b.first->second != res.labels[i])) {
                    detail = j["name"].get<std::string>() + ": labeling not a bijection";
                    return false;
                  }
                }
                ++checked;
              }
              detail = std::to_string(checked) + " fixtures";
              return checked == 10;
            });

  // The remaining criteria share synthetic corpora and pipeline runs.
  const auto corpus = write_separable_corpus(0);
  RunManifest kmeans_manifest;

  criterion("tfidf + kmeans(25) reaches micro-F1 >= 0.90 on the separable corpus", 60,
            [&](std::string& detail) {
              auto out = run_pipeline(separable_config(corpus, fresh_dir("themedet-acc")));
              kmeans_manifest = out.manifest;
              detail = "micro_f1 = " + std::to_string(out.manifest.micro_f1);
              return out.manifest.micro_f1 >= 0.90;
            });

  criterion("kmeans at the elbow k beats hdbscan on the noisy separable corpus", 0,
            [&](std::string& detail) {
              const auto noisy_corpus = write_separable_corpus(15);
              auto cfg_k = separable_config(noisy_corpus, fresh_dir("themedet-acc"));
              cfg_k.kmeans.elbow.enabled = true;
              cfg_k.kmeans.elbow.k_start = 5;
              cfg_k.kmeans.elbow.k_step = 5;
              cfg_k.kmeans.elbow.k_max = 50;
              cfg_k.kmeans.elbow.trials = 3;
              auto km = run_pipeline(cfg_k);

              auto cfg_h = separable_config(noisy_corpus, fresh_dir("themedet-acc"));
              cfg_h.clusterer = ClustererKind::Hdbscan;
              auto hd = run_pipeline(cfg_h);

              detail = "kmeans " + std::to_string(km.manifest.micro_f1) + " vs hdbscan " +
                       std::to_string(hd.manifest.micro_f1);
              return km.manifest.micro_f1 > hd.manifest.micro_f1;
            });

  criterion("identical runs produce byte-identical reports and models", 0,
            [&](std::string& detail) {
              auto a = run_pipeline(separable_config(corpus, fresh_dir("themedet-acc")));
              auto b = run_pipeline(separable_config(corpus, fresh_dir("themedet-acc")));
              const bool reports = a.manifest.artifact_hashes.at("report_json") ==
                                   b.manifest.artifact_hashes.at("report_json");
              const bool models =
                  a.manifest.artifact_hashes.at("model") == b.manifest.artifact_hashes.at("model");
              if (!reports) detail = "report hashes differ";
              if (!models) detail += std::string(detail.empty() ? "" : "; ") + "model hashes differ";
              return reports && models;
            });

  criterion("scaling every test vector by 7.3 changes no prediction", 0, [&](std::string& detail) {
    auto model = load_cluster_model(kmeans_manifest.artifact_paths.at("model"));
    auto dists = model_distributions(kmeans_manifest, model);
    auto grouped = group_test_vectors(kmeans_manifest);
    int compared = 0;
    for (const auto& qid : grouped.question_order) {
      auto base = predict_question(qid, grouped.vectors.at(qid), model.centroids, dists);
      auto scaled_vecs = grouped.vectors.at(qid);
      for (auto& v : scaled_vecs)
        for (auto& x : v) x *= 7.3;
      auto scaled = predict_question(qid, scaled_vecs, model.centroids, dists);
      if (base.predicted_tag != scaled.predicted_tag || base.hit_clusters != scaled.hit_clusters) {
        detail = "prediction changed for " + qid;
        return false;
      }
      ++compared;
    }
    detail = std::to_string(compared) + " questions compared";
    return compared > 0;
  });

  std::printf("%s: %d criteria failed\n", g_failures == 0 ? "OK" : "FAILURES", g_failures);
  return g_failures;
}
