#include "themedet/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace themedet {

using nlohmann::json;

std::vector<TagDistribution> tag_distributions(const std::vector<int>& assignments,
                                               const std::vector<std::vector<std::string>>& tags) {
  if (assignments.size() != tags.size())
    throw ConfigError("tag_distributions: assignments/tags mismatch");
  std::map<int, TagDistribution> by_cluster;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int c = assignments[i];
    if (c < 0) continue;  // Noise
    if (tags[i].empty()) throw DataError("tag_distributions: sentence without tags");
    auto& dist = by_cluster[c];
    dist.cluster = c;
    for (const auto& t : tags[i]) {
      ++dist.counts[t];
      ++dist.total;
    }
  }
  std::vector<TagDistribution> out;
  for (auto& [c, dist] : by_cluster) {
    for (const auto& [tag, count] : dist.counts)
      dist.p[tag] = static_cast<double>(count) / static_cast<double>(dist.total);
    out.push_back(std::move(dist));
  }
  return out;
}

namespace {

double cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

bool is_zero(const std::vector<double>& v) {
  for (double x : v)
    if (x != 0.0) return false;
  return true;
}

}  // namespace

std::optional<NearestCluster> nearest_cluster(const std::vector<double>& vec,
                                              const Matrix& centroids) {
  if (is_zero(vec)) return std::nullopt;
  if (centroids.empty()) throw DataError("nearest_cluster: no centroids");
  NearestCluster best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = cosine_distance(vec, centroids[c]);
    if (d < best.cosine_distance) best = {static_cast<int>(c), d};
  }
  return best;
}

QuestionPrediction predict_question(const std::string& question_id,
                                    const std::vector<std::vector<double>>& sentence_vectors,
                                    const Matrix& centroids,
                                    const std::vector<TagDistribution>& distributions) {
  std::map<int, const TagDistribution*> dist_of;
  for (const auto& d : distributions) dist_of[d.cluster] = &d;

  QuestionPrediction pred;
  pred.question_id = question_id;
  std::map<std::string, double> sums;
  for (const auto& vec : sentence_vectors) {
    auto nearest = nearest_cluster(vec, centroids);
    if (!nearest) {
      ++pred.skipped_sentences;
      continue;
    }
    pred.hit_clusters.push_back(nearest->cluster);
    auto it = dist_of.find(nearest->cluster);
    if (it != dist_of.end())
      for (const auto& [tag, p] : it->second->p) sums[tag] += p;
  }
  const std::size_t scored = pred.hit_clusters.size();
  if (scored == 0) return pred;  // Abstain

  for (auto& [tag, s] : sums) pred.scores[tag] = s / static_cast<double>(scored);
  double best = -1.0;
  for (const auto& [tag, score] : pred.scores) {
    if (score > best) {  // map order gives the lexicographic tie-break
      best = score;
      pred.predicted_tag = tag;
    }
  }
  return pred;
}

double micro_f1(const std::vector<QuestionPrediction>& predictions,
                const std::map<std::string, std::string>& golds) {
  if (predictions.empty()) throw DataError("micro_f1: empty test set");
  // Single-label gold, single-label (or abstained) prediction: micro-F1
  // collapses to exact-match accuracy with abstentions counted wrong.
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    auto it = golds.find(p.question_id);
    if (it == golds.end()) throw DataError("micro_f1: no gold for question " + p.question_id);
    if (!p.abstained() && p.predicted_tag == it->second) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

ConfusionMatrix confusion_matrix(const std::vector<QuestionPrediction>& predictions,
                                 const std::map<std::string, std::string>& golds, int top_m) {
  if (top_m < 1) throw ConfigError("confusion_matrix: top_m must be >= 1");
  std::map<std::string, int> gold_freq;
  for (const auto& p : predictions) ++gold_freq[golds.at(p.question_id)];

  std::vector<std::pair<std::string, int>> ranked(gold_freq.begin(), gold_freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  ConfusionMatrix cm;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(top_m); ++i)
    cm.row_tags.push_back(ranked[i].first);
  cm.column_tags = cm.row_tags;
  cm.column_tags.push_back("other");
  cm.cells.assign(cm.row_tags.size(), std::vector<int>(cm.column_tags.size(), 0));

  std::map<std::string, std::size_t> row_of, col_of;
  for (std::size_t i = 0; i < cm.row_tags.size(); ++i) row_of[cm.row_tags[i]] = i;
  for (std::size_t i = 0; i < cm.column_tags.size(); ++i) col_of[cm.column_tags[i]] = i;

  for (const auto& p : predictions) {
    auto row = row_of.find(golds.at(p.question_id));
    if (row == row_of.end()) continue;
    auto col = col_of.find(p.abstained() ? "other" : p.predicted_tag);
    const std::size_t c = (col == col_of.end()) ? col_of["other"] : col->second;
    ++cm.cells[row->second][c];
  }
  return cm;
}

EvalReport build_eval_report(const std::vector<QuestionPrediction>& predictions,
                             const std::map<std::string, std::string>& golds, int top_m) {
  EvalReport report;
  report.micro_f1 = micro_f1(predictions, golds);
  report.confusion = confusion_matrix(predictions, golds, top_m);
  report.predictions = predictions;

  std::map<std::string, int> tp, fp, fn;
  std::set<std::string> all_tags;
  for (const auto& p : predictions) {
    const std::string& gold = golds.at(p.question_id);
    all_tags.insert(gold);
    if (!p.abstained()) all_tags.insert(p.predicted_tag);
    if (!p.abstained() && p.predicted_tag == gold) {
      ++tp[gold];
    } else {
      ++fn[gold];
      if (!p.abstained()) ++fp[p.predicted_tag];
    }
  }
  for (const auto& tag : all_tags) {
    PerTagScores s;
    const int t = tp[tag], p = fp[tag], n = fn[tag];
    s.support = t + n;
    s.precision = (t + p) ? static_cast<double>(t) / (t + p) : 0.0;
    s.recall = (t + n) ? static_cast<double>(t) / (t + n) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    report.per_tag[tag] = s;
  }
  return report;
}

std::vector<ClusterExemplars> cluster_exemplars(const std::vector<int>& assignments,
                                                const Matrix& centroids, const VectorSet& vectors,
                                                const std::vector<SentenceUnit>& sentences,
                                                const std::vector<TagDistribution>& distributions,
                                                int top_n) {
  if (top_n < 1) throw ConfigError("cluster_exemplars: top_n must be >= 1");
  if (assignments.size() != vectors.size() || assignments.size() != sentences.size())
    throw ConfigError("cluster_exemplars: misaligned inputs");

  std::map<int, const TagDistribution*> dist_of;
  for (const auto& d : distributions) dist_of[d.cluster] = &d;

  std::map<int, std::vector<RankedSentence>> members;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    const int c = assignments[i];
    if (c < 0) continue;
    std::vector<double> v(vectors.vectors[i].begin(), vectors.vectors[i].end());
    if (is_zero(v)) continue;
    members[c].push_back({sentences[i].sentence_id, sentences[i].text,
                          cosine_distance(v, centroids[static_cast<std::size_t>(c)])});
  }

  std::vector<ClusterExemplars> out;
  for (auto& [c, ranked] : members) {
    std::sort(ranked.begin(), ranked.end(), [](const RankedSentence& a, const RankedSentence& b) {
      if (a.cosine_distance != b.cosine_distance) return a.cosine_distance < b.cosine_distance;
      return a.sentence_id < b.sentence_id;
    });
    if (ranked.size() > static_cast<std::size_t>(top_n)) ranked.resize(static_cast<std::size_t>(top_n));

    ClusterExemplars ex;
    ex.cluster = c;
    ex.exemplars = std::move(ranked);
    auto it = dist_of.find(c);
    if (it != dist_of.end()) {
      std::vector<std::pair<std::string, double>> tags(it->second->p.begin(), it->second->p.end());
      std::sort(tags.begin(), tags.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      if (tags.size() > 3) tags.resize(3);
      ex.dominant_tags = std::move(tags);
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::string eval_report_json(const EvalReport& report) {
  json j;
  j["micro_f1"] = report.micro_f1;
  j["per_tag"] = json::object();
  for (const auto& [tag, s] : report.per_tag)
    j["per_tag"][tag] = {{"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"support", s.support}};
  j["confusion"] = {{"rows", report.confusion.row_tags},
                    {"columns", report.confusion.column_tags},
                    {"cells", report.confusion.cells}};
  j["predictions"] = json::array();
  for (const auto& p : report.predictions)
    j["predictions"].push_back({{"question_id", p.question_id},
                                {"predicted_tag", p.predicted_tag},
                                {"abstained", p.abstained()},
                                {"skipped_sentences", p.skipped_sentences},
                                {"hit_clusters", p.hit_clusters}});
  return j.dump(2);
}

void write_eval_report_text(const EvalReport& report, std::ostream& out) {
  out << "micro_f1: " << std::fixed << std::setprecision(4) << report.micro_f1 << "\n\n";
  out << std::left << std::setw(24) << "tag" << std::right << std::setw(10) << "prec"
      << std::setw(10) << "recall" << std::setw(10) << "f1" << std::setw(10) << "support"
      << "\n";
  for (const auto& [tag, s] : report.per_tag)
    out << std::left << std::setw(24) << tag << std::right << std::setw(10) << s.precision
        << std::setw(10) << s.recall << std::setw(10) << s.f1 << std::setw(10) << s.support
        << "\n";
  out << "\nconfusion (rows = gold, columns = predicted):\n";
  out << std::left << std::setw(24) << "";
  for (const auto& c : report.confusion.column_tags) out << std::right << std::setw(16) << c;
  out << "\n";
  for (std::size_t r = 0; r < report.confusion.row_tags.size(); ++r) {
    out << std::left << std::setw(24) << report.confusion.row_tags[r];
    for (int cell : report.confusion.cells[r]) out << std::right << std::setw(16) << cell;
    out << "\n";
  }
}

void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out) {
  out << "gold";
  for (const auto& c : cm.column_tags) out << "," << c;
  out << "\n";
  for (std::size_t r = 0; r < cm.row_tags.size(); ++r) {
    out << cm.row_tags[r];
    for (int cell : cm.cells[r]) out << "," << cell;
    out << "\n";
  }
}

void write_exemplars_markdown(const std::vector<ClusterExemplars>& exemplars, std::ostream& out) {
  for (const auto& ex : exemplars) {
    out << "## Cluster " << ex.cluster << "\n\n";
    out << "Dominant tags: ";
    for (std::size_t i = 0; i < ex.dominant_tags.size(); ++i) {
      if (i) out << ", ";
      out << ex.dominant_tags[i].first << " (" << std::fixed << std::setprecision(3)
          << ex.dominant_tags[i].second << ")";
    }
    out << "\n\n| Rank | Sentence | Distance |\n|---|---|---|\n";
    for (std::size_t i = 0; i < ex.exemplars.size(); ++i)
      out << "| " << (i + 1) << " | " << ex.exemplars[i].text << " | " << std::fixed
          << std::setprecision(4) << ex.exemplars[i].cosine_distance << " |\n";
    out << "\n";
  }
}

}  // namespace themedet
