#pragma once

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "themedet/kmeans.hpp"  // Matrix
#include "themedet/types.hpp"

namespace themedet {

struct TagDistribution {
  int cluster = 0;
  std::map<std::string, int> counts;  // N_ij
  int total = 0;                      // N_i = sum_j N_ij
  std::map<std::string, double> p;    // p_ij = N_ij / N_i
};

// N_ij counts (sentence, tag) pairs; a multi-tag sentence contributes once per
// tag. Memberless clusters are omitted; assignment -1 (Noise) is skipped.
std::vector<TagDistribution> tag_distributions(const std::vector<int>& assignments,
                                               const std::vector<std::vector<std::string>>& tags);

struct NearestCluster {
  int cluster = 0;
  double cosine_distance = 0.0;
};

// argmin over 1 - cos(v, c), ties to the lower cluster index; nullopt (Skip)
// for a zero query vector.
std::optional<NearestCluster> nearest_cluster(const std::vector<double>& vec,
                                              const Matrix& centroids);

struct QuestionPrediction {
  std::string question_id;
  std::vector<int> hit_clusters;         // nearest cluster per scored sentence
  std::map<std::string, double> scores;  // averaged tag scores
  std::string predicted_tag;             // empty = Abstain
  int skipped_sentences = 0;

  bool abstained() const { return predicted_tag.empty(); }
};

// Eq.-style prediction: mean of the hit clusters' tag distributions, argmax
// with lexicographic tie-break. All sentences skipped -> Abstain.
QuestionPrediction predict_question(const std::string& question_id,
                                    const std::vector<std::vector<double>>& sentence_vectors,
                                    const Matrix& centroids,
                                    const std::vector<TagDistribution>& distributions);

// Micro-averaged F1; with single-label golds and predictions this is
// accuracy, and Abstains count as wrong.
double micro_f1(const std::vector<QuestionPrediction>& predictions,
                const std::map<std::string, std::string>& golds);

struct ConfusionMatrix {
  std::vector<std::string> row_tags;     // top_m gold tags by gold frequency
  std::vector<std::string> column_tags;  // row tags + "other"
  std::vector<std::vector<int>> cells;
};

ConfusionMatrix confusion_matrix(const std::vector<QuestionPrediction>& predictions,
                                 const std::map<std::string, std::string>& golds, int top_m);

struct PerTagScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;
};

struct EvalReport {
  double micro_f1 = 0.0;
  std::map<std::string, PerTagScores> per_tag;
  ConfusionMatrix confusion;
  std::vector<QuestionPrediction> predictions;
};

EvalReport build_eval_report(const std::vector<QuestionPrediction>& predictions,
                             const std::map<std::string, std::string>& golds, int top_m);

struct RankedSentence {
  std::string sentence_id;
  std::string text;
  double cosine_distance = 0.0;
};

struct ClusterExemplars {
  int cluster = 0;
  std::vector<std::pair<std::string, double>> dominant_tags;  // top-3 by p_ij
  std::vector<RankedSentence> exemplars;  // ascending distance, ties by id
};

std::vector<ClusterExemplars> cluster_exemplars(const std::vector<int>& assignments,
                                                const Matrix& centroids, const VectorSet& vectors,
                                                const std::vector<SentenceUnit>& sentences,
                                                const std::vector<TagDistribution>& distributions,
                                                int top_n);

// Serializations: JSON (machine), aligned text (human), confusion CSV,
// exemplars as Markdown tables.
std::string eval_report_json(const EvalReport& report);
void write_eval_report_text(const EvalReport& report, std::ostream& out);
void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out);
void write_exemplars_markdown(const std::vector<ClusterExemplars>& exemplars, std::ostream& out);

}  // namespace themedet
