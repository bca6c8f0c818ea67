#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htc/backends.hpp"
#include "htc/corpus.hpp"

namespace htc {

// Gold-by-predicted counts over an ordered label list.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<int> labels);

  const std::vector<int>& labels() const { return labels_; }
  std::size_t count(int gold, int predicted) const;
  void record(int gold, int predicted);

  std::size_t support(int gold) const;        // row sum
  std::size_t predicted_total(int label) const;  // column sum
  std::size_t total() const { return total_; }

 private:
  std::size_t index_of(int label, const char* role) const;

  std::vector<int> labels_;
  std::map<int, std::size_t> index_;
  std::vector<std::vector<std::size_t>> cells_;  // [gold][pred]
  std::size_t total_ = 0;
};

// Requires predictions covering exactly the gold id set.
ConfusionMatrix confusion(const LabeledDataset& gold, const PredictionSet& pred);

// Zero-denominator convention throughout: a metric whose denominator is 0
// evaluates to 0, never NaN.
double precision(const ConfusionMatrix& cm, int label);
double recall(const ConfusionMatrix& cm, int label);
double f1(const ConfusionMatrix& cm, int label);

// Unweighted mean of per-class F1 over the full label space, absent classes
// included at 0.
double macro_f1(const ConfusionMatrix& cm);
double macro_precision(const ConfusionMatrix& cm);
double macro_recall(const ConfusionMatrix& cm);

// (1+beta^2)PR / (beta^2 P + R); beta = 1 reduces to f1.
double f_beta(const ConfusionMatrix& cm, int label, double beta);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricReport {
  std::string system;
  std::map<int, ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  std::optional<double> class1_f1;   // present when label 1 is in the space
  double beta = 2.0;
  std::optional<double> f_beta;      // recall-weighted score of class 1
  std::map<int, std::size_t> support;
  std::vector<int> labels;
  std::vector<std::vector<std::size_t>> confusion_cells;
};

MetricReport make_report(std::string system, const ConfusionMatrix& cm, double beta = 2.0);

nlohmann::json to_json(const MetricReport& report);
std::string to_markdown(const MetricReport& report);

// One row per system plus mean and median footer rows; the best value per
// column among system rows is flagged. For binary tasks rows carry class-1
// scores, for multi-class tasks macro scores.
struct ComparisonTable {
  std::vector<std::string> columns;  // F1, P, R
  struct Row {
    std::string name;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  std::vector<double> mean;
  std::vector<double> median;
  std::vector<std::size_t> best_row_per_column;
};

ComparisonTable compare_systems(const std::vector<MetricReport>& reports);

nlohmann::json to_json(const ComparisonTable& table);
std::string to_markdown(const ComparisonTable& table);

// Pairwise error analysis: agreement partition, per-class false positives /
// negatives with text excerpts, and the recall of the or-union of positive
// predictions.
struct ErrorExample {
  std::string id;
  int gold = 0;
  int predicted = 0;
  std::string excerpt;
};

struct DisagreementReport {
  std::string system_a;
  std::string system_b;
  std::vector<std::string> both_correct;
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  std::vector<std::string> both_wrong;
  double union_recall = 0.0;  // positive = any non-zero label
  // per class, capped lists of examples for each system
  std::map<int, std::vector<ErrorExample>> false_positives_a;
  std::map<int, std::vector<ErrorExample>> false_negatives_a;
  std::map<int, std::vector<ErrorExample>> false_positives_b;
  std::map<int, std::vector<ErrorExample>> false_negatives_b;
};

DisagreementReport error_analysis(const LabeledDataset& gold, const PredictionSet& a,
                                  const PredictionSet& b, std::size_t max_examples = 10);

nlohmann::json to_json(const DisagreementReport& report);
std::string to_markdown(const DisagreementReport& report);

}  // namespace htc
