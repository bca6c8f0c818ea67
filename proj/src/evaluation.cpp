#include "htc/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>
#include <unordered_set>

#include "htc/errors.hpp"

namespace htc {

using nlohmann::json;

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double ratio(double numerator, double denominator) {
  return denominator > 0.0 ? numerator / denominator : 0.0;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::vector<int> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) {
    throw DataError(ErrorCode::label_out_of_space, "evaluation: empty label list");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      throw DataError(ErrorCode::duplicate_id, "evaluation: duplicate label " +
                                                   std::to_string(labels_[i]));
    }
  }
  cells_.assign(labels_.size(), std::vector<std::size_t>(labels_.size(), 0));
}

std::size_t ConfusionMatrix::index_of(int label, const char* role) const {
  auto it = index_.find(label);
  if (it == index_.end()) {
    throw DataError(ErrorCode::label_out_of_space,
                    std::string("evaluation: ") + role + " label " + std::to_string(label) +
                        " is outside the label space");
  }
  return it->second;
}

std::size_t ConfusionMatrix::count(int gold, int predicted) const {
  return cells_[index_of(gold, "gold")][index_of(predicted, "predicted")];
}

void ConfusionMatrix::record(int gold, int predicted) {
  ++cells_[index_of(gold, "gold")][index_of(predicted, "predicted")];
  ++total_;
}

std::size_t ConfusionMatrix::support(int gold) const {
  const auto& row = cells_[index_of(gold, "gold")];
  std::size_t sum = 0;
  for (auto c : row) sum += c;
  return sum;
}

std::size_t ConfusionMatrix::predicted_total(int label) const {
  const std::size_t col = index_of(label, "predicted");
  std::size_t sum = 0;
  for (const auto& row : cells_) sum += row[col];
  return sum;
}

ConfusionMatrix confusion(const LabeledDataset& gold, const PredictionSet& pred) {
  std::vector<std::string> missing;
  std::unordered_set<std::string_view> gold_ids;
  gold_ids.reserve(gold.samples.size());
  for (const auto& s : gold.samples) {
    gold_ids.insert(s.id);
    if (pred.find(s.id) == nullptr) missing.push_back(s.id);
  }
  std::vector<std::string> extra;
  for (const auto& p : pred.ordered()) {
    if (!gold_ids.count(p.sample_id)) extra.push_back(p.sample_id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "evaluation: id mismatch between gold and predictions '" +
                      pred.producer() + "':";
    auto list = [&msg](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" ") + what + " [";
      for (std::size_t i = 0; i < ids.size() && i < 5; ++i) {
        if (i > 0) msg += ", ";
        msg += ids[i];
      }
      if (ids.size() > 5) msg += ", ... (" + std::to_string(ids.size()) + " total)";
      msg += "]";
    };
    list("missing", missing);
    list("extra", extra);
    throw DataError(ErrorCode::id_mismatch, msg);
  }

  ConfusionMatrix cm(gold.label_space.labels());
  for (const auto& s : gold.samples) {
    if (!s.gold_label) {
      throw DataError(ErrorCode::unlabeled_sample,
                      "evaluation: sample '" + s.id + "' has no gold label");
    }
    cm.record(*s.gold_label, pred.find(s.id)->label);
  }
  return cm;
}

double precision(const ConfusionMatrix& cm, int label) {
  const double tp = static_cast<double>(cm.count(label, label));
  return ratio(tp, static_cast<double>(cm.predicted_total(label)));
}

double recall(const ConfusionMatrix& cm, int label) {
  const double tp = static_cast<double>(cm.count(label, label));
  return ratio(tp, static_cast<double>(cm.support(label)));
}

double f1(const ConfusionMatrix& cm, int label) {
  const double p = precision(cm, label);
  const double r = recall(cm, label);
  return ratio(2.0 * p * r, p + r);
}

double macro_f1(const ConfusionMatrix& cm) {
  double sum = 0.0;
  for (int label : cm.labels()) sum += f1(cm, label);
  return sum / static_cast<double>(cm.labels().size());
}

double macro_precision(const ConfusionMatrix& cm) {
  double sum = 0.0;
  for (int label : cm.labels()) sum += precision(cm, label);
  return sum / static_cast<double>(cm.labels().size());
}

double macro_recall(const ConfusionMatrix& cm) {
  double sum = 0.0;
  for (int label : cm.labels()) sum += recall(cm, label);
  return sum / static_cast<double>(cm.labels().size());
}

double f_beta(const ConfusionMatrix& cm, int label, double beta) {
  if (beta <= 0.0) {
    throw ConfigError("evaluation: beta must be positive");
  }
  const double p = precision(cm, label);
  const double r = recall(cm, label);
  const double b2 = beta * beta;
  return ratio((1.0 + b2) * p * r, b2 * p + r);
}

MetricReport make_report(std::string system, const ConfusionMatrix& cm, double beta) {
  MetricReport report;
  report.system = std::move(system);
  report.beta = beta;
  report.labels = cm.labels();
  for (int label : cm.labels()) {
    ClassMetrics m{precision(cm, label), recall(cm, label), f1(cm, label),
                   cm.support(label)};
    report.per_class[label] = m;
    report.support[label] = m.support;
  }
  report.macro_f1 = macro_f1(cm);
  report.macro_precision = macro_precision(cm);
  report.macro_recall = macro_recall(cm);
  if (report.per_class.count(1)) {
    report.class1_f1 = report.per_class.at(1).f1;
    report.f_beta = f_beta(cm, 1, beta);
  }
  report.confusion_cells.assign(cm.labels().size(),
                                std::vector<std::size_t>(cm.labels().size(), 0));
  for (std::size_t g = 0; g < cm.labels().size(); ++g) {
    for (std::size_t p = 0; p < cm.labels().size(); ++p) {
      report.confusion_cells[g][p] = cm.count(cm.labels()[g], cm.labels()[p]);
    }
  }
  return report;
}

json to_json(const MetricReport& report) {
  json per_class = json::object();
  for (const auto& [label, m] : report.per_class) {
    per_class[std::to_string(label)] = {{"precision", m.precision},
                                        {"recall", m.recall},
                                        {"f1", m.f1},
                                        {"support", m.support}};
  }
  json out{{"system", report.system},
           {"per_class", per_class},
           {"macro_f1", report.macro_f1},
           {"macro_precision", report.macro_precision},
           {"macro_recall", report.macro_recall},
           {"labels", report.labels},
           {"confusion", report.confusion_cells}};
  if (report.class1_f1) out["class1_f1"] = *report.class1_f1;
  if (report.f_beta) out["f_beta"] = {{"beta", report.beta}, {"value", *report.f_beta}};
  return out;
}

std::string to_markdown(const MetricReport& report) {
  std::string md = "## " + report.system + "\n\n";
  md += "| Class | F1 | P | R | Support |\n|---|---|---|---|---|\n";
  for (const auto& [label, m] : report.per_class) {
    md += "| " + std::to_string(label) + " | " + fmt3(m.f1) + " | " + fmt3(m.precision) +
          " | " + fmt3(m.recall) + " | " + std::to_string(m.support) + " |\n";
  }
  md += "\n";
  md += "- Macro-F1: " + fmt3(report.macro_f1) + " (P " + fmt3(report.macro_precision) +
        ", R " + fmt3(report.macro_recall) + ")\n";
  if (report.class1_f1) {
    md += "- Class1-F1: " + fmt3(*report.class1_f1) + "\n";
  }
  if (report.f_beta) {
    md += "- F" + fmt3(report.beta) + " (class 1): " + fmt3(*report.f_beta) + "\n";
  }
  return md;
}

ComparisonTable compare_systems(const std::vector<MetricReport>& reports) {
  if (reports.empty()) {
    throw ConfigError("evaluation: compare_systems needs at least one report");
  }
  ComparisonTable table;
  table.columns = {"F1", "P", "R"};
  const bool binary = reports.front().labels.size() == 2;
  for (const auto& r : reports) {
    ComparisonTable::Row row;
    row.name = r.system;
    if (binary && r.class1_f1) {
      const auto& c1 = r.per_class.at(1);
      row.values = {c1.f1, c1.precision, c1.recall};
    } else {
      row.values = {r.macro_f1, r.macro_precision, r.macro_recall};
    }
    table.rows.push_back(std::move(row));
  }

  const std::size_t cols = table.columns.size();
  table.mean.assign(cols, 0.0);
  table.median.assign(cols, 0.0);
  table.best_row_per_column.assign(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (const auto& row : table.rows) values.push_back(row.values[c]);
    for (std::size_t r = 0; r < values.size(); ++r) {
      table.mean[c] += values[r];
      if (values[r] > values[table.best_row_per_column[c]]) table.best_row_per_column[c] = r;
    }
    table.mean[c] /= static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    table.median[c] = n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
  }
  return table;
}

json to_json(const ComparisonTable& table) {
  json rows = json::array();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    json row{{"system", table.rows[r].name}};
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      row[table.columns[c]] = table.rows[r].values[c];
      if (table.best_row_per_column[c] == r) row["best_" + table.columns[c]] = true;
    }
    rows.push_back(std::move(row));
  }
  json mean = json::object();
  json median = json::object();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    mean[table.columns[c]] = table.mean[c];
    median[table.columns[c]] = table.median[c];
  }
  return json{{"systems", rows}, {"mean", mean}, {"median", median}};
}

std::string to_markdown(const ComparisonTable& table) {
  std::string md = "| System |";
  for (const auto& c : table.columns) md += " " + c + " |";
  md += "\n|---|";
  for (std::size_t c = 0; c < table.columns.size(); ++c) md += "---|";
  md += "\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    md += "| " + table.rows[r].name + " |";
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      const std::string v = fmt3(table.rows[r].values[c]);
      md += table.best_row_per_column[c] == r ? " **" + v + "** |" : " " + v + " |";
    }
    md += "\n";
  }
  md += "| Mean |";
  for (std::size_t c = 0; c < table.columns.size(); ++c) md += " " + fmt3(table.mean[c]) + " |";
  md += "\n| Median |";
  for (std::size_t c = 0; c < table.columns.size(); ++c) md += " " + fmt3(table.median[c]) + " |";
  md += "\n";
  return md;
}

namespace {

std::string excerpt_of(const std::string& text, std::size_t limit = 80) {
  std::string out;
  out.reserve(std::min(text.size(), limit));
  for (char c : text) {
    out.push_back(c == '\n' || c == '\r' || c == '\t' ? ' ' : c);
    if (out.size() >= limit) {
      out += "...";
      break;
    }
  }
  return out;
}

void check_coverage(const LabeledDataset& gold, const PredictionSet& pred) {
  for (const auto& s : gold.samples) {
    if (pred.find(s.id) == nullptr) {
      throw DataError(ErrorCode::id_mismatch, "evaluation: predictions '" + pred.producer() +
                                                  "' miss sample '" + s.id + "'");
    }
  }
}

}  // namespace

DisagreementReport error_analysis(const LabeledDataset& gold, const PredictionSet& a,
                                  const PredictionSet& b, std::size_t max_examples) {
  check_coverage(gold, a);
  check_coverage(gold, b);

  DisagreementReport report;
  report.system_a = a.producer();
  report.system_b = b.producer();

  std::size_t gold_positive = 0;
  std::size_t union_positive_hits = 0;

  for (const auto& s : gold.samples) {
    if (!s.gold_label) {
      throw DataError(ErrorCode::unlabeled_sample,
                      "evaluation: sample '" + s.id + "' has no gold label");
    }
    const int g = *s.gold_label;
    const int pa = a.find(s.id)->label;
    const int pb = b.find(s.id)->label;
    const bool ca = pa == g;
    const bool cb = pb == g;
    if (ca && cb) report.both_correct.push_back(s.id);
    else if (ca) report.only_a.push_back(s.id);
    else if (cb) report.only_b.push_back(s.id);
    else report.both_wrong.push_back(s.id);

    if (g != 0) {
      ++gold_positive;
      if (pa != 0 || pb != 0) ++union_positive_hits;
    }

    auto note = [&](std::map<int, std::vector<ErrorExample>>& fp,
                    std::map<int, std::vector<ErrorExample>>& fn, int predicted) {
      if (predicted == g) return;
      if (fp[predicted].size() < max_examples) {
        fp[predicted].push_back({s.id, g, predicted, excerpt_of(s.text)});
      }
      if (fn[g].size() < max_examples) {
        fn[g].push_back({s.id, g, predicted, excerpt_of(s.text)});
      }
    };
    note(report.false_positives_a, report.false_negatives_a, pa);
    note(report.false_positives_b, report.false_negatives_b, pb);
  }

  report.union_recall = ratio(static_cast<double>(union_positive_hits),
                              static_cast<double>(gold_positive));
  return report;
}

json to_json(const DisagreementReport& report) {
  auto examples = [](const std::map<int, std::vector<ErrorExample>>& by_class) {
    json out = json::object();
    for (const auto& [label, list] : by_class) {
      json arr = json::array();
      for (const auto& e : list) {
        arr.push_back({{"id", e.id}, {"gold", e.gold}, {"predicted", e.predicted},
                       {"excerpt", e.excerpt}});
      }
      out[std::to_string(label)] = std::move(arr);
    }
    return out;
  };
  return json{{"system_a", report.system_a},
              {"system_b", report.system_b},
              {"counts",
               {{"both_correct", report.both_correct.size()},
                {"only_a", report.only_a.size()},
                {"only_b", report.only_b.size()},
                {"both_wrong", report.both_wrong.size()}}},
              {"union_recall", report.union_recall},
              {"only_a_ids", report.only_a},
              {"only_b_ids", report.only_b},
              {"false_positives_a", examples(report.false_positives_a)},
              {"false_negatives_a", examples(report.false_negatives_a)},
              {"false_positives_b", examples(report.false_positives_b)},
              {"false_negatives_b", examples(report.false_negatives_b)}};
}

std::string to_markdown(const DisagreementReport& report) {
  std::string md = "## Disagreement: " + report.system_a + " vs " + report.system_b + "\n\n";
  md += "| Partition | Count |\n|---|---|\n";
  md += "| both correct | " + std::to_string(report.both_correct.size()) + " |\n";
  md += "| only " + report.system_a + " | " + std::to_string(report.only_a.size()) + " |\n";
  md += "| only " + report.system_b + " | " + std::to_string(report.only_b.size()) + " |\n";
  md += "| both wrong | " + std::to_string(report.both_wrong.size()) + " |\n\n";
  md += "Union recall of positive predictions: " + fmt3(report.union_recall) + "\n";

  auto section = [&md](const std::string& title,
                       const std::map<int, std::vector<ErrorExample>>& by_class) {
    bool any = false;
    for (const auto& [_, list] : by_class) {
      if (!list.empty()) any = true;
    }
    if (!any) return;
    md += "\n### " + title + "\n\n";
    for (const auto& [label, list] : by_class) {
      for (const auto& e : list) {
        md += "- class " + std::to_string(label) + ", `" + e.id + "` (gold " +
              std::to_string(e.gold) + ", predicted " + std::to_string(e.predicted) + "): " +
              e.excerpt + "\n";
      }
    }
  };
  section("False positives (" + report.system_a + ")", report.false_positives_a);
  section("False negatives (" + report.system_a + ")", report.false_negatives_a);
  section("False positives (" + report.system_b + ")", report.false_positives_b);
  section("False negatives (" + report.system_b + ")", report.false_negatives_b);
  return md;
}

}  // namespace htc
