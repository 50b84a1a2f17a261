#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace nfc {

/// counts(t, p): samples of true class t predicted as p.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t& at(std::size_t t, std::size_t p) { return counts_[t * classes_ + p]; }
  std::uint64_t at(std::size_t t, std::size_t p) const { return counts_[t * classes_ + p]; }

  std::uint64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }
  std::uint64_t row_sum(std::size_t t) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += at(t, p);
    return s;
  }
  std::uint64_t col_sum(std::size_t p) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t) s += at(t, p);
    return s;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t classes) {
  if (y_true.size() != y_pred.size()) {
    throw DataError("label vectors differ in length (" + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()) + ")");
  }
  ConfusionMatrix cm(classes);
  const int c = static_cast<int>(classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= c || y_pred[i] < 0 || y_pred[i] >= c) {
      throw DataError("class index out of range at position " + std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(y_true[i]), static_cast<std::size_t>(y_pred[i]));
  }
  return cm;
}

struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;  // support-weighted
  double recall = 0.0;     // support-weighted, equals accuracy
  double f1 = 0.0;         // support-weighted
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<double> class_f1;
  std::vector<std::uint64_t> support;
  ConfusionMatrix matrix;
};

/// Per-class precision/recall/F1 (0 where undefined) aggregated by support.
inline EvalReport evaluate(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw ParameterError("cannot evaluate an empty confusion matrix");
  const std::size_t C = cm.classes();
  EvalReport r;
  r.matrix = cm;
  const double n = static_cast<double>(total);
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const auto tp = cm.at(c, c);
    const auto rows = cm.row_sum(c);
    const auto cols = cm.col_sum(c);
    trace += tp;
    const double p = cols == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(cols);
    const double rc = rows == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(rows);
    const double f = (p + rc) == 0.0 ? 0.0 : 2.0 * p * rc / (p + rc);
    r.class_precision.push_back(p);
    r.class_recall.push_back(rc);
    r.class_f1.push_back(f);
    r.support.push_back(rows);
    const double w = static_cast<double>(rows) / n;
    r.precision += w * p;
    r.recall += w * rc;
    r.f1 += w * f;
  }
  r.accuracy = static_cast<double>(trace) / n;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json matrix = nlohmann::json::array();
  for (std::size_t t = 0; t < r.matrix.classes(); ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < r.matrix.classes(); ++p) row.push_back(r.matrix.at(t, p));
    matrix.push_back(row);
  }
  return {{"averaging", "support-weighted"},
          {"accuracy", r.accuracy},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"per_class",
           {{"precision", r.class_precision},
            {"recall", r.class_recall},
            {"f1", r.class_f1},
            {"support", r.support}}},
          {"confusion", matrix}};
}

/// Plain-text report; `class_names` labels the per-class rows.
inline std::string format_text(const EvalReport& r, std::span<const std::string> class_names = {}) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << std::left << std::setw(10) << "Acc." << std::setw(10) << "Prec." << std::setw(10) << "Rec."
     << std::setw(10) << "F1" << '\n';
  os << std::setw(10) << r.accuracy << std::setw(10) << r.precision << std::setw(10) << r.recall << std::setw(10)
     << r.f1 << "\n\n";
  os << std::setw(10) << "class" << std::setw(10) << "Prec." << std::setw(10) << "Rec." << std::setw(10) << "F1"
     << "support\n";
  for (std::size_t c = 0; c < r.support.size(); ++c) {
    const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
    os << std::setw(10) << name << std::setw(10) << r.class_precision[c] << std::setw(10) << r.class_recall[c]
       << std::setw(10) << r.class_f1[c] << r.support[c] << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Comparative ranking in the layout of a benchmarking table.

struct ScoreRow {
  std::string name;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool reference = false;  // static published row, not produced by this run

  std::array<double, 4> metrics() const { return {accuracy, precision, recall, f1}; }
};

inline ScoreRow score_row(std::string name, const EvalReport& r) {
  return {std::move(name), r.accuracy, r.precision, r.recall, r.f1, false};
}

/// Published CWRU benchmark (models M1-M8). Reproduced verbatim as reference
/// entries; M1 has F1 above both precision and recall, which is kept as is.
inline std::vector<ScoreRow> benchmark_reference_rows() {
  return {
      {"M1 RF", 0.8945, 0.9011, 0.8945, 0.9133, true},      {"M2 SVM", 0.8278, 0.8107, 0.8278, 0.8117, true},
      {"M3 XGBoost", 0.8983, 0.9020, 0.8983, 0.9000, true}, {"M4 MLP", 0.8963, 0.8910, 0.8963, 0.8934, true},
      {"M5 GBM", 0.8727, 0.8764, 0.8727, 0.8731, true},     {"M6 LR", 0.6720, 0.6543, 0.6720, 0.6541, true},
      {"M7 CP-NFC", 0.8779, 0.9169, 0.8779, 0.8931, true},  {"M8 Tucker-NFC", 0.9080, 0.9457, 0.9080, 0.9231, true},
  };
}

struct RankedRow {
  ScoreRow score;
  double mean_metric_rank = 0.0;  // average of the four per-metric ranks
  double rank = 0.0;              // position after ordering by mean_metric_rank
  int wins = 0;                   // metrics on which this row is strictly best
};

namespace detail {
/// Fractional ranks (1 = best, ties share the average position).
inline std::vector<double> descending_ranks(const std::vector<double>& v) {
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t better = 0, equal = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[j] > v[i]) ++better;
      if (v[j] == v[i]) ++equal;
    }
    ranks[i] = static_cast<double>(better) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return ranks;
}
}  // namespace detail

/// Ranks every row by its mean rank across accuracy, precision, recall and F1,
/// and counts per-metric wins. Output is ordered best first.
inline std::vector<RankedRow> comparative_report(const std::vector<ScoreRow>& rows) {
  std::vector<RankedRow> out;
  for (const auto& r : rows) out.push_back({r, 0.0, 0.0, 0});
  for (std::size_t m = 0; m < 4; ++m) {
    std::vector<double> column;
    for (const auto& r : rows) column.push_back(r.metrics()[m]);
    const auto ranks = detail::descending_ranks(column);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out[i].mean_metric_rank += ranks[i] / 4.0;
      const auto at_least_as_good =
          std::count_if(column.begin(), column.end(), [&](double v) { return v >= column[i]; });
      if (at_least_as_good == 1) ++out[i].wins;
    }
  }
  std::vector<double> means;
  for (const auto& r : out) means.push_back(-r.mean_metric_rank);
  const auto positions = detail::descending_ranks(means);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = positions[i];
  std::stable_sort(out.begin(), out.end(), [](const RankedRow& a, const RankedRow& b) { return a.rank < b.rank; });
  return out;
}

inline std::string format_ranking(const std::vector<RankedRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Model" << std::setw(9) << "Acc." << std::setw(9) << "Prec." << std::setw(9)
     << "Rec." << std::setw(9) << "F1" << std::setw(7) << "Rank" << "Win/Loss\n";
  for (const auto& r : rows) {
    os << std::setw(18) << (r.score.reference ? r.score.name + " *" : r.score.name) << std::fixed
       << std::setprecision(4) << std::setw(9) << r.score.accuracy << std::setw(9) << r.score.precision
       << std::setw(9) << r.score.recall << std::setw(9) << r.score.f1 << std::setprecision(1) << std::setw(7)
       << r.rank << r.wins << "/4\n";
  }
  if (std::any_of(rows.begin(), rows.end(), [](const RankedRow& r) { return r.score.reference; })) {
    os << "* published reference row\n";
  }
  return os.str();
}

inline nlohmann::json to_json(const std::vector<RankedRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"model", r.score.name},
                   {"reference", r.score.reference},
                   {"accuracy", r.score.accuracy},
                   {"precision", r.score.precision},
                   {"recall", r.score.recall},
                   {"f1", r.score.f1},
                   {"mean_metric_rank", r.mean_metric_rank},
                   {"rank", r.rank},
                   {"wins", r.wins},
                   {"losses", 4 - r.wins}});
  }
  return out;
}

}  // namespace nfc
