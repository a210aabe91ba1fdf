#include "randhar/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace randhar {

namespace {

double sample_std(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

AggregateStats aggregate(const std::vector<FoldResult>& folds,
                         double FoldResult::*field) {
  AggregateStats stats;
  if (folds.empty()) return stats;
  std::vector<double> cells;
  std::map<int, std::vector<double>> by_repeat;
  std::map<int, std::vector<double>> by_fold;
  for (const auto& f : folds) {
    const double v = f.*field;
    cells.push_back(v);
    by_repeat[f.repeat].push_back(v);
    by_fold[f.fold].push_back(v);
  }
  double sum = 0.0;
  for (double v : cells) sum += v;
  stats.mean = sum / static_cast<double>(cells.size());
  stats.std_cells = sample_std(cells);
  auto means_of = [](const std::map<int, std::vector<double>>& groups) {
    std::vector<double> means;
    for (const auto& [key, values] : groups) {
      double s = 0.0;
      for (double v : values) s += v;
      means.push_back(s / static_cast<double>(values.size()));
    }
    return means;
  };
  stats.std_repeat_means = sample_std(means_of(by_repeat));
  stats.std_fold_means = sample_std(means_of(by_fold));
  return stats;
}

nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < cm.num_classes; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < cm.num_classes; ++p) row.push_back(cm.at(t, p));
    rows.push_back(std::move(row));
  }
  return rows;
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  ConfusionMatrix cm;
  cm.num_classes = static_cast<int>(j.size());
  cm.counts.reserve(static_cast<std::size_t>(cm.num_classes) * cm.num_classes);
  for (const auto& row : j) {
    if (static_cast<int>(row.size()) != cm.num_classes) {
      throw std::runtime_error("report: confusion matrix is not square");
    }
    for (const auto& v : row) cm.counts.push_back(v.get<std::int64_t>());
  }
  return cm;
}

nlohmann::json aggregate_to_json(const AggregateStats& s) {
  return nlohmann::json{{"mean", s.mean},
                        {"std_cells", s.std_cells},
                        {"std_repeat_means", s.std_repeat_means},
                        {"std_fold_means", s.std_fold_means}};
}

}  // namespace

std::int64_t ConfusionMatrix::total() const {
  std::int64_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

std::int64_t ConfusionMatrix::row_sum(int truth) const {
  std::int64_t n = 0;
  for (int p = 0; p < num_classes; ++p) n += at(truth, p);
  return n;
}

std::int64_t ConfusionMatrix::col_sum(int predicted) const {
  std::int64_t n = 0;
  for (int t = 0; t < num_classes; ++t) n += at(t, predicted);
  return n;
}

ConfusionMatrix confusion(std::span<const int> y_true,
                          std::span<const int> y_pred, int num_classes) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw std::invalid_argument(
        "confusion: label sequences must have equal nonzero length");
  }
  if (num_classes < 1) {
    throw std::invalid_argument("confusion: num_classes must be >= 1");
  }
  ConfusionMatrix cm;
  cm.num_classes = num_classes;
  cm.counts.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= num_classes || y_pred[i] < 0 ||
        y_pred[i] >= num_classes) {
      throw std::invalid_argument("confusion: label out of range at index " +
                                  std::to_string(i));
    }
    ++cm.counts[static_cast<std::size_t>(y_true[i]) * num_classes + y_pred[i]];
  }
  return cm;
}

double macro_f1(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw std::invalid_argument("macro_f1: empty matrix");
  double sum = 0.0;
  for (int c = 0; c < cm.num_classes; ++c) {
    const double tp = static_cast<double>(cm.at(c, c));
    const double fp = static_cast<double>(cm.col_sum(c)) - tp;
    const double fn = static_cast<double>(cm.row_sum(c)) - tp;
    const double denom = 2.0 * tp + fp + fn;
    sum += denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  return sum / cm.num_classes;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::int64_t total = cm.total();
  if (total == 0) throw std::invalid_argument("accuracy: empty matrix");
  std::int64_t correct = 0;
  for (int c = 0; c < cm.num_classes; ++c) correct += cm.at(c, c);
  return static_cast<double>(correct) / static_cast<double>(total);
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument(
        "paired_ttest: need two equal-length score lists with >= 2 entries");
  }
  const std::size_t m = a.size();
  std::vector<double> d(m);
  bool all_zero = true;
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    d[i] = a[i] - b[i];
    all_zero = all_zero && d[i] == 0.0;
    mean += d[i];
  }
  if (all_zero) return TTestResult{0.0, 1.0, true};
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));
  TTestResult result;
  if (sd == 0.0) {
    result.t = mean > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    result.p = 0.0;
    return result;
  }
  result.t = mean / (sd / std::sqrt(static_cast<double>(m)));
  const boost::math::students_t dist(static_cast<double>(m - 1));
  result.p = 2.0 * boost::math::cdf(boost::math::complement(dist,
                                                            std::abs(result.t)));
  return result;
}

AggregateStats EvalReport::aggregate_macro_f1() const {
  return aggregate(folds, &FoldResult::macro_f1);
}

AggregateStats EvalReport::aggregate_accuracy() const {
  return aggregate(folds, &FoldResult::accuracy);
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["config_fingerprint"] = report.config_fingerprint;
  j["seeds"] = report.seeds;
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back(nlohmann::json{{"repeat", f.repeat},
                                   {"fold", f.fold},
                                   {"test_subject", f.test_subject},
                                   {"macro_f1", f.macro_f1},
                                   {"accuracy", f.accuracy},
                                   {"confusion", confusion_to_json(f.confusion)},
                                   {"selection", f.selection}});
  }
  j["folds"] = std::move(folds);
  j["aggregate"] = nlohmann::json{
      {"macro_f1", aggregate_to_json(report.aggregate_macro_f1())},
      {"accuracy", aggregate_to_json(report.aggregate_accuracy())}};
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.method = j.at("method").get<std::string>();
  report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  if (j.contains("seeds")) {
    for (const auto& [key, value] : j.at("seeds").items()) {
      report.seeds[key] = value.get<std::uint64_t>();
    }
  }
  for (const auto& f : j.at("folds")) {
    FoldResult fold;
    fold.repeat = f.at("repeat").get<int>();
    fold.fold = f.at("fold").get<int>();
    fold.test_subject = f.at("test_subject").get<int>();
    fold.macro_f1 = f.at("macro_f1").get<double>();
    fold.accuracy = f.at("accuracy").get<double>();
    fold.confusion = confusion_from_json(f.at("confusion"));
    fold.selection = f.at("selection").get<std::vector<std::uint8_t>>();
    report.folds.push_back(std::move(fold));
  }
  return report;
}

void write_metrics_csv(const EvalReport& report,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write metrics csv: " + path.string());
  }
  out << "method,repeat,fold,test_subject,macro_f1,accuracy\n";
  char line[256];
  for (const auto& f : report.folds) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%.17g,%.17g\n",
                  report.method.c_str(), f.repeat, f.fold, f.test_subject,
                  f.macro_f1, f.accuracy);
    out << line;
  }
}

}  // namespace randhar
