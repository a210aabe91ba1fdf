#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace randhar {

// Row = true class, column = predicted class.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;  // row-major, num_classes^2

  std::int64_t at(int truth, int predicted) const {
    return counts[static_cast<std::size_t>(truth) * num_classes + predicted];
  }
  std::int64_t total() const;
  std::int64_t row_sum(int truth) const;
  std::int64_t col_sum(int predicted) const;
};

ConfusionMatrix confusion(std::span<const int> y_true,
                          std::span<const int> y_pred, int num_classes);

// Unweighted mean of per-class F1 over all num_classes classes. A class with
// no true and no predicted instances contributes F1 = 0 and stays in the
// denominator; per-class F1 is 0 whenever precision + recall is 0. This
// convention is pinned here because macro-F1 definitions vary across
// libraries.
double macro_f1(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool identical = false;  // every paired difference was exactly zero
};

// Two-sided paired Student t-test on per-fold scores, dof = m - 1.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

// One evaluated (repeat, fold) cell.
struct FoldResult {
  int repeat = 0;
  int fold = 0;
  int test_subject = -1;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<std::uint8_t> selection;  // member-inclusion bits used
};

// Mean plus spread along each axis of the repeat x fold grid, so either
// reporting convention (std across repeats or across folds) can be read off.
struct AggregateStats {
  double mean = 0.0;
  double std_cells = 0.0;         // over all repeat x fold cells
  double std_repeat_means = 0.0;  // over per-repeat means
  double std_fold_means = 0.0;    // over per-fold means
};

struct EvalReport {
  std::string method;
  std::string config_fingerprint;
  std::map<std::string, std::uint64_t> seeds;
  std::vector<FoldResult> folds;

  AggregateStats aggregate_macro_f1() const;
  AggregateStats aggregate_accuracy() const;
};

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Flat CSV, one row per evaluated cell:
// method,repeat,fold,test_subject,macro_f1,accuracy
void write_metrics_csv(const EvalReport& report,
                       const std::filesystem::path& path);

}  // namespace randhar
