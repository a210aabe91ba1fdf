#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "randhar/metrics.hpp"
#include "randhar/rng.hpp"

using namespace randhar;

namespace {

EvalReport tiny_report() {
  EvalReport report;
  report.method = "rl";
  report.config_fingerprint = "deadbeef";
  report.seeds = {{"root", 7}, {"ensemble", 9}};
  for (int repeat = 0; repeat < 2; ++repeat) {
    for (int fold = 0; fold < 2; ++fold) {
      FoldResult f;
      f.repeat = repeat;
      f.fold = fold;
      f.test_subject = fold;
      f.macro_f1 = 0.5 + 0.1 * fold + 0.2 * repeat;
      f.accuracy = 0.6 + 0.05 * fold + 0.1 * repeat;
      f.confusion = confusion(std::vector<int>{0, 1}, std::vector<int>{0, 1}, 2);
      f.selection = {1, 0, 1};
      report.folds.push_back(std::move(f));
    }
  }
  return report;
}

}  // namespace

TEST_CASE("confusion counts rows as truth and columns as prediction") {
  const std::vector<int> y_true = {0, 1, 2, 0};
  const std::vector<int> y_pred = {0, 2, 2, 1};
  const ConfusionMatrix cm = confusion(y_true, y_pred, 3);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 2) == 1);
  CHECK(cm.at(2, 2) == 1);
  CHECK(cm.at(1, 1) == 0);
  CHECK(cm.total() == 4);
  CHECK(cm.row_sum(0) == 2);
  CHECK(cm.col_sum(2) == 2);

  const ConfusionMatrix perfect =
      confusion(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 1}, 2);
  for (int t = 0; t < 2; ++t) {
    for (int p = 0; p < 2; ++p) {
      CHECK(perfect.at(t, p) == (t == p ? (t == 1 ? 2 : 1) : 0));
    }
  }
}

TEST_CASE("confusion validates labels and lengths") {
  CHECK_THROWS_AS(confusion(std::vector<int>{0, 3}, std::vector<int>{0, 1}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(confusion(std::vector<int>{0, 1}, std::vector<int>{-1, 1}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(confusion(std::vector<int>{0}, std::vector<int>{0, 1}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(confusion(std::vector<int>{}, std::vector<int>{}, 2),
                  std::invalid_argument);
}

TEST_CASE("macro_f1 matches the hand-worked two-class example") {
  // Class 0: precision 1, recall 1/2 -> F1 2/3. Class 1: precision 2/3,
  // recall 1 -> F1 4/5. Macro mean: 11/15.
  const ConfusionMatrix cm =
      confusion(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1}, 2);
  CHECK(std::abs(macro_f1(cm) - 11.0 / 15.0) < 1e-9);
  CHECK(accuracy(cm) == doctest::Approx(0.75));
}

TEST_CASE("macro_f1 keeps absent classes in the denominator at F1 = 0") {
  // Same predictions scored over three classes: class 2 never occurs, so
  // the mean spreads 11/15 over three classes instead of two.
  const ConfusionMatrix cm =
      confusion(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1}, 3);
  CHECK(macro_f1(cm) == doctest::Approx(22.0 / 45.0).epsilon(1e-12));
}

TEST_CASE("macro_f1 endpoints") {
  const ConfusionMatrix perfect =
      confusion(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, 3);
  CHECK(macro_f1(perfect) == doctest::Approx(1.0));

  // Balanced binary truth, constant prediction: F1 = (2/3 + 0) / 2.
  const ConfusionMatrix constant =
      confusion(std::vector<int>{0, 1, 0, 1}, std::vector<int>{0, 0, 0, 0}, 2);
  CHECK(macro_f1(constant) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("macro_f1 is invariant to row order and label swaps") {
  std::vector<int> y_true = {0, 1, 1, 2, 0, 2, 1, 0};
  std::vector<int> y_pred = {0, 1, 2, 2, 1, 0, 1, 0};
  const double base = macro_f1(confusion(y_true, y_pred, 3));
  const double acc = accuracy(confusion(y_true, y_pred, 3));

  // Shuffle the paired rows.
  rng::Engine engine(17);
  std::vector<std::size_t> order(y_true.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng::shuffle(order, engine);
  std::vector<int> t2, p2;
  for (std::size_t i : order) {
    t2.push_back(y_true[i]);
    p2.push_back(y_pred[i]);
  }
  CHECK(macro_f1(confusion(t2, p2, 3)) == doctest::Approx(base).epsilon(1e-12));
  CHECK(accuracy(confusion(t2, p2, 3)) == doctest::Approx(acc).epsilon(1e-12));

  // Swap labels 0 and 1 consistently in both vectors.
  auto swap01 = [](std::vector<int> v) {
    for (int& x : v) x = x == 0 ? 1 : (x == 1 ? 0 : x);
    return v;
  };
  CHECK(macro_f1(confusion(swap01(y_true), swap01(y_pred), 3)) ==
        doctest::Approx(base).epsilon(1e-12));

  CHECK(base >= 0.0);
  CHECK(base <= 1.0);
}

TEST_CASE("paired_ttest reproduces frozen references") {
  // Differences 0.11, 0.09, 0.105, 0.095, 0.10.
  const std::vector<double> b = {0.5, 0.5, 0.5, 0.5, 0.5};
  const std::vector<double> a = {0.61, 0.59, 0.605, 0.595, 0.60};
  const TTestResult r = paired_ttest(a, b);
  CHECK(r.t == doctest::Approx(28.2842712474619).epsilon(1e-10));
  CHECK(r.p == doctest::Approx(9.29738463666688e-06).epsilon(1e-10));
  CHECK_FALSE(r.identical);

  // Differences (d, d, d, d + c, d - c) with c = sqrt(10) give sd/sqrt(m)
  // exactly 1, so t = d; the textbook 5%-quantile t = 2.776 lands on p
  // almost exactly 0.05.
  const double c = std::sqrt(10.0);
  const double d = 2.776;
  const std::vector<double> zeros(5, 0.0);
  const std::vector<double> constructed = {d, d, d, d + c, d - c};
  const TTestResult q = paired_ttest(constructed, zeros);
  CHECK(q.t == doctest::Approx(2.776).epsilon(1e-12));
  CHECK(q.p == doctest::Approx(0.0500227783).epsilon(1e-6));

  // Two pairs with differences (2c, 0): t = 1, and for dof = 1 the
  // two-sided p at t = 1 is exactly 0.5.
  const TTestResult half =
      paired_ttest(std::vector<double>{0.2, 0.0}, std::vector<double>{0.0, 0.0});
  CHECK(half.t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(half.p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("paired_ttest edge cases") {
  const std::vector<double> a = {0.4, 0.6, 0.5};
  CHECK(paired_ttest(a, a).identical);
  CHECK(paired_ttest(a, a).p == 1.0);
  CHECK(paired_ttest(a, a).t == 0.0);

  // Antisymmetry in the argument order.
  const std::vector<double> b = {0.35, 0.62, 0.48};
  const TTestResult ab = paired_ttest(a, b);
  const TTestResult ba = paired_ttest(b, a);
  CHECK(ab.t == doctest::Approx(-ba.t).epsilon(1e-12));
  CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));

  // Constant nonzero difference: zero variance, infinite t, p = 0.
  const std::vector<double> shifted = {0.5, 0.7, 0.6};
  const TTestResult degenerate = paired_ttest(shifted, a);
  CHECK(std::isinf(degenerate.t));
  CHECK(degenerate.t > 0.0);
  CHECK(degenerate.p == 0.0);

  // A strong consistent effect with small jitter is highly significant.
  const std::vector<double> base = {0.50, 0.52, 0.48, 0.51, 0.49};
  const std::vector<double> lifted = {0.601, 0.619, 0.582, 0.608, 0.590};
  CHECK(paired_ttest(lifted, base).p < 0.01);

  CHECK_THROWS_AS(paired_ttest(std::vector<double>{1.0},
                               std::vector<double>{2.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(paired_ttest(a, std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("aggregate statistics cover both spread conventions") {
  const EvalReport report = tiny_report();
  // macro-F1 grid: repeat 0 -> (0.5, 0.6); repeat 1 -> (0.7, 0.8).
  const AggregateStats stats = report.aggregate_macro_f1();
  CHECK(stats.mean == doctest::Approx(0.65).epsilon(1e-12));
  // Sample std over cells {0.5, 0.6, 0.7, 0.8}.
  CHECK(stats.std_cells ==
        doctest::Approx(std::sqrt(0.05 / 3.0)).epsilon(1e-12));
  // Repeat means {0.55, 0.75}; fold means {0.6, 0.7}.
  CHECK(stats.std_repeat_means ==
        doctest::Approx(std::sqrt(0.02)).epsilon(1e-12));
  CHECK(stats.std_fold_means ==
        doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));

  const AggregateStats acc = report.aggregate_accuracy();
  CHECK(acc.mean == doctest::Approx(0.675).epsilon(1e-12));
}

TEST_CASE("report JSON round-trips every field") {
  const EvalReport report = tiny_report();
  const EvalReport back = report_from_json(report_to_json(report));
  CHECK(back.method == report.method);
  CHECK(back.config_fingerprint == report.config_fingerprint);
  CHECK(back.seeds == report.seeds);
  REQUIRE(back.folds.size() == report.folds.size());
  for (std::size_t i = 0; i < report.folds.size(); ++i) {
    CHECK(back.folds[i].repeat == report.folds[i].repeat);
    CHECK(back.folds[i].fold == report.folds[i].fold);
    CHECK(back.folds[i].test_subject == report.folds[i].test_subject);
    CHECK(back.folds[i].macro_f1 == report.folds[i].macro_f1);
    CHECK(back.folds[i].accuracy == report.folds[i].accuracy);
    CHECK(back.folds[i].selection == report.folds[i].selection);
    CHECK(back.folds[i].confusion.counts == report.folds[i].confusion.counts);
  }
}

TEST_CASE("write_metrics_csv emits one row per cell") {
  const EvalReport report = tiny_report();
  const auto path =
      std::filesystem::temp_directory_path() / "randhar_metrics.csv";
  write_metrics_csv(report, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "method,repeat,fold,test_subject,macro_f1,accuracy");
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(line);
  }
  REQUIRE(rows.size() == report.folds.size());
  CHECK(rows[0].rfind("rl,0,0,0,", 0) == 0);
  CHECK(rows[3].rfind("rl,1,1,1,", 0) == 0);
  std::filesystem::remove(path);
}
