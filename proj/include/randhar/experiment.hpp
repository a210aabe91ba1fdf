#ifndef RANDHAR_EXPERIMENT_HPP
#define RANDHAR_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "randhar/data.hpp"
#include "randhar/metrics.hpp"
#include "randhar/nn.hpp"
#include "randhar/selection.hpp"

namespace randhar {

// Model-subset strategy evaluated on each fold's test set.
//   base  - one model on all channels, no ensemble
//   topk  - keep the k_top individually best members
//   all   - keep every member
//   rl    - gradient search over subsets
enum class Strategy { kBase, kTopK, kAll, kRl };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct WindowSettings {
  int width = 32;
  int stride = 16;
  bool normalize = true;  // per-channel z-score, fit on each fold's train set
};

struct SplitSettings {
  bool loso = true;   // false: contiguous k-fold over windows
  int folds = 5;      // k-fold only
  double val_fraction = 0.1;  // stratified holdout taken from the train side
};

struct EnsembleSettings {
  std::size_t k = 10;
  double p = 0.5;  // Bernoulli channel-inclusion probability
  std::uint64_t seed = 0;
};

struct SelectionSettings {
  Strategy strategy = Strategy::kRl;
  std::size_t k_top = 5;
  RLConfig rl;
};

struct ExperimentConfig {
  std::string csv_path;  // exactly one of csv_path / synthetic is set
  std::optional<SyntheticSpec> synthetic;
  std::uint64_t data_seed = 0;  // synthetic generation seed
  WindowSettings window;
  SplitSettings split;
  ModelConfig model;  // template; input shape is filled in per member
  TrainConfig training;
  EnsembleSettings ensemble;
  SelectionSettings selection;
  int repeats = 5;
  std::uint64_t seed = 0;  // root seed (split sampling)
  int jobs = 1;
  std::string output_dir = "out";
};

void validate(const ExperimentConfig& cfg);

// JSON schema is documented in the README. Parse errors carry the offending
// section and key; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string config_fingerprint(const ExperimentConfig& cfg);

// Runs repeats x folds cells: split, train the ensemble (or single base
// model), select a subset, evaluate on the held-out test windows. Writes
// report.json, metrics.csv, per-cell search traces (rl only) and
// MANIFEST.json into out_dir. On a mid-run failure the completed cells are
// still written and the manifest records the error before the exception is
// rethrown.
EvalReport run_experiment(const ExperimentConfig& cfg,
                          const std::filesystem::path& out_dir);

// Reads the report object back from a report.json written by run_experiment.
EvalReport load_report(const std::filesystem::path& path);

struct ComparisonRow {
  std::string method;
  AggregateStats macro_f1;
  AggregateStats accuracy;
};

struct ComparisonPair {
  std::string method_a;
  std::string method_b;
  TTestResult macro_f1_test;  // paired over aligned (repeat, fold) cells
};

struct Comparison {
  std::vector<ComparisonRow> rows;
  std::vector<ComparisonPair> pairs;
};

// Requires every report to share the same (repeat, fold, test_subject) cell
// structure.
Comparison compare_reports(const std::vector<EvalReport>& reports);

std::string format_comparison(const Comparison& c);

}  // namespace randhar

#endif  // RANDHAR_EXPERIMENT_HPP
