#include "randhar/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "randhar/ensemble.hpp"
#include "randhar/rng.hpp"
#include "randhar/util.hpp"
#include "randhar/version.hpp"

namespace randhar {

namespace {

// Seed-derivation domains, so the per-block seeds stay independent even when
// the config leaves them all at the same value.
constexpr std::uint64_t kMaskDomain = 1000;
constexpr std::uint64_t kTrainDomain = 2000;
constexpr std::uint64_t kSearchDomain = 3000;
constexpr std::uint64_t kSplitDomain = 4000;

void check_keys(const nlohmann::json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: " + section + " must be an object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument("config: unknown key '" + item.key() +
                                  "' in " + section);
    }
  }
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key,
            const std::string& section, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config: bad value for " + section + "." +
                                key);
  }
}

template <typename T>
T require_field(const nlohmann::json& j, const char* key,
                const std::string& section) {
  if (!j.contains(key)) {
    throw std::invalid_argument("config: missing " + section + "." + key);
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("config: bad value for " + section + "." +
                                key);
  }
}

std::string role_to_string(ChannelRole role) {
  switch (role) {
    case ChannelRole::kInformative: return "informative";
    case ChannelRole::kNoise: return "noise";
    case ChannelRole::kConflicting: return "conflicting";
  }
  throw std::logic_error("unreachable channel role");
}

ChannelRole role_from_string(const std::string& s, const std::string& where) {
  if (s == "informative") return ChannelRole::kInformative;
  if (s == "noise") return ChannelRole::kNoise;
  if (s == "conflicting") return ChannelRole::kConflicting;
  throw std::invalid_argument("config: " + where + ": unknown role '" + s +
                              "' (informative|noise|conflicting)");
}

SyntheticSpec synthetic_from_json(const nlohmann::json& syn,
                                  std::uint64_t* data_seed) {
  check_keys(syn, "data.synthetic",
             {"seed", "num_subjects", "num_classes", "segment_len",
              "segments_per_subject", "channels", "noise_sigma", "amp_jitter",
              "phase_jitter", "sample_rate_hz"});
  SyntheticSpec spec;
  *data_seed = get_field<std::uint64_t>(syn, "seed", "data.synthetic", 0);
  spec.num_subjects =
      get_field(syn, "num_subjects", "data.synthetic", spec.num_subjects);
  spec.num_classes =
      get_field(syn, "num_classes", "data.synthetic", spec.num_classes);
  spec.segment_len =
      get_field(syn, "segment_len", "data.synthetic", spec.segment_len);
  spec.segments_per_subject = get_field(syn, "segments_per_subject",
                                        "data.synthetic",
                                        spec.segments_per_subject);
  spec.noise_sigma =
      get_field(syn, "noise_sigma", "data.synthetic", spec.noise_sigma);
  spec.amp_jitter =
      get_field(syn, "amp_jitter", "data.synthetic", spec.amp_jitter);
  spec.phase_jitter =
      get_field(syn, "phase_jitter", "data.synthetic", spec.phase_jitter);
  spec.sample_rate_hz =
      get_field(syn, "sample_rate_hz", "data.synthetic", spec.sample_rate_hz);
  if (!syn.contains("channels") || !syn.at("channels").is_array() ||
      syn.at("channels").empty()) {
    throw std::invalid_argument(
        "config: data.synthetic.channels must be a non-empty array");
  }
  std::size_t index = 0;
  for (const auto& ch : syn.at("channels")) {
    const std::string where =
        "data.synthetic.channels[" + std::to_string(index) + "]";
    check_keys(ch, where,
               {"name", "role", "waveform", "amplitude", "conflict_a",
                "conflict_b"});
    SyntheticChannel channel;
    channel.name =
        get_field<std::string>(ch, "name", where, "ch" + std::to_string(index));
    channel.role =
        role_from_string(get_field<std::string>(ch, "role", where,
                                                "informative"),
                         where);
    const std::string wf =
        get_field<std::string>(ch, "waveform", where, "sine");
    if (wf == "sine") {
      channel.waveform = Waveform::kSine;
    } else if (wf == "step") {
      channel.waveform = Waveform::kStep;
    } else {
      throw std::invalid_argument("config: " + where +
                                  ": unknown waveform '" + wf +
                                  "' (sine|step)");
    }
    channel.amplitude = get_field(ch, "amplitude", where, 1.0);
    channel.conflict_a = get_field(ch, "conflict_a", where, -1);
    channel.conflict_b = get_field(ch, "conflict_b", where, -1);
    spec.channels.push_back(std::move(channel));
    ++index;
  }
  return spec;
}

nlohmann::json synthetic_to_json(const SyntheticSpec& spec,
                                 std::uint64_t data_seed) {
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& ch : spec.channels) {
    nlohmann::json c;
    c["name"] = ch.name;
    c["role"] = role_to_string(ch.role);
    c["waveform"] = ch.waveform == Waveform::kSine ? "sine" : "step";
    c["amplitude"] = ch.amplitude;
    if (ch.role == ChannelRole::kConflicting) {
      c["conflict_a"] = ch.conflict_a;
      c["conflict_b"] = ch.conflict_b;
    }
    channels.push_back(std::move(c));
  }
  return nlohmann::json{{"seed", data_seed},
                        {"num_subjects", spec.num_subjects},
                        {"num_classes", spec.num_classes},
                        {"segment_len", spec.segment_len},
                        {"segments_per_subject", spec.segments_per_subject},
                        {"channels", std::move(channels)},
                        {"noise_sigma", spec.noise_sigma},
                        {"amp_jitter", spec.amp_jitter},
                        {"phase_jitter", spec.phase_jitter},
                        {"sample_rate_hz", spec.sample_rate_hz}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
  check_keys(j, "model", {"architecture", "hidden", "conv"});
  ModelConfig cfg;
  const std::string arch =
      get_field<std::string>(j, "architecture", "model", "mlp");
  if (arch == "mlp") {
    cfg.architecture = Architecture::kMlp;
  } else if (arch == "cnn1d") {
    cfg.architecture = Architecture::kCnn1d;
  } else {
    throw std::invalid_argument(
        "config: model.architecture must be mlp or cnn1d, got '" + arch + "'");
  }
  cfg.hidden_sizes = get_field<std::vector<int>>(j, "hidden", "model", {});
  if (j.contains("conv")) {
    std::size_t index = 0;
    for (const auto& layer : j.at("conv")) {
      const std::string where = "model.conv[" + std::to_string(index) + "]";
      check_keys(layer, where, {"filters", "kernel", "pool"});
      ConvLayerConfig conv;
      conv.filters = get_field(layer, "filters", where, 1);
      conv.kernel = get_field(layer, "kernel", where, 1);
      conv.pool = get_field(layer, "pool", where, 1);
      cfg.conv_layers.push_back(conv);
      ++index;
    }
  }
  return cfg;
}

TrainConfig training_from_json(const nlohmann::json& j) {
  check_keys(j, "training",
             {"initial_lr", "plateau_factor", "plateau_patience", "max_epochs",
              "early_stop_patience", "batch_size", "seed"});
  TrainConfig tc;
  tc.initial_lr = get_field(j, "initial_lr", "training", tc.initial_lr);
  tc.plateau_factor =
      get_field(j, "plateau_factor", "training", tc.plateau_factor);
  tc.plateau_patience =
      get_field(j, "plateau_patience", "training", tc.plateau_patience);
  tc.max_epochs = get_field(j, "max_epochs", "training", tc.max_epochs);
  tc.early_stop_patience =
      get_field(j, "early_stop_patience", "training", tc.early_stop_patience);
  tc.batch_size = get_field(j, "batch_size", "training", tc.batch_size);
  tc.seed = get_field(j, "seed", "training", tc.seed);
  return tc;
}

RLConfig rl_from_json(const nlohmann::json& j) {
  check_keys(j, "selection.rl",
             {"reward_samples", "draws", "step_size", "iterations", "seed",
              "memoize"});
  RLConfig rc;
  rc.reward_samples =
      get_field(j, "reward_samples", "selection.rl", rc.reward_samples);
  rc.draws = get_field(j, "draws", "selection.rl", rc.draws);
  rc.step_size = get_field(j, "step_size", "selection.rl", rc.step_size);
  rc.iterations = get_field(j, "iterations", "selection.rl", rc.iterations);
  rc.seed = get_field(j, "seed", "selection.rl", rc.seed);
  rc.memoize = get_field(j, "memoize", "selection.rl", rc.memoize);
  return rc;
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kBase: return "base";
    case Strategy::kTopK: return "topk";
    case Strategy::kAll: return "all";
    case Strategy::kRl: return "rl";
  }
  throw std::logic_error("unreachable strategy");
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "base") return Strategy::kBase;
  if (s == "topk") return Strategy::kTopK;
  if (s == "all") return Strategy::kAll;
  if (s == "rl") return Strategy::kRl;
  throw std::invalid_argument(
      "config: selection.strategy must be base, topk, all or rl, got '" + s +
      "'");
}

void validate(const ExperimentConfig& cfg) {
  const bool has_csv = !cfg.csv_path.empty();
  if (has_csv == cfg.synthetic.has_value()) {
    throw std::invalid_argument(
        "config: data needs exactly one of csv or synthetic");
  }
  if (cfg.window.width < 1 || cfg.window.stride < 1) {
    throw std::invalid_argument(
        "config: window.width and window.stride must be >= 1");
  }
  if (!(cfg.split.val_fraction > 0.0) || cfg.split.val_fraction >= 1.0) {
    throw std::invalid_argument(
        "config: split.val_fraction must be in (0, 1)");
  }
  if (!cfg.split.loso && cfg.split.folds < 2) {
    throw std::invalid_argument("config: split.folds must be >= 2 for kfold");
  }
  if (cfg.repeats < 1) {
    throw std::invalid_argument("config: repeats must be >= 1");
  }
  if (cfg.jobs < 1) {
    throw std::invalid_argument("config: jobs must be >= 1");
  }
  if (cfg.ensemble.k < 1) {
    throw std::invalid_argument("config: ensemble.k must be >= 1");
  }
  if (!(cfg.ensemble.p > 0.0) || cfg.ensemble.p > 1.0) {
    throw std::invalid_argument("config: ensemble.p must be in (0, 1]");
  }
  if (cfg.selection.strategy == Strategy::kTopK &&
      (cfg.selection.k_top < 1 || cfg.selection.k_top > cfg.ensemble.k)) {
    throw std::invalid_argument(
        "config: selection.k_top must be in [1, ensemble.k]");
  }
  validate(cfg.training);
  validate(cfg.selection.rl);
  // Probe the model template with the configured window so structural
  // problems (e.g. kernel wider than the window) surface as config errors.
  ModelConfig probe = cfg.model;
  probe.input_channels = 1;
  probe.input_width = cfg.window.width;
  probe.num_classes = 1;
  try {
    validate(probe);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  check_keys(j, "top level",
             {"data", "window", "split", "model", "training", "ensemble",
              "selection", "repeats", "seed", "jobs", "output_dir"});
  ExperimentConfig cfg;

  if (!j.contains("data")) {
    throw std::invalid_argument("config: missing data section");
  }
  const auto& data = j.at("data");
  check_keys(data, "data", {"csv", "synthetic"});
  const bool has_csv = data.contains("csv");
  const bool has_synthetic = data.contains("synthetic");
  if (has_csv == has_synthetic) {
    throw std::invalid_argument(
        "config: data needs exactly one of csv or synthetic");
  }
  if (has_csv) {
    cfg.csv_path = require_field<std::string>(data, "csv", "data");
  } else {
    cfg.synthetic = synthetic_from_json(data.at("synthetic"), &cfg.data_seed);
  }

  if (!j.contains("window")) {
    throw std::invalid_argument("config: missing window section");
  }
  const auto& window = j.at("window");
  check_keys(window, "window", {"width", "stride", "normalize"});
  cfg.window.width = require_field<int>(window, "width", "window");
  cfg.window.stride = require_field<int>(window, "stride", "window");
  cfg.window.normalize =
      get_field(window, "normalize", "window", cfg.window.normalize);

  if (j.contains("split")) {
    const auto& split = j.at("split");
    check_keys(split, "split", {"kind", "folds", "val_fraction"});
    const std::string kind =
        get_field<std::string>(split, "kind", "split", "loso");
    if (kind == "loso") {
      cfg.split.loso = true;
    } else if (kind == "kfold") {
      cfg.split.loso = false;
    } else {
      throw std::invalid_argument(
          "config: split.kind must be loso or kfold, got '" + kind + "'");
    }
    cfg.split.folds = get_field(split, "folds", "split", cfg.split.folds);
    cfg.split.val_fraction =
        get_field(split, "val_fraction", "split", cfg.split.val_fraction);
  }

  if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
  if (j.contains("training")) cfg.training = training_from_json(j.at("training"));

  if (j.contains("ensemble")) {
    const auto& ens = j.at("ensemble");
    check_keys(ens, "ensemble", {"k", "p", "seed"});
    cfg.ensemble.k =
        get_field<std::size_t>(ens, "k", "ensemble", cfg.ensemble.k);
    cfg.ensemble.p = get_field(ens, "p", "ensemble", cfg.ensemble.p);
    cfg.ensemble.seed =
        get_field(ens, "seed", "ensemble", cfg.ensemble.seed);
  }

  if (j.contains("selection")) {
    const auto& sel = j.at("selection");
    check_keys(sel, "selection", {"strategy", "k_top", "rl"});
    cfg.selection.strategy = strategy_from_string(
        get_field<std::string>(sel, "strategy", "selection", "rl"));
    cfg.selection.k_top =
        get_field<std::size_t>(sel, "k_top", "selection", cfg.selection.k_top);
    if (sel.contains("rl")) cfg.selection.rl = rl_from_json(sel.at("rl"));
  }

  cfg.repeats = get_field(j, "repeats", "top level", cfg.repeats);
  cfg.seed = get_field(j, "seed", "top level", cfg.seed);
  cfg.jobs = get_field(j, "jobs", "top level", cfg.jobs);
  cfg.output_dir =
      get_field<std::string>(j, "output_dir", "top level", cfg.output_dir);

  validate(cfg);
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (cfg.synthetic) {
    j["data"]["synthetic"] = synthetic_to_json(*cfg.synthetic, cfg.data_seed);
  } else {
    j["data"]["csv"] = cfg.csv_path;
  }
  j["window"] = nlohmann::json{{"width", cfg.window.width},
                               {"stride", cfg.window.stride},
                               {"normalize", cfg.window.normalize}};
  j["split"] = nlohmann::json{{"kind", cfg.split.loso ? "loso" : "kfold"},
                              {"folds", cfg.split.folds},
                              {"val_fraction", cfg.split.val_fraction}};
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& layer : cfg.model.conv_layers) {
    conv.push_back(nlohmann::json{{"filters", layer.filters},
                                  {"kernel", layer.kernel},
                                  {"pool", layer.pool}});
  }
  j["model"] = nlohmann::json{
      {"architecture",
       cfg.model.architecture == Architecture::kMlp ? "mlp" : "cnn1d"},
      {"hidden", cfg.model.hidden_sizes},
      {"conv", std::move(conv)}};
  j["training"] =
      nlohmann::json{{"initial_lr", cfg.training.initial_lr},
                     {"plateau_factor", cfg.training.plateau_factor},
                     {"plateau_patience", cfg.training.plateau_patience},
                     {"max_epochs", cfg.training.max_epochs},
                     {"early_stop_patience", cfg.training.early_stop_patience},
                     {"batch_size", cfg.training.batch_size},
                     {"seed", cfg.training.seed}};
  j["ensemble"] = nlohmann::json{{"k", cfg.ensemble.k},
                                 {"p", cfg.ensemble.p},
                                 {"seed", cfg.ensemble.seed}};
  j["selection"] =
      nlohmann::json{{"strategy", to_string(cfg.selection.strategy)},
                     {"k_top", cfg.selection.k_top},
                     {"rl", nlohmann::json{
                                {"reward_samples", cfg.selection.rl.reward_samples},
                                {"draws", cfg.selection.rl.draws},
                                {"step_size", cfg.selection.rl.step_size},
                                {"iterations", cfg.selection.rl.iterations},
                                {"seed", cfg.selection.rl.seed},
                                {"memoize", cfg.selection.rl.memoize}}}};
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("config: cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: " + path.string() +
                                " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string config_fingerprint(const ExperimentConfig& cfg) {
  return fnv1a_hex(config_to_json(cfg).dump());
}

namespace {

FoldResult run_cell(const ExperimentConfig& cfg, const WindowedDataset& wd,
                    const Fold& fold, int repeat, int fold_index,
                    const std::filesystem::path& out_dir, int member_jobs) {
  WindowedDataset train_wd = select_windows(wd, fold.train);
  WindowedDataset val_wd = select_windows(wd, fold.validation);
  WindowedDataset test_wd = select_windows(wd, fold.test);
  if (cfg.window.normalize) {
    const ChannelStats stats = fit_normalizer(wd, fold.train);
    train_wd = apply_normalizer(train_wd, stats);
    val_wd = apply_normalizer(val_wd, stats);
    test_wd = apply_normalizer(test_wd, stats);
  }

  const std::uint64_t r = static_cast<std::uint64_t>(repeat);
  const std::uint64_t f = static_cast<std::uint64_t>(fold_index);
  std::vector<SensorMask> masks;
  if (cfg.selection.strategy == Strategy::kBase) {
    masks.push_back(SensorMask::ones(wd.num_channels()));
  } else {
    masks = sample_masks(wd.num_channels(), cfg.ensemble.k, cfg.ensemble.p,
                         rng::derive_seed(cfg.ensemble.seed, kMaskDomain + r,
                                          f));
  }
  const TrainedEnsemble ensemble = train_ensemble(
      train_wd, val_wd, masks, cfg.model, cfg.training,
      rng::derive_seed(cfg.training.seed, kTrainDomain + r, f), member_jobs);

  std::vector<std::uint8_t> bits;
  switch (cfg.selection.strategy) {
    case Strategy::kBase:
      bits.assign(1, 1);
      break;
    case Strategy::kAll:
      bits = all_select(ensemble);
      break;
    case Strategy::kTopK:
      bits = topk_select(ensemble, val_wd, cfg.selection.k_top);
      break;
    case Strategy::kRl: {
      RLConfig rc = cfg.selection.rl;
      rc.seed = rng::derive_seed(cfg.selection.rl.seed, kSearchDomain + r, f);
      auto [best, trace] = rl_select(ensemble, val_wd, rc);
      bits = std::move(best);
      const std::filesystem::path trace_path =
          out_dir / ("trace-r" + std::to_string(repeat) + "-f" +
                     std::to_string(fold_index) + ".json");
      std::ofstream out(trace_path, std::ios::binary);
      if (!out) {
        throw std::runtime_error("cannot write trace: " + trace_path.string());
      }
      out << trace_to_json(trace).dump(2) << '\n';
      break;
    }
  }

  const std::vector<int> preds = ensemble_predict(ensemble, bits, test_wd);
  std::vector<int> truth;
  truth.reserve(test_wd.windows.size());
  for (const auto& w : test_wd.windows) truth.push_back(w.label);

  FoldResult result;
  result.repeat = repeat;
  result.fold = fold_index;
  result.test_subject = fold.test_subject;
  result.confusion = confusion(truth, preds, wd.num_classes);
  result.macro_f1 = macro_f1(result.confusion);
  result.accuracy = accuracy(result.confusion);
  result.selection = std::move(bits);
  return result;
}

void write_report_file(const ExperimentConfig& cfg, const EvalReport& report,
                       const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "randhar-report";
  j["version"] = 1;
  j["generated_at"] = utc_timestamp();  // the only run-dependent field
  j["artifact"] =
      nlohmann::json{{"name", kArtifactName}, {"version", kArtifactVersion}};
  j["config"] = config_to_json(cfg);
  j["report"] = report_to_json(report);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write report: " + path.string());
  }
  out << j.dump(2) << '\n';
}

void write_manifest(const ExperimentConfig& cfg,
                    const std::filesystem::path& out_dir,
                    const std::string& status, const std::string& error,
                    std::size_t cells_done, std::size_t cells_total) {
  nlohmann::json j;
  j["format"] = "randhar-manifest";
  j["version"] = 1;
  j["artifact"] =
      nlohmann::json{{"name", kArtifactName}, {"version", kArtifactVersion}};
  j["config_fingerprint"] = config_fingerprint(cfg);
  j["status"] = status;
  if (!error.empty()) j["error"] = error;
  j["cells_completed"] = cells_done;
  j["cells_total"] = cells_total;
  j["generated_at"] = utc_timestamp();
  std::ofstream out(out_dir / "MANIFEST.json", std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write manifest in " + out_dir.string());
  }
  out << j.dump(2) << '\n';
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& cfg,
                          const std::filesystem::path& out_dir) {
  validate(cfg);
  std::filesystem::create_directories(out_dir);

  EvalReport report;
  report.method = to_string(cfg.selection.strategy);
  report.config_fingerprint = config_fingerprint(cfg);
  report.seeds = {{"root", cfg.seed},
                  {"data", cfg.data_seed},
                  {"ensemble", cfg.ensemble.seed},
                  {"training", cfg.training.seed},
                  {"selection", cfg.selection.rl.seed}};

  std::vector<std::optional<FoldResult>> cells;
  std::size_t cells_total = 0;
  try {
    const Dataset data = cfg.synthetic
                             ? generate_synthetic(*cfg.synthetic, cfg.data_seed)
                             : load_csv(cfg.csv_path);
    const WindowedDataset wd =
        slide_windows(data, cfg.window.width, cfg.window.stride);

    std::vector<SplitPlan> plans;
    plans.reserve(static_cast<std::size_t>(cfg.repeats));
    for (int r = 0; r < cfg.repeats; ++r) {
      const std::uint64_t split_seed = rng::derive_seed(
          cfg.seed, kSplitDomain + static_cast<std::uint64_t>(r));
      plans.push_back(cfg.split.loso
                          ? loso_splits(wd, cfg.split.val_fraction, split_seed)
                          : kfold_splits(wd, cfg.split.folds,
                                         cfg.split.val_fraction, split_seed));
    }
    const std::size_t folds_per_repeat = plans.front().folds.size();
    cells_total = folds_per_repeat * static_cast<std::size_t>(cfg.repeats);
    cells.resize(cells_total);

    // Cells are independent; member training stays serial inside each cell
    // so the two levels do not multiply the worker count.
    parallel_for(cells_total, cfg.jobs, [&](std::size_t idx) {
      const int r = static_cast<int>(idx / folds_per_repeat);
      const int f = static_cast<int>(idx % folds_per_repeat);
      cells[idx] = run_cell(cfg, wd, plans[static_cast<std::size_t>(r)]
                                        .folds[static_cast<std::size_t>(f)],
                            r, f, out_dir, cfg.jobs > 1 ? 1 : cfg.jobs);
    });
  } catch (const std::exception& e) {
    for (auto& cell : cells) {
      if (cell) report.folds.push_back(std::move(*cell));
    }
    write_report_file(cfg, report, out_dir / "report.json");
    write_metrics_csv(report, out_dir / "metrics.csv");
    write_manifest(cfg, out_dir, "incomplete", e.what(), report.folds.size(),
                   cells_total);
    throw;
  }

  for (auto& cell : cells) report.folds.push_back(std::move(*cell));
  write_report_file(cfg, report, out_dir / "report.json");
  write_metrics_csv(report, out_dir / "metrics.csv");
  write_manifest(cfg, out_dir, "complete", "", report.folds.size(),
                 cells_total);
  return report;
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open report: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("report " + path.string() +
                             " is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "randhar-report" || j.value("version", 0) != 1) {
    throw std::runtime_error("unsupported report format: " + path.string());
  }
  return report_from_json(j.at("report"));
}

Comparison compare_reports(const std::vector<EvalReport>& reports) {
  if (reports.size() < 2) {
    throw std::invalid_argument("compare: need at least two reports");
  }
  const auto& first = reports.front();
  for (const auto& report : reports) {
    if (report.folds.size() != first.folds.size() || report.folds.empty()) {
      throw std::runtime_error("compare: reports do not share fold structure");
    }
    for (std::size_t i = 0; i < report.folds.size(); ++i) {
      if (report.folds[i].repeat != first.folds[i].repeat ||
          report.folds[i].fold != first.folds[i].fold ||
          report.folds[i].test_subject != first.folds[i].test_subject) {
        throw std::runtime_error(
            "compare: reports do not share fold structure");
      }
    }
  }

  Comparison c;
  for (const auto& report : reports) {
    c.rows.push_back(ComparisonRow{report.method, report.aggregate_macro_f1(),
                                   report.aggregate_accuracy()});
  }
  for (std::size_t a = 0; a < reports.size(); ++a) {
    for (std::size_t b = a + 1; b < reports.size(); ++b) {
      std::vector<double> scores_a, scores_b;
      for (std::size_t i = 0; i < reports[a].folds.size(); ++i) {
        scores_a.push_back(reports[a].folds[i].macro_f1);
        scores_b.push_back(reports[b].folds[i].macro_f1);
      }
      c.pairs.push_back(ComparisonPair{reports[a].method, reports[b].method,
                                       paired_ttest(scores_a, scores_b)});
    }
  }
  return c;
}

std::string format_comparison(const Comparison& c) {
  std::ostringstream out;
  std::size_t width = 6;
  for (const auto& row : c.rows) width = std::max(width, row.method.size());
  char line[160];
  std::snprintf(line, sizeof(line), "%-*s  %-19s  %-19s\n",
                static_cast<int>(width), "method", "macro_f1 mean±std",
                "accuracy mean±std");
  out << line;
  for (const auto& row : c.rows) {
    std::snprintf(line, sizeof(line), "%-*s  %8.4f ± %-8.4f  %8.4f ± %-8.4f\n",
                  static_cast<int>(width), row.method.c_str(),
                  row.macro_f1.mean, row.macro_f1.std_cells, row.accuracy.mean,
                  row.accuracy.std_cells);
    out << line;
  }
  out << "\npairwise paired t-test on macro-F1 (two-sided):\n";
  for (const auto& pair : c.pairs) {
    if (pair.macro_f1_test.identical) {
      std::snprintf(line, sizeof(line), "%s vs %s: identical scores, p = 1\n",
                    pair.method_a.c_str(), pair.method_b.c_str());
    } else {
      std::snprintf(line, sizeof(line), "%s vs %s: t = %.4f, p = %.6g\n",
                    pair.method_a.c_str(), pair.method_b.c_str(),
                    pair.macro_f1_test.t, pair.macro_f1_test.p);
    }
    out << line;
  }
  return out.str();
}

}  // namespace randhar
