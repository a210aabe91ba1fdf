#include "randhar/ensemble.hpp"

#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "randhar/rng.hpp"
#include "randhar/util.hpp"

namespace randhar {

std::vector<SensorMask> sample_masks(std::size_t num_channels, std::size_t k,
                                     double p, std::uint64_t seed) {
  if (num_channels < 1 || k < 1) {
    throw std::invalid_argument("sample_masks: need >= 1 channel and >= 1 mask");
  }
  if (!(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("sample_masks: p must be in (0, 1]");
  }
  rng::Engine engine(seed);
  std::vector<SensorMask> masks;
  masks.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    SensorMask mask;
    mask.bits.assign(num_channels, 0);
    bool ok = false;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      for (auto& b : mask.bits) {
        b = rng::uniform01(engine) < p ? 1 : 0;
      }
      if (mask.any()) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw std::runtime_error(
          "sample_masks: could not draw a non-empty mask in 1000 attempts; "
          "increase p");
    }
    masks.push_back(std::move(mask));
  }
  return masks;
}

TrainedEnsemble train_ensemble(const WindowedDataset& train_set,
                               const WindowedDataset& val_set,
                               const std::vector<SensorMask>& masks,
                               const ModelConfig& cfg_template,
                               const TrainConfig& tc, std::uint64_t seed,
                               int jobs) {
  if (masks.empty()) {
    throw std::invalid_argument("train_ensemble: no masks");
  }
  const std::size_t n_channels = train_set.num_channels();
  for (const auto& mask : masks) {
    if (mask.bits.size() != n_channels) {
      throw std::invalid_argument(
          "train_ensemble: mask length does not match channel count");
    }
    if (!mask.any()) {
      throw std::invalid_argument("train_ensemble: empty sensor subset");
    }
  }

  TrainedEnsemble ensemble;
  ensemble.members.resize(masks.size());
  ensemble.channel_names = train_set.channel_names;
  ensemble.num_classes = train_set.num_classes;

  parallel_for(masks.size(), jobs, [&](std::size_t i) {
    try {
      const std::uint64_t member_seed = seed + i;
      ModelConfig cfg = cfg_template;
      cfg.input_channels = static_cast<int>(masks[i].popcount());
      cfg.input_width = train_set.width;
      cfg.num_classes = train_set.num_classes;
      const WindowedDataset member_train = apply_mask(train_set, masks[i]);
      const WindowedDataset member_val = apply_mask(val_set, masks[i]);
      Classifier model = init_model(cfg, rng::derive_seed(member_seed, 1));
      TrainConfig member_tc = tc;
      member_tc.seed = rng::derive_seed(member_seed, 2);
      ensemble.members[i].mask = masks[i];
      ensemble.members[i].model =
          train(model, member_train, member_val, member_tc);
    } catch (const std::exception& e) {
      throw std::runtime_error("member " + std::to_string(i) + ": " +
                               e.what());
    }
  });
  return ensemble;
}

int mode_vote(const std::vector<int>& labels) {
  if (labels.empty()) {
    throw std::invalid_argument("mode_vote: no voters");
  }
  std::map<int, int> counts;
  for (int label : labels) ++counts[label];
  int best_label = counts.begin()->first;
  int best_count = counts.begin()->second;
  for (const auto& [label, count] : counts) {
    if (count > best_count) {  // map order makes ties keep the smallest id
      best_label = label;
      best_count = count;
    }
  }
  return best_label;
}

std::vector<int> ensemble_predict(const TrainedEnsemble& e,
                                  const std::vector<std::uint8_t>& selection,
                                  const WindowedDataset& wd) {
  if (selection.size() != e.size()) {
    throw std::invalid_argument(
        "ensemble_predict: selection length does not match ensemble size");
  }
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < selection.size(); ++i) {
    if (selection[i]) active.push_back(i);
  }
  if (active.empty()) {
    throw std::invalid_argument("ensemble_predict: empty model subset");
  }

  std::vector<std::vector<int>> member_preds(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const auto& member = e.members[active[a]];
    member_preds[a] = predict_batch(member.model, apply_mask(wd, member.mask));
  }

  std::vector<int> out;
  out.reserve(wd.windows.size());
  std::vector<int> votes(active.size());
  for (std::size_t w = 0; w < wd.windows.size(); ++w) {
    for (std::size_t a = 0; a < active.size(); ++a) {
      votes[a] = member_preds[a][w];
    }
    out.push_back(mode_vote(votes));
  }
  return out;
}

void save_ensemble(const TrainedEnsemble& e,
                   const std::filesystem::path& dir) {
  if (e.members.empty()) {
    throw std::invalid_argument("save_ensemble: empty ensemble");
  }
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "randhar-ensemble";
  manifest["version"] = 1;
  manifest["k"] = e.members.size();
  manifest["num_classes"] = e.num_classes;
  manifest["channel_names"] = e.channel_names;
  nlohmann::json masks = nlohmann::json::array();
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < e.members.size(); ++i) {
    masks.push_back(e.members[i].mask.bits);
    const std::string name = "member-" + std::to_string(i) + ".json";
    files.push_back(name);
    save_model(e.members[i].model, dir / name);
  }
  manifest["masks"] = std::move(masks);
  manifest["members"] = std::move(files);
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write ensemble manifest in " +
                             dir.string());
  }
  out << manifest.dump(2) << '\n';
}

TrainedEnsemble load_ensemble(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) {
    throw std::runtime_error("cannot open ensemble manifest in " +
                             dir.string());
  }
  nlohmann::json manifest;
  in >> manifest;
  if (manifest.value("format", "") != "randhar-ensemble" ||
      manifest.value("version", 0) != 1) {
    throw std::runtime_error("unsupported ensemble manifest in " +
                             dir.string());
  }
  TrainedEnsemble e;
  e.num_classes = manifest.at("num_classes").get<int>();
  e.channel_names =
      manifest.at("channel_names").get<std::vector<std::string>>();
  const auto masks = manifest.at("masks");
  const auto files = manifest.at("members");
  if (masks.size() != files.size() || masks.empty()) {
    throw std::runtime_error("ensemble manifest member/mask mismatch in " +
                             dir.string());
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    EnsembleMember member;
    member.mask.bits = masks[i].get<std::vector<std::uint8_t>>();
    if (!member.mask.any()) {
      throw std::runtime_error("ensemble manifest holds an empty mask in " +
                               dir.string());
    }
    member.model = load_model(dir / files[i].get<std::string>());
    e.members.push_back(std::move(member));
  }
  return e;
}

}  // namespace randhar
