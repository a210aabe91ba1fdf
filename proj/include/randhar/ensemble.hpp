#ifndef RANDHAR_ENSEMBLE_HPP
#define RANDHAR_ENSEMBLE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "randhar/data.hpp"
#include "randhar/nn.hpp"

namespace randhar {

// One trained base model together with the channel subset it was trained on.
struct EnsembleMember {
  SensorMask mask;
  Classifier model;
};

struct TrainedEnsemble {
  std::vector<EnsembleMember> members;
  std::vector<std::string> channel_names;
  int num_classes = 0;

  std::size_t size() const { return members.size(); }
};

// Draws k channel masks with i.i.d. Bernoulli(p) bits. All-zero draws are
// rejected and resampled (at most 1000 attempts per mask); duplicates are
// allowed.
std::vector<SensorMask> sample_masks(std::size_t num_channels, std::size_t k,
                                     double p, std::uint64_t seed);

// Trains one model per mask on the masked view of train/val. The per-member
// config is the template with input_channels replaced by the mask popcount.
// Member i trains with root seed `seed + i`; training failures are rethrown
// annotated with the member index. `jobs` > 1 fans members out across
// threads without changing any result.
TrainedEnsemble train_ensemble(const WindowedDataset& train_set,
                               const WindowedDataset& val_set,
                               const std::vector<SensorMask>& masks,
                               const ModelConfig& cfg_template,
                               const TrainConfig& tc, std::uint64_t seed,
                               int jobs = 1);

// Majority vote; ties go to the smallest class id among the tied labels.
int mode_vote(const std::vector<int>& labels);

// Predicts every window with the members whose selection bit is set and
// aggregates with mode_vote. A cleared bit excludes that member from the
// vote entirely.
std::vector<int> ensemble_predict(const TrainedEnsemble& e,
                                  const std::vector<std::uint8_t>& selection,
                                  const WindowedDataset& wd);

// Directory layout: manifest.json (masks, channel names, k, class count)
// plus one model dump per member.
void save_ensemble(const TrainedEnsemble& e,
                   const std::filesystem::path& dir);
TrainedEnsemble load_ensemble(const std::filesystem::path& dir);

}  // namespace randhar

#endif  // RANDHAR_ENSEMBLE_HPP
