#ifndef RANDHAR_SELECTION_HPP
#define RANDHAR_SELECTION_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "randhar/ensemble.hpp"

namespace randhar {

// Mean of the Gaussian search distribution over selection vectors.
struct SearchMean {
  std::vector<double> mu;
};

// One Monte-Carlo draw: continuous theta from N(mu, I), its thresholded
// bits (theta_j > 0.5), and the reward once evaluated.
struct SelectionSample {
  std::vector<double> theta;
  std::vector<std::uint8_t> bits;
  double reward = 0.0;
};

struct RLConfig {
  // Validation windows per reward evaluation; 0 means the full set.
  std::size_t reward_samples = 0;
  int draws = 10;           // Monte-Carlo draws per iteration
  double step_size = 0.1;   // gradient ascent step on mu
  int iterations = 100;
  std::uint64_t seed = 0;
  bool memoize = true;      // cache rewards by bits pattern
};

void validate(const RLConfig& rc);

struct IterationTrace {
  std::vector<double> mu;  // mean after this iteration's update
  double mean_reward = 0.0;
  double best_reward = 0.0;  // best seen up to and including this iteration
  std::vector<std::string> draw_bits;
  std::vector<double> draw_rewards;
  int empty_draws = 0;
};

struct SearchTrace {
  std::vector<IterationTrace> iterations;
  std::vector<std::uint8_t> best_bits;
  double best_reward = 0.0;
};

std::string bits_to_string(const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> bits_from_string(const std::string& s);

nlohmann::json trace_to_json(const SearchTrace& trace);

// Accuracy of the selected sub-ensemble over `n1` validation windows — the
// full set when n1 equals the validation size (or is 0), else a seeded
// uniform subsample without replacement. An empty selection scores 0 so a
// search can recover from it instead of aborting.
double reward(const TrainedEnsemble& e, const std::vector<std::uint8_t>& bits,
              const WindowedDataset& val, std::size_t n1, std::uint64_t seed);

// theta_j = mu_j + z_j with z_j ~ N(0, 1); reward left unset.
SelectionSample sample_theta(const SearchMean& mu, std::uint64_t seed);

// (1/N) sum_i reward_i * (theta_i - mu).
std::vector<double> gradient_estimate(const SearchMean& mu,
                                      const std::vector<SelectionSample>& samples);

using RewardFn = std::function<double(const std::vector<std::uint8_t>&)>;

// Gradient search over an arbitrary black-box reward: mu starts at 0.5 per
// entry, each iteration draws `rc.draws` samples (per-draw seed derived from
// (rc.seed, iteration, draw), so scheduling cannot change results), ascends
// mu, and tracks the best-reward bits ever evaluated. Returns the best-seen
// bits — never the thresholded final mu if that scored worse.
std::pair<std::vector<std::uint8_t>, SearchTrace> rl_search(
    std::size_t k, const RewardFn& fn, const RLConfig& rc);

// rl_search against the sub-ensemble validation reward.
std::pair<std::vector<std::uint8_t>, SearchTrace> rl_select(
    const TrainedEnsemble& e, const WindowedDataset& val, const RLConfig& rc);

// Selects the k_top members with the highest individual validation accuracy;
// ties go to the lower member index.
std::vector<std::uint8_t> topk_select(const TrainedEnsemble& e,
                                      const WindowedDataset& val,
                                      std::size_t k_top);

std::vector<std::uint8_t> all_select(const TrainedEnsemble& e);

// Exact argmax of `fn` over all non-empty subsets; reward ties go to the
// lexicographically smallest bits. Guarded at k <= 20.
std::vector<std::uint8_t> brute_force_search(std::size_t k,
                                             const RewardFn& fn);
std::vector<std::uint8_t> brute_force_select(const TrainedEnsemble& e,
                                             const WindowedDataset& val);

}  // namespace randhar

#endif  // RANDHAR_SELECTION_HPP
