#include "randhar/selection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "randhar/rng.hpp"

namespace randhar {

void validate(const RLConfig& rc) {
  if (rc.draws < 1) {
    throw std::invalid_argument("rl config: draws must be >= 1");
  }
  if (!(rc.step_size > 0.0)) {
    throw std::invalid_argument("rl config: step_size must be > 0");
  }
  if (rc.iterations < 1) {
    throw std::invalid_argument("rl config: iterations must be >= 1");
  }
}

std::string bits_to_string(const std::vector<std::uint8_t>& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) s[i] = '1';
  }
  return s;
}

std::vector<std::uint8_t> bits_from_string(const std::string& s) {
  std::vector<std::uint8_t> bits(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') {
      bits[i] = 1;
    } else if (s[i] != '0') {
      throw std::invalid_argument("bits string must contain only 0 and 1");
    }
  }
  return bits;
}

nlohmann::json trace_to_json(const SearchTrace& trace) {
  nlohmann::json iterations = nlohmann::json::array();
  for (const auto& it : trace.iterations) {
    nlohmann::json draws = nlohmann::json::array();
    for (std::size_t d = 0; d < it.draw_bits.size(); ++d) {
      draws.push_back(nlohmann::json{{"bits", it.draw_bits[d]},
                                     {"reward", it.draw_rewards[d]}});
    }
    iterations.push_back(nlohmann::json{{"mu", it.mu},
                                        {"mean_reward", it.mean_reward},
                                        {"best_reward", it.best_reward},
                                        {"empty_draws", it.empty_draws},
                                        {"draws", std::move(draws)}});
  }
  return nlohmann::json{{"iterations", std::move(iterations)},
                        {"best_bits", bits_to_string(trace.best_bits)},
                        {"best_reward", trace.best_reward}};
}

double reward(const TrainedEnsemble& e, const std::vector<std::uint8_t>& bits,
              const WindowedDataset& val, std::size_t n1,
              std::uint64_t seed) {
  if (val.windows.empty()) {
    throw std::invalid_argument("reward: empty validation set");
  }
  if (n1 > val.windows.size()) {
    throw std::invalid_argument("reward: sample count exceeds validation size");
  }
  if (std::none_of(bits.begin(), bits.end(),
                   [](std::uint8_t b) { return b != 0; })) {
    return 0.0;  // empty selection sentinel; lets the search recover
  }
  const WindowedDataset* eval_set = &val;
  WindowedDataset subsample;
  if (n1 != 0 && n1 < val.windows.size()) {
    std::vector<std::size_t> order(val.windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Engine engine(seed);
    rng::shuffle(order, engine);
    order.resize(n1);
    subsample = select_windows(val, order);
    eval_set = &subsample;
  }
  const std::vector<int> preds = ensemble_predict(e, bits, *eval_set);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == eval_set->windows[i].label) ++correct;
  }
  return static_cast<double>(correct) /
         static_cast<double>(eval_set->windows.size());
}

SelectionSample sample_theta(const SearchMean& mu, std::uint64_t seed) {
  SelectionSample s;
  s.theta.resize(mu.mu.size());
  s.bits.resize(mu.mu.size());
  rng::Engine engine(seed);
  for (std::size_t j = 0; j < mu.mu.size(); ++j) {
    s.theta[j] = mu.mu[j] + rng::gaussian(engine);
    s.bits[j] = s.theta[j] > 0.5 ? 1 : 0;
  }
  return s;
}

std::vector<double> gradient_estimate(
    const SearchMean& mu, const std::vector<SelectionSample>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("gradient_estimate: no samples");
  }
  std::vector<double> grad(mu.mu.size(), 0.0);
  for (const auto& s : samples) {
    if (s.theta.size() != mu.mu.size()) {
      throw std::invalid_argument("gradient_estimate: sample length mismatch");
    }
    for (std::size_t j = 0; j < grad.size(); ++j) {
      grad[j] += s.reward * (s.theta[j] - mu.mu[j]);
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (double& g : grad) g *= inv;
  return grad;
}

std::pair<std::vector<std::uint8_t>, SearchTrace> rl_search(
    std::size_t k, const RewardFn& fn, const RLConfig& rc) {
  if (k < 1) {
    throw std::invalid_argument("rl_search: need >= 1 candidate");
  }
  validate(rc);

  SearchMean mean;
  mean.mu.assign(k, 0.5);  // every candidate starts as a coin flip
  SearchTrace trace;
  trace.iterations.reserve(static_cast<std::size_t>(rc.iterations));
  std::unordered_map<std::string, double> memo;
  std::vector<std::uint8_t> best_bits;
  double best_reward = -1.0;

  for (int it = 0; it < rc.iterations; ++it) {
    std::vector<SelectionSample> samples;
    samples.reserve(static_cast<std::size_t>(rc.draws));
    IterationTrace itrace;
    for (int d = 0; d < rc.draws; ++d) {
      SelectionSample s = sample_theta(
          mean, rng::derive_seed(rc.seed, 2 + static_cast<std::uint64_t>(it),
                                 static_cast<std::uint64_t>(d)));
      const std::string key = bits_to_string(s.bits);
      const bool empty =
          std::none_of(s.bits.begin(), s.bits.end(),
                       [](std::uint8_t b) { return b != 0; });
      if (empty) {
        s.reward = 0.0;
        ++itrace.empty_draws;
      } else if (rc.memoize) {
        auto found = memo.find(key);
        if (found == memo.end()) {
          found = memo.emplace(key, fn(s.bits)).first;
        }
        s.reward = found->second;
      } else {
        s.reward = fn(s.bits);
      }
      if (!empty && s.reward > best_reward) {
        best_reward = s.reward;
        best_bits = s.bits;
      }
      itrace.draw_bits.push_back(key);
      itrace.draw_rewards.push_back(s.reward);
      samples.push_back(std::move(s));
    }
    const std::vector<double> grad = gradient_estimate(mean, samples);
    for (std::size_t j = 0; j < k; ++j) {
      mean.mu[j] += rc.step_size * grad[j];
    }
    itrace.mu = mean.mu;
    itrace.mean_reward =
        std::accumulate(itrace.draw_rewards.begin(), itrace.draw_rewards.end(),
                        0.0) /
        static_cast<double>(rc.draws);
    itrace.best_reward = best_reward < 0.0 ? 0.0 : best_reward;
    trace.iterations.push_back(std::move(itrace));
  }

  if (best_bits.empty()) {
    throw std::runtime_error(
        "rl_search: search collapsed — every sampled selection was empty");
  }
  trace.best_bits = best_bits;
  trace.best_reward = best_reward;
  return {std::move(best_bits), std::move(trace)};
}

std::pair<std::vector<std::uint8_t>, SearchTrace> rl_select(
    const TrainedEnsemble& e, const WindowedDataset& val, const RLConfig& rc) {
  if (e.members.empty()) {
    throw std::invalid_argument("rl_select: empty ensemble");
  }
  if (val.windows.empty()) {
    throw std::invalid_argument("rl_select: empty validation set");
  }
  const std::size_t n1 =
      rc.reward_samples == 0 ? val.windows.size() : rc.reward_samples;
  if (n1 > val.windows.size()) {
    throw std::invalid_argument(
        "rl_select: reward_samples exceeds validation size");
  }
  // One subsample shared by every evaluation keeps rewards a pure function
  // of the bits pattern, which the memo cache relies on.
  const std::uint64_t subsample_seed = rng::derive_seed(rc.seed, 1, 0);
  const RewardFn fn = [&](const std::vector<std::uint8_t>& bits) {
    return reward(e, bits, val, n1, subsample_seed);
  };
  return rl_search(e.size(), fn, rc);
}

std::vector<std::uint8_t> topk_select(const TrainedEnsemble& e,
                                      const WindowedDataset& val,
                                      std::size_t k_top) {
  if (e.members.empty()) {
    throw std::invalid_argument("topk_select: empty ensemble");
  }
  if (k_top < 1 || k_top > e.size()) {
    throw std::invalid_argument("topk_select: k_top must be in [1, k]");
  }
  if (val.windows.empty()) {
    throw std::invalid_argument("topk_select: empty validation set");
  }
  std::vector<double> acc(e.size(), 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto preds =
        predict_batch(e.members[i].model, apply_mask(val, e.members[i].mask));
    std::size_t correct = 0;
    for (std::size_t w = 0; w < preds.size(); ++w) {
      if (preds[w] == val.windows[w].label) ++correct;
    }
    acc[i] = static_cast<double>(correct) /
             static_cast<double>(val.windows.size());
  }
  std::vector<std::size_t> order(e.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a,
                                                   std::size_t b) {
    return acc[a] > acc[b];  // stable sort keeps lower index first on ties
  });
  std::vector<std::uint8_t> bits(e.size(), 0);
  for (std::size_t i = 0; i < k_top; ++i) bits[order[i]] = 1;
  return bits;
}

std::vector<std::uint8_t> all_select(const TrainedEnsemble& e) {
  if (e.members.empty()) {
    throw std::invalid_argument("all_select: empty ensemble");
  }
  return std::vector<std::uint8_t>(e.size(), 1);
}

std::vector<std::uint8_t> brute_force_search(std::size_t k,
                                             const RewardFn& fn) {
  if (k < 1) {
    throw std::invalid_argument("brute_force_search: need >= 1 candidate");
  }
  if (k > 20) {
    throw std::invalid_argument(
        "brute_force_search: oracle limit — k must be <= 20");
  }
  std::vector<std::uint8_t> best_bits;
  double best_reward = -std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> bits(k, 0);
  for (std::uint32_t pattern = 1; pattern < (1u << k); ++pattern) {
    for (std::size_t j = 0; j < k; ++j) {
      bits[j] = (pattern >> j) & 1u;
    }
    const double r = fn(bits);
    if (r > best_reward ||
        (r == best_reward &&
         std::lexicographical_compare(bits.begin(), bits.end(),
                                      best_bits.begin(), best_bits.end()))) {
      best_reward = r;
      best_bits = bits;
    }
  }
  return best_bits;
}

std::vector<std::uint8_t> brute_force_select(const TrainedEnsemble& e,
                                             const WindowedDataset& val) {
  if (e.members.empty()) {
    throw std::invalid_argument("brute_force_select: empty ensemble");
  }
  if (val.windows.empty()) {
    throw std::invalid_argument("brute_force_select: empty validation set");
  }
  return brute_force_search(e.size(), [&](const std::vector<std::uint8_t>& b) {
    return reward(e, b, val, val.windows.size(), 0);
  });
}

}  // namespace randhar
