#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace randhar {

// Multi-sensor labeled time series. All channels share one time axis; labels
// and subject ids are per timestep.
struct Channel {
  std::string name;
  std::vector<double> samples;
};

struct Dataset {
  std::vector<Channel> channels;
  std::vector<int> labels;    // class ids in [0, num_classes)
  std::vector<int> subjects;  // subject ids >= 0
  double sample_rate_hz = 50.0;
  int num_classes = 0;

  std::size_t num_timesteps() const { return labels.size(); }
  std::size_t num_channels() const { return channels.size(); }
};

// Throws std::invalid_argument if the dataset invariants do not hold
// (equal lengths, T >= 1, n >= 1, labels and subjects in range).
void validate(const Dataset& d);

// One fixed-length segment. x holds channel-major readings (channels x width,
// row-major), so channel c occupies x[c*width .. c*width+width).
struct Window {
  std::vector<double> x;
  int label = 0;
  int subject = 0;
};

struct WindowedDataset {
  std::vector<Window> windows;
  std::vector<std::string> channel_names;
  int num_classes = 0;
  int width = 0;

  std::size_t num_channels() const { return channel_names.size(); }
  std::size_t size() const { return windows.size(); }
};

// Binary channel-inclusion vector; bit i keeps channel i.
struct SensorMask {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  int popcount() const;
  bool any() const;
  static SensorMask ones(std::size_t n);
};

// One cross-validation fold: window indices, pairwise disjoint.
// test_subject is the held-out subject id for LOSO folds, -1 otherwise.
struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  int test_subject = -1;
};

struct SplitPlan {
  std::vector<Fold> folds;
};

// Synthetic generator. Channel roles:
//   informative  - a distinct waveform per class
//   noise        - zero signal, noise only
//   conflicting  - classes conflict_a and conflict_b share one waveform, so
//                  this channel cannot separate them
enum class ChannelRole { kInformative, kNoise, kConflicting };
enum class Waveform { kSine, kStep };

struct SyntheticChannel {
  std::string name;
  ChannelRole role = ChannelRole::kInformative;
  Waveform waveform = Waveform::kSine;
  double amplitude = 1.0;
  int conflict_a = -1;  // conflicting role only
  int conflict_b = -1;
};

struct SyntheticSpec {
  int num_subjects = 2;
  int num_classes = 2;
  int segment_len = 64;        // timesteps per constant-label segment
  int segments_per_subject = 8;
  std::vector<SyntheticChannel> channels;
  double noise_sigma = 0.1;    // additive Gaussian noise on every channel
  double amp_jitter = 0.0;     // per (subject, channel) amplitude spread
  double phase_jitter = 0.0;   // per (subject, channel) phase offset, radians
  double sample_rate_hz = 50.0;
};

// CSV with header "subject,label,<channel names...>", one row per timestep,
// rows grouped contiguously by subject. num_classes = 1 + max label.
Dataset load_csv(const std::filesystem::path& path);

// Inverse of load_csv; lossless (shortest round-trip float formatting) and
// byte-stable for a fixed Dataset.
void save_csv(const Dataset& d, const std::filesystem::path& path);

// Deterministic per (spec, seed). Per-subject segment labels cycle through
// all classes before shuffling, so every class occurs for every subject when
// segments_per_subject >= num_classes.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// Sliding-window segmentation. Windows never span a subject boundary; the
// window label is the majority label of its span (tie: label at the last
// timestep); output is ordered by (subject, start index).
WindowedDataset slide_windows(const Dataset& d, int window, int stride);

// Keeps exactly the channel rows where the mask bit is 1, order preserved.
WindowedDataset apply_mask(const WindowedDataset& wd, const SensorMask& mask);

// Subset by window index, shape metadata preserved.
WindowedDataset select_windows(const WindowedDataset& wd,
                               std::span<const std::size_t> indices);

// One fold per subject; the held-out subject forms the test set and the rest
// is split into train/validation by stratified-by-class seeded sampling.
SplitPlan loso_splits(const WindowedDataset& wd, double val_fraction,
                      std::uint64_t seed);

// Contiguous-block test folds over window order (overlapping windows shared
// across shuffled folds would leak), train/validation split as in LOSO.
SplitPlan kfold_splits(const WindowedDataset& wd, int k, double val_fraction,
                       std::uint64_t seed);

// Per-channel z-score parameters, fit on a window subset (the train split).
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at 1 when a channel is constant
};

ChannelStats fit_normalizer(const WindowedDataset& wd,
                            std::span<const std::size_t> indices);
WindowedDataset apply_normalizer(const WindowedDataset& wd,
                                 const ChannelStats& stats);

}  // namespace randhar
