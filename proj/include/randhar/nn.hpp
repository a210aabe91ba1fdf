#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "randhar/data.hpp"

namespace randhar {

enum class Architecture { kMlp, kCnn1d };

struct ConvLayerConfig {
  int filters = 1;
  int kernel = 1;
  int pool = 1;  // non-overlapping max-pool width; 1 disables pooling
};

// Architecture template. For kMlp, hidden_sizes lists the hidden widths (may
// be empty: a plain linear classifier); for kCnn1d each conv stage is
// conv -> relu -> max-pool and a dense layer maps the flattened output to
// num_classes.
struct ModelConfig {
  Architecture architecture = Architecture::kMlp;
  std::vector<int> hidden_sizes;
  std::vector<ConvLayerConfig> conv_layers;
  int input_channels = 0;
  int input_width = 0;
  int num_classes = 0;
};

void validate(const ModelConfig& cfg);

// Flat-parameter views: [weights_begin, weights_begin+weights_count) then
// [bias_begin, bias_begin+bias_count) inside Classifier::params, one entry
// per trainable layer in forward order.
struct LayerShape {
  std::size_t weights_begin = 0;
  std::size_t weights_count = 0;
  std::size_t bias_begin = 0;
  std::size_t bias_count = 0;
};

std::vector<LayerShape> layer_shapes(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

struct TrainConfig {
  double initial_lr = 1e-4;
  double plateau_factor = 10.0;  // lr divisor on plateau
  int plateau_patience = 5;      // epochs without improvement before decay
  int max_epochs = 50;
  int early_stop_patience = 10;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& tc);

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
};

struct Classifier {
  ModelConfig config;
  std::vector<double> params;
  std::vector<EpochStats> history;  // one entry per completed training epoch
};

// Glorot-uniform weights (a = sqrt(6 / (fan_in + fan_out))), zero biases,
// deterministic per seed.
Classifier init_model(const ModelConfig& cfg, std::uint64_t seed);

// Softmax class probabilities for one window (x is channel-major,
// input_channels * input_width values).
std::vector<double> forward(const Classifier& model, std::span<const double> x);
std::vector<double> forward(const Classifier& model, const Window& w);

struct LossGrad {
  double loss = 0.0;               // mean cross-entropy over the batch
  std::vector<double> grad;        // same length as model.params
};

LossGrad loss_and_grad(const Classifier& model, const WindowedDataset& data,
                       std::span<const std::size_t> indices);
LossGrad loss_and_grad(const Classifier& model, const WindowedDataset& batch);

// Mean cross-entropy without gradients (validation scoring).
double mean_loss(const Classifier& model, const WindowedDataset& data);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over seeded shuffled mini-batches.
// After each epoch the validation loss is checked: no improvement (strict
// decrease by >= 1e-6) for plateau_patience epochs divides the learning rate
// by plateau_factor, and early_stop_patience epochs without improvement stop
// training. Returns the parameters of the best-validation-loss epoch.
Classifier train(const Classifier& model, const WindowedDataset& train_set,
                 const WindowedDataset& val_set, const TrainConfig& tc);

// Argmax of forward() per window; ties resolve to the lowest class id.
std::vector<int> predict_batch(const Classifier& model,
                               const WindowedDataset& wd);

// JSON parameter dump: {"format": "randhar-model", "version": 1, config,
// parameters}. Training history is not persisted.
void save_model(const Classifier& model, const std::filesystem::path& path);
Classifier load_model(const std::filesystem::path& path);

}  // namespace randhar
