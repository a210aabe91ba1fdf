#include "randhar/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "randhar/rng.hpp"

namespace randhar {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kImprovementEps = 1e-6;

struct CnnStage {
  int in_ch;
  int in_len;
  int filters;
  int kernel;
  int pool;
  int conv_len;
  int pool_len;
};

std::vector<CnnStage> cnn_stages(const ModelConfig& cfg) {
  std::vector<CnnStage> stages;
  int ch = cfg.input_channels;
  int len = cfg.input_width;
  for (const auto& layer : cfg.conv_layers) {
    CnnStage s;
    s.in_ch = ch;
    s.in_len = len;
    s.filters = layer.filters;
    s.kernel = layer.kernel;
    s.pool = layer.pool;
    s.conv_len = len - layer.kernel + 1;
    s.pool_len = s.conv_len / layer.pool;
    stages.push_back(s);
    ch = layer.filters;
    len = s.pool_len;
  }
  return stages;
}

void softmax_inplace(std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

// Per-sample activations, reused across a batch.
struct Scratch {
  // MLP: post-activation per layer (acts[0] is the input view copy).
  std::vector<std::vector<double>> acts;
  std::vector<std::vector<double>> deltas;
  // CNN: per stage conv post-relu and pooled values + argmax routing.
  std::vector<std::vector<double>> conv_acts;
  std::vector<std::vector<double>> pooled;
  std::vector<std::vector<int>> pool_arg;
  std::vector<double> logits;
};

void check_input(const ModelConfig& cfg, std::size_t got) {
  const std::size_t want = static_cast<std::size_t>(cfg.input_channels) *
                           static_cast<std::size_t>(cfg.input_width);
  if (got != want) {
    throw std::invalid_argument("forward: input size " + std::to_string(got) +
                                " does not match model input " +
                                std::to_string(want));
  }
}

void mlp_forward(const ModelConfig& cfg, const std::vector<LayerShape>& shapes,
                 const std::vector<double>& params, std::span<const double> x,
                 Scratch& s) {
  const std::size_t layers = shapes.size();
  s.acts.resize(layers + 1);
  s.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& sh = shapes[l];
    const std::size_t n_in = s.acts[l].size();
    const std::size_t n_out = sh.bias_count;
    auto& out = s.acts[l + 1];
    out.assign(params.begin() + static_cast<std::ptrdiff_t>(sh.bias_begin),
               params.begin() +
                   static_cast<std::ptrdiff_t>(sh.bias_begin + n_out));
    const double* w = params.data() + sh.weights_begin;
    const double* a = s.acts[l].data();
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = out[o];
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * a[i];
      out[o] = acc;
    }
    if (l + 1 < layers) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    }
  }
  s.logits = s.acts[layers];
}

void cnn_forward(const ModelConfig& cfg, const std::vector<LayerShape>& shapes,
                 const std::vector<double>& params, std::span<const double> x,
                 Scratch& s) {
  const auto stages = cnn_stages(cfg);
  s.conv_acts.resize(stages.size());
  s.pooled.resize(stages.size());
  s.pool_arg.resize(stages.size());
  const double* input = x.data();
  std::size_t input_size = x.size();
  for (std::size_t st = 0; st < stages.size(); ++st) {
    const auto& d = stages[st];
    const auto& sh = shapes[st];
    const double* w = params.data() + sh.weights_begin;
    const double* b = params.data() + sh.bias_begin;
    auto& act = s.conv_acts[st];
    act.assign(static_cast<std::size_t>(d.filters) * d.conv_len, 0.0);
    for (int f = 0; f < d.filters; ++f) {
      for (int i = 0; i < d.conv_len; ++i) {
        double acc = b[f];
        for (int c = 0; c < d.in_ch; ++c) {
          const double* wrow = w + (static_cast<std::size_t>(f) * d.in_ch + c) *
                                       d.kernel;
          const double* in = input + static_cast<std::size_t>(c) * d.in_len + i;
          for (int j = 0; j < d.kernel; ++j) acc += wrow[j] * in[j];
        }
        act[static_cast<std::size_t>(f) * d.conv_len + i] =
            acc > 0.0 ? acc : 0.0;
      }
    }
    auto& pooled = s.pooled[st];
    auto& arg = s.pool_arg[st];
    pooled.assign(static_cast<std::size_t>(d.filters) * d.pool_len, 0.0);
    arg.assign(pooled.size(), 0);
    for (int f = 0; f < d.filters; ++f) {
      for (int u = 0; u < d.pool_len; ++u) {
        int best = u * d.pool;
        double best_v = act[static_cast<std::size_t>(f) * d.conv_len + best];
        for (int j = 1; j < d.pool; ++j) {
          const int idx = u * d.pool + j;
          const double v = act[static_cast<std::size_t>(f) * d.conv_len + idx];
          if (v > best_v) {
            best_v = v;
            best = idx;
          }
        }
        pooled[static_cast<std::size_t>(f) * d.pool_len + u] = best_v;
        arg[static_cast<std::size_t>(f) * d.pool_len + u] = best;
      }
    }
    input = pooled.data();
    input_size = pooled.size();
  }
  // Dense head over the flattened last stage.
  const auto& sh = shapes.back();
  const std::size_t n_in = input_size;
  const std::size_t n_out = sh.bias_count;
  s.logits.assign(params.begin() + static_cast<std::ptrdiff_t>(sh.bias_begin),
                  params.begin() +
                      static_cast<std::ptrdiff_t>(sh.bias_begin + n_out));
  const double* w = params.data() + sh.weights_begin;
  for (std::size_t o = 0; o < n_out; ++o) {
    double acc = s.logits[o];
    const double* row = w + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * input[i];
    s.logits[o] = acc;
  }
}

void run_forward(const Classifier& model, std::span<const double> x,
                 const std::vector<LayerShape>& shapes, Scratch& s) {
  check_input(model.config, x.size());
  if (model.config.architecture == Architecture::kMlp) {
    mlp_forward(model.config, shapes, model.params, x, s);
  } else {
    cnn_forward(model.config, shapes, model.params, x, s);
  }
}

// Backprop for one sample; dlogits holds softmax(x) - onehot(y) on entry.
void mlp_backward(const std::vector<LayerShape>& shapes,
                  const std::vector<double>& params, const Scratch& s,
                  std::vector<double>& dlogits, std::vector<double>& grad) {
  const std::size_t layers = shapes.size();
  std::vector<double> dz = dlogits;
  for (std::size_t l = layers; l-- > 0;) {
    const auto& sh = shapes[l];
    const auto& a = s.acts[l];
    const std::size_t n_in = a.size();
    const std::size_t n_out = sh.bias_count;
    double* dw = grad.data() + sh.weights_begin;
    double* db = grad.data() + sh.bias_begin;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = dz[o];
      db[o] += d;
      double* row = dw + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) row[i] += d * a[i];
    }
    if (l == 0) break;
    const double* w = params.data() + sh.weights_begin;
    std::vector<double> da(n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = dz[o];
      const double* row = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) da[i] += row[i] * d;
    }
    for (std::size_t i = 0; i < n_in; ++i) {
      da[i] = a[i] > 0.0 ? da[i] : 0.0;  // relu mask from post-activation
    }
    dz = std::move(da);
  }
}

void cnn_backward(const ModelConfig& cfg,
                  const std::vector<LayerShape>& shapes,
                  const std::vector<double>& params, std::span<const double> x,
                  const Scratch& s, std::vector<double>& dlogits,
                  std::vector<double>& grad) {
  const auto stages = cnn_stages(cfg);
  const auto& dense = shapes.back();
  const double* flat = stages.empty() ? x.data() : s.pooled.back().data();
  const std::size_t flat_n = stages.empty() ? x.size() : s.pooled.back().size();
  const std::size_t n_out = dense.bias_count;
  double* dw = grad.data() + dense.weights_begin;
  double* db = grad.data() + dense.bias_begin;
  std::vector<double> dflat(flat_n, 0.0);
  const double* w = params.data() + dense.weights_begin;
  for (std::size_t o = 0; o < n_out; ++o) {
    const double d = dlogits[o];
    db[o] += d;
    double* wrow = dw + o * flat_n;
    const double* row = w + o * flat_n;
    for (std::size_t i = 0; i < flat_n; ++i) {
      wrow[i] += d * flat[i];
      dflat[i] += row[i] * d;
    }
  }

  for (std::size_t st = stages.size(); st-- > 0;) {
    const auto& d = stages[st];
    const auto& sh = shapes[st];
    // Un-pool: route pooled gradients to the argmax positions, relu-masked.
    std::vector<double> dz(static_cast<std::size_t>(d.filters) * d.conv_len,
                           0.0);
    const auto& act = s.conv_acts[st];
    const auto& arg = s.pool_arg[st];
    for (int f = 0; f < d.filters; ++f) {
      for (int u = 0; u < d.pool_len; ++u) {
        const std::size_t pi = static_cast<std::size_t>(f) * d.pool_len + u;
        const int src = arg[pi];
        const std::size_t ai = static_cast<std::size_t>(f) * d.conv_len + src;
        if (act[ai] > 0.0) dz[ai] += dflat[pi];
      }
    }
    const double* input =
        st == 0 ? x.data() : s.pooled[st - 1].data();
    double* dwc = grad.data() + sh.weights_begin;
    double* dbc = grad.data() + sh.bias_begin;
    const double* wc = params.data() + sh.weights_begin;
    std::vector<double> din;
    const bool need_din = st > 0;
    if (need_din) {
      din.assign(static_cast<std::size_t>(d.in_ch) * d.in_len, 0.0);
    }
    for (int f = 0; f < d.filters; ++f) {
      for (int i = 0; i < d.conv_len; ++i) {
        const double dv = dz[static_cast<std::size_t>(f) * d.conv_len + i];
        if (dv == 0.0) continue;
        dbc[f] += dv;
        for (int c = 0; c < d.in_ch; ++c) {
          const std::size_t base =
              (static_cast<std::size_t>(f) * d.in_ch + c) * d.kernel;
          const double* in = input + static_cast<std::size_t>(c) * d.in_len + i;
          for (int j = 0; j < d.kernel; ++j) {
            dwc[base + j] += dv * in[j];
          }
          if (need_din) {
            double* dst = din.data() + static_cast<std::size_t>(c) * d.in_len + i;
            const double* wrow = wc + base;
            for (int j = 0; j < d.kernel; ++j) dst[j] += dv * wrow[j];
          }
        }
      }
    }
    if (need_din) dflat = std::move(din);
  }
}

}  // namespace

void validate(const ModelConfig& cfg) {
  if (cfg.input_channels < 1 || cfg.input_width < 1) {
    throw std::invalid_argument("model config: input shape must be >= 1x1");
  }
  if (cfg.num_classes < 1) {
    throw std::invalid_argument("model config: num_classes must be >= 1");
  }
  if (cfg.architecture == Architecture::kMlp) {
    if (!cfg.conv_layers.empty()) {
      throw std::invalid_argument("model config: mlp must not set conv layers");
    }
    for (int h : cfg.hidden_sizes) {
      if (h < 1) {
        throw std::invalid_argument("model config: hidden sizes must be >= 1");
      }
    }
    return;
  }
  if (!cfg.hidden_sizes.empty()) {
    throw std::invalid_argument("model config: cnn1d must not set hidden sizes");
  }
  if (cfg.conv_layers.empty()) {
    throw std::invalid_argument("model config: cnn1d needs >= 1 conv layer");
  }
  int len = cfg.input_width;
  for (const auto& layer : cfg.conv_layers) {
    if (layer.filters < 1 || layer.kernel < 1 || layer.pool < 1) {
      throw std::invalid_argument(
          "model config: conv filters/kernel/pool must be >= 1");
    }
    if (layer.kernel > len) {
      throw std::invalid_argument(
          "model config: kernel " + std::to_string(layer.kernel) +
          " exceeds input length " + std::to_string(len));
    }
    len = (len - layer.kernel + 1) / layer.pool;
    if (len < 1) {
      throw std::invalid_argument(
          "model config: pooling collapses the sequence to zero length");
    }
  }
}

std::vector<LayerShape> layer_shapes(const ModelConfig& cfg) {
  validate(cfg);
  std::vector<LayerShape> shapes;
  std::size_t offset = 0;
  auto push = [&](std::size_t weights, std::size_t biases) {
    LayerShape sh;
    sh.weights_begin = offset;
    sh.weights_count = weights;
    sh.bias_begin = offset + weights;
    sh.bias_count = biases;
    offset += weights + biases;
    shapes.push_back(sh);
  };
  if (cfg.architecture == Architecture::kMlp) {
    std::size_t n_in = static_cast<std::size_t>(cfg.input_channels) *
                       static_cast<std::size_t>(cfg.input_width);
    for (int h : cfg.hidden_sizes) {
      push(n_in * static_cast<std::size_t>(h), static_cast<std::size_t>(h));
      n_in = static_cast<std::size_t>(h);
    }
    push(n_in * static_cast<std::size_t>(cfg.num_classes),
         static_cast<std::size_t>(cfg.num_classes));
    return shapes;
  }
  const auto stages = cnn_stages(cfg);
  for (const auto& s : stages) {
    push(static_cast<std::size_t>(s.filters) * s.in_ch * s.kernel,
         static_cast<std::size_t>(s.filters));
  }
  const auto& last = stages.back();
  push(static_cast<std::size_t>(cfg.num_classes) * last.filters * last.pool_len,
       static_cast<std::size_t>(cfg.num_classes));
  return shapes;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const auto shapes = layer_shapes(cfg);
  const auto& last = shapes.back();
  return last.bias_begin + last.bias_count;
}

void validate(const TrainConfig& tc) {
  if (tc.initial_lr <= 0.0) {
    throw std::invalid_argument("train config: initial_lr must be > 0");
  }
  if (tc.plateau_factor <= 1.0) {
    throw std::invalid_argument("train config: plateau_factor must be > 1");
  }
  if (tc.plateau_patience < 1 || tc.max_epochs < 1 ||
      tc.early_stop_patience < 1 || tc.batch_size < 1) {
    throw std::invalid_argument(
        "train config: patience, epochs and batch_size must be >= 1");
  }
}

Classifier init_model(const ModelConfig& cfg, std::uint64_t seed) {
  const auto shapes = layer_shapes(cfg);
  Classifier model;
  model.config = cfg;
  model.params.assign(parameter_count(cfg), 0.0);
  rng::Engine engine(seed);

  auto fill = [&](const LayerShape& sh, std::size_t fan_in,
                  std::size_t fan_out) {
    const double a =
        std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < sh.weights_count; ++i) {
      model.params[sh.weights_begin + i] =
          a * (2.0 * rng::uniform01(engine) - 1.0);
    }
  };

  if (cfg.architecture == Architecture::kMlp) {
    std::size_t n_in = static_cast<std::size_t>(cfg.input_channels) *
                       static_cast<std::size_t>(cfg.input_width);
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      const std::size_t n_out = shapes[l].bias_count;
      fill(shapes[l], n_in, n_out);
      n_in = n_out;
    }
  } else {
    const auto stages = cnn_stages(cfg);
    for (std::size_t st = 0; st < stages.size(); ++st) {
      const auto& d = stages[st];
      fill(shapes[st], static_cast<std::size_t>(d.in_ch) * d.kernel,
           static_cast<std::size_t>(d.filters) * d.kernel);
    }
    const auto& last = stages.back();
    fill(shapes.back(), static_cast<std::size_t>(last.filters) * last.pool_len,
         static_cast<std::size_t>(cfg.num_classes));
  }
  return model;
}

std::vector<double> forward(const Classifier& model,
                            std::span<const double> x) {
  const auto shapes = layer_shapes(model.config);
  Scratch s;
  run_forward(model, x, shapes, s);
  std::vector<double> probs = s.logits;
  softmax_inplace(probs);
  return probs;
}

std::vector<double> forward(const Classifier& model, const Window& w) {
  return forward(model, std::span<const double>(w.x));
}

LossGrad loss_and_grad(const Classifier& model, const WindowedDataset& data,
                       std::span<const std::size_t> indices) {
  if (indices.empty()) {
    throw std::invalid_argument("loss_and_grad: empty batch");
  }
  const auto shapes = layer_shapes(model.config);
  LossGrad out;
  out.grad.assign(model.params.size(), 0.0);
  Scratch s;
  std::vector<double> dlogits;
  for (std::size_t idx : indices) {
    const Window& w = data.windows[idx];
    if (w.label < 0 || w.label >= model.config.num_classes) {
      throw std::invalid_argument("loss_and_grad: label " +
                                  std::to_string(w.label) +
                                  " outside [0, num_classes)");
    }
    run_forward(model, w.x, shapes, s);
    dlogits = s.logits;
    softmax_inplace(dlogits);
    const double p = std::max(dlogits[static_cast<std::size_t>(w.label)],
                              1e-300);
    out.loss += -std::log(p);
    dlogits[static_cast<std::size_t>(w.label)] -= 1.0;
    if (model.config.architecture == Architecture::kMlp) {
      mlp_backward(shapes, model.params, s, dlogits, out.grad);
    } else {
      cnn_backward(model.config, shapes, model.params, w.x, s, dlogits,
                   out.grad);
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  out.loss *= inv;
  for (double& g : out.grad) g *= inv;
  return out;
}

LossGrad loss_and_grad(const Classifier& model, const WindowedDataset& batch) {
  std::vector<std::size_t> indices(batch.windows.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  return loss_and_grad(model, batch, indices);
}

double mean_loss(const Classifier& model, const WindowedDataset& data) {
  if (data.windows.empty()) {
    throw std::invalid_argument("mean_loss: empty dataset");
  }
  const auto shapes = layer_shapes(model.config);
  Scratch s;
  double loss = 0.0;
  for (const auto& w : data.windows) {
    run_forward(model, w.x, shapes, s);
    std::vector<double> probs = s.logits;
    softmax_inplace(probs);
    loss += -std::log(std::max(probs[static_cast<std::size_t>(w.label)],
                               1e-300));
  }
  return loss / static_cast<double>(data.windows.size());
}

Classifier train(const Classifier& model, const WindowedDataset& train_set,
                 const WindowedDataset& val_set, const TrainConfig& tc) {
  validate(tc);
  if (train_set.windows.empty() || val_set.windows.empty()) {
    throw std::invalid_argument("train: empty train or validation set");
  }
  check_input(model.config, train_set.num_channels() *
                                static_cast<std::size_t>(train_set.width));
  check_input(model.config,
              val_set.num_channels() * static_cast<std::size_t>(val_set.width));

  Classifier current = model;
  current.history.clear();
  const std::size_t n_params = current.params.size();
  std::vector<double> m(n_params, 0.0), v(n_params, 0.0);
  double beta1_pow = 1.0, beta2_pow = 1.0;
  double lr = tc.initial_lr;

  rng::Engine engine(tc.seed);
  std::vector<std::size_t> order(train_set.windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = current.params;
  int plateau_count = 0;
  int early_count = 0;

  for (int epoch = 0; epoch < tc.max_epochs; ++epoch) {
    rng::shuffle(order, engine);
    double epoch_loss = 0.0;
    int batches = 0;
    const std::size_t bs = static_cast<std::size_t>(tc.batch_size);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t len = std::min(bs, order.size() - start);
      const auto lg = loss_and_grad(
          current, train_set,
          std::span<const std::size_t>(order).subspan(start, len));
      epoch_loss += lg.loss;
      ++batches;
      beta1_pow *= kAdamBeta1;
      beta2_pow *= kAdamBeta2;
      const double m_corr = 1.0 / (1.0 - beta1_pow);
      const double v_corr = 1.0 / (1.0 - beta2_pow);
      for (std::size_t i = 0; i < n_params; ++i) {
        m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * lg.grad[i];
        v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * lg.grad[i] * lg.grad[i];
        current.params[i] -=
            lr * (m[i] * m_corr) / (std::sqrt(v[i] * v_corr) + kAdamEps);
      }
    }
    const double val_loss = mean_loss(current, val_set);
    current.history.push_back(
        EpochStats{epoch_loss / batches, val_loss, lr});

    if (val_loss < best_val - kImprovementEps) {
      best_val = val_loss;
      best_params = current.params;
      plateau_count = 0;
      early_count = 0;
    } else {
      ++plateau_count;
      ++early_count;
      if (plateau_count >= tc.plateau_patience) {
        lr /= tc.plateau_factor;
        plateau_count = 0;
      }
      if (early_count >= tc.early_stop_patience) break;
    }
  }
  current.params = std::move(best_params);
  return current;
}

std::vector<int> predict_batch(const Classifier& model,
                               const WindowedDataset& wd) {
  const auto shapes = layer_shapes(model.config);
  Scratch s;
  std::vector<int> labels;
  labels.reserve(wd.windows.size());
  for (const auto& w : wd.windows) {
    run_forward(model, w.x, shapes, s);
    int best = 0;
    for (std::size_t c = 1; c < s.logits.size(); ++c) {
      if (s.logits[c] > s.logits[static_cast<std::size_t>(best)]) {
        best = static_cast<int>(c);
      }
    }
    labels.push_back(best);
  }
  return labels;
}

namespace {

nlohmann::json conv_to_json(const ConvLayerConfig& c) {
  return nlohmann::json{{"filters", c.filters},
                        {"kernel", c.kernel},
                        {"pool", c.pool}};
}

}  // namespace

void save_model(const Classifier& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "randhar-model";
  j["version"] = 1;
  nlohmann::json cfg;
  cfg["architecture"] =
      model.config.architecture == Architecture::kMlp ? "mlp" : "cnn1d";
  cfg["hidden"] = model.config.hidden_sizes;
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& c : model.config.conv_layers) conv.push_back(conv_to_json(c));
  cfg["conv"] = std::move(conv);
  cfg["input_channels"] = model.config.input_channels;
  cfg["input_width"] = model.config.input_width;
  cfg["num_classes"] = model.config.num_classes;
  j["config"] = std::move(cfg);
  j["parameters"] = model.params;
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write model file: " + path.string());
  }
  out << j.dump(2) << '\n';
}

Classifier load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open model file: " + path.string());
  }
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "randhar-model" || j.value("version", 0) != 1) {
    throw std::runtime_error("unsupported model file format: " + path.string());
  }
  const auto& cfg = j.at("config");
  Classifier model;
  const std::string arch = cfg.at("architecture").get<std::string>();
  if (arch == "mlp") {
    model.config.architecture = Architecture::kMlp;
  } else if (arch == "cnn1d") {
    model.config.architecture = Architecture::kCnn1d;
  } else {
    throw std::runtime_error("unknown architecture: " + arch);
  }
  model.config.hidden_sizes = cfg.at("hidden").get<std::vector<int>>();
  for (const auto& c : cfg.at("conv")) {
    model.config.conv_layers.push_back(ConvLayerConfig{
        c.at("filters").get<int>(), c.at("kernel").get<int>(),
        c.at("pool").get<int>()});
  }
  model.config.input_channels = cfg.at("input_channels").get<int>();
  model.config.input_width = cfg.at("input_width").get<int>();
  model.config.num_classes = cfg.at("num_classes").get<int>();
  model.params = j.at("parameters").get<std::vector<double>>();
  if (model.params.size() != parameter_count(model.config)) {
    throw std::runtime_error("model file parameter count mismatch: " +
                             path.string());
  }
  return model;
}

}  // namespace randhar
