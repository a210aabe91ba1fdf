#include "randhar/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "randhar/rng.hpp"

namespace randhar {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& text, const char* what, std::size_t row) {
  const std::string t = strip(text);
  int value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    fail("csv parse error at row " + std::to_string(row) + ": non-numeric " +
         what + " '" + text + "'");
  }
  return value;
}

double parse_double(const std::string& text, const std::string& column,
                    std::size_t row) {
  const std::string t = strip(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size()) {
    fail("csv parse error at row " + std::to_string(row) +
         ": non-numeric cell '" + text + "' in column '" + column + "'");
  }
  return value;
}

void format_double(std::string& out, double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

// Stratified-by-class holdout from `pool`: per class, a seeded shuffle picks
// round(val_fraction * class count) windows for validation. Outputs are
// sorted ascending so results do not depend on shuffle internals leaking out.
void stratified_holdout(const WindowedDataset& wd,
                        const std::vector<std::size_t>& pool,
                        double val_fraction, rng::Engine& engine,
                        std::vector<std::size_t>& train,
                        std::vector<std::size_t>& validation) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t idx : pool) by_class[wd.windows[idx].label].push_back(idx);
  train.clear();
  validation.clear();
  for (auto& [label, members] : by_class) {
    rng::shuffle(members, engine);
    auto take = static_cast<std::size_t>(
        std::llround(val_fraction * static_cast<double>(members.size())));
    take = std::min(take, members.size());
    validation.insert(validation.end(), members.begin(), members.begin() + take);
    train.insert(train.end(), members.begin() + take, members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
}

double waveform_value(const SyntheticChannel& ch, int effective_class,
                      int channel_index, int num_classes, int t,
                      int segment_len, double amp_scale, double phase_offset) {
  const int cycles = 1 + (effective_class + channel_index) % num_classes;
  const double base_phase =
      2.0 * M_PI *
      ((0.618033988749895 * (channel_index + 1) * (effective_class + 1)) -
       std::floor(0.618033988749895 * (channel_index + 1) *
                  (effective_class + 1)));
  const double arg = 2.0 * M_PI * cycles * t / segment_len + base_phase +
                     phase_offset;
  const double s = std::sin(arg);
  const double shape = ch.waveform == Waveform::kStep ? (s >= 0.0 ? 1.0 : -1.0)
                                                      : s;
  return ch.amplitude * amp_scale * shape;
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.num_subjects < 1) fail("synthetic spec: num_subjects must be >= 1");
  if (spec.num_classes < 1) fail("synthetic spec: num_classes must be >= 1");
  if (spec.segment_len < 1) fail("synthetic spec: segment_len must be >= 1");
  if (spec.segments_per_subject < 1) {
    fail("synthetic spec: segments_per_subject must be >= 1");
  }
  if (spec.noise_sigma < 0.0) fail("synthetic spec: noise_sigma must be >= 0");
  if (spec.channels.empty()) fail("synthetic spec: no channels");
  std::set<std::string> names;
  int informative = 0;
  for (const auto& ch : spec.channels) {
    if (ch.name.empty()) fail("synthetic spec: channel with empty name");
    if (!names.insert(ch.name).second) {
      fail("synthetic spec: duplicate channel name '" + ch.name + "'");
    }
    if (ch.role == ChannelRole::kInformative) ++informative;
    if (ch.role == ChannelRole::kConflicting) {
      if (ch.conflict_a < 0 || ch.conflict_a >= spec.num_classes ||
          ch.conflict_b < 0 || ch.conflict_b >= spec.num_classes ||
          ch.conflict_a == ch.conflict_b) {
        fail("synthetic spec: channel '" + ch.name +
             "' needs a conflict pair of two distinct classes");
      }
    }
  }
  if (informative == 0) {
    fail("synthetic spec: zero informative channels; at least one channel "
         "must carry class information");
  }
}

}  // namespace

void validate(const Dataset& d) {
  if (d.channels.empty()) fail("dataset: no channels");
  const std::size_t t = d.labels.size();
  if (t == 0) fail("empty dataset");
  if (d.subjects.size() != t) fail("dataset: subjects length mismatch");
  for (const auto& ch : d.channels) {
    if (ch.samples.size() != t) {
      fail("dataset: channel '" + ch.name + "' length mismatch");
    }
  }
  if (d.num_classes < 1) fail("dataset: num_classes must be >= 1");
  for (std::size_t i = 0; i < t; ++i) {
    if (d.labels[i] < 0 || d.labels[i] >= d.num_classes) {
      fail("dataset: label out of range at timestep " + std::to_string(i));
    }
    if (d.subjects[i] < 0) {
      fail("dataset: negative subject id at timestep " + std::to_string(i));
    }
  }
  if (d.sample_rate_hz <= 0.0) fail("dataset: sample_rate_hz must be > 0");
}

int SensorMask::popcount() const {
  int n = 0;
  for (auto b : bits) n += b ? 1 : 0;
  return n;
}

bool SensorMask::any() const { return popcount() > 0; }

SensorMask SensorMask::ones(std::size_t n) {
  return SensorMask{std::vector<std::uint8_t>(n, 1)};
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open csv file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) fail("csv format error: missing header row");
  auto header = split_fields(line);
  for (auto& h : header) h = strip(h);
  if (header.size() < 3 || header[0] != "subject" || header[1] != "label") {
    fail("csv format error: header must be 'subject,label,<channel names...>'");
  }

  Dataset d;
  d.channels.reserve(header.size() - 2);
  for (std::size_t c = 2; c < header.size(); ++c) {
    if (header[c].empty()) fail("csv format error: empty channel name");
    d.channels.push_back(Channel{header[c], {}});
  }

  std::size_t row = 0;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (strip(line).empty()) continue;
    ++row;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      fail("csv parse error at row " + std::to_string(row) + ": expected " +
           std::to_string(header.size()) + " fields, got " +
           std::to_string(fields.size()));
    }
    const int subject = parse_int(fields[0], "subject", row);
    if (subject < 0) {
      fail("csv parse error at row " + std::to_string(row) +
           ": negative subject id");
    }
    const int label = parse_int(fields[1], "label", row);
    if (label < 0) {
      fail("csv parse error at row " + std::to_string(row) +
           ": negative label");
    }
    max_label = std::max(max_label, label);
    d.subjects.push_back(subject);
    d.labels.push_back(label);
    for (std::size_t c = 2; c < fields.size(); ++c) {
      d.channels[c - 2].samples.push_back(
          parse_double(fields[c], header[c], row));
    }
  }
  if (row == 0) throw std::runtime_error("empty dataset: " + path.string());
  d.num_classes = max_label + 1;
  validate(d);
  return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  validate(d);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write csv file: " + path.string());
  std::string buf = "subject,label";
  for (const auto& ch : d.channels) {
    buf += ',';
    buf += ch.name;
  }
  buf += '\n';
  for (std::size_t i = 0; i < d.num_timesteps(); ++i) {
    buf += std::to_string(d.subjects[i]);
    buf += ',';
    buf += std::to_string(d.labels[i]);
    for (const auto& ch : d.channels) {
      buf += ',';
      format_double(buf, ch.samples[i]);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("csv write failed: " + path.string());
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  rng::Engine engine(seed);

  // Draw order is fixed: (1) per (subject, channel) jitters, (2) per-subject
  // segment label shuffles, (3) per-timestep noise in storage order.
  const int n_sub = spec.num_subjects;
  const int n_ch = static_cast<int>(spec.channels.size());
  std::vector<double> amp(n_sub * n_ch), phase(n_sub * n_ch);
  for (int s = 0; s < n_sub; ++s) {
    for (int c = 0; c < n_ch; ++c) {
      amp[s * n_ch + c] =
          1.0 + spec.amp_jitter * (2.0 * rng::uniform01(engine) - 1.0);
      phase[s * n_ch + c] =
          spec.phase_jitter * (2.0 * rng::uniform01(engine) - 1.0);
    }
  }

  std::vector<std::vector<int>> segment_classes(n_sub);
  for (int s = 0; s < n_sub; ++s) {
    auto& classes = segment_classes[s];
    classes.resize(spec.segments_per_subject);
    for (int i = 0; i < spec.segments_per_subject; ++i) {
      classes[i] = i % spec.num_classes;
    }
    rng::shuffle(classes, engine);
  }

  Dataset d;
  d.sample_rate_hz = spec.sample_rate_hz;
  d.num_classes = spec.num_classes;
  d.channels.reserve(spec.channels.size());
  for (const auto& ch : spec.channels) d.channels.push_back(Channel{ch.name, {}});

  const std::size_t total = static_cast<std::size_t>(n_sub) *
                            spec.segments_per_subject * spec.segment_len;
  d.labels.reserve(total);
  d.subjects.reserve(total);
  for (auto& ch : d.channels) ch.samples.reserve(total);

  for (int s = 0; s < n_sub; ++s) {
    for (int seg = 0; seg < spec.segments_per_subject; ++seg) {
      const int label = segment_classes[s][seg];
      for (int t = 0; t < spec.segment_len; ++t) {
        d.labels.push_back(label);
        d.subjects.push_back(s);
        for (int c = 0; c < n_ch; ++c) {
          const auto& ch = spec.channels[c];
          double value = 0.0;
          if (ch.role != ChannelRole::kNoise) {
            int effective = label;
            if (ch.role == ChannelRole::kConflicting &&
                label == ch.conflict_b) {
              effective = ch.conflict_a;
            }
            value = waveform_value(ch, effective, c, spec.num_classes, t,
                                   spec.segment_len, amp[s * n_ch + c],
                                   phase[s * n_ch + c]);
          }
          if (spec.noise_sigma > 0.0) {
            value += spec.noise_sigma * rng::gaussian(engine);
          }
          d.channels[c].samples.push_back(value);
        }
      }
    }
  }
  return d;
}

WindowedDataset slide_windows(const Dataset& d, int window, int stride) {
  validate(d);
  const std::size_t t = d.num_timesteps();
  if (window < 1 || static_cast<std::size_t>(window) > t) {
    fail("slide_windows: window must be in [1, T]");
  }
  if (stride < 1) fail("slide_windows: stride must be >= 1");

  // Contiguous same-subject runs; a subject change ends the current run.
  struct Run {
    std::size_t begin, length;
    int subject;
  };
  std::vector<Run> runs;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= t; ++i) {
    if (i == t || d.subjects[i] != d.subjects[i - 1]) {
      runs.push_back(Run{begin, i - begin, d.subjects[begin]});
      begin = i;
    }
  }
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.length);
  if (static_cast<std::size_t>(window) > longest) {
    throw std::invalid_argument(
        "window longer than data: window " + std::to_string(window) +
        " exceeds the longest per-subject run (" + std::to_string(longest) +
        ")");
  }

  WindowedDataset wd;
  wd.num_classes = d.num_classes;
  wd.width = window;
  wd.channel_names.reserve(d.channels.size());
  for (const auto& ch : d.channels) wd.channel_names.push_back(ch.name);

  const std::size_t n_ch = d.num_channels();
  struct Keyed {
    int subject;
    std::size_t start;
    std::size_t run;
  };
  std::vector<Keyed> keys;
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    const auto& r = runs[ri];
    if (r.length < static_cast<std::size_t>(window)) continue;
    for (std::size_t s = 0; s + window <= r.length;
         s += static_cast<std::size_t>(stride)) {
      keys.push_back(Keyed{r.subject, r.begin + s, ri});
    }
  }
  std::stable_sort(keys.begin(), keys.end(), [](const Keyed& a, const Keyed& b) {
    return a.subject != b.subject ? a.subject < b.subject : a.start < b.start;
  });

  wd.windows.reserve(keys.size());
  std::vector<int> counts(d.num_classes);
  for (const auto& key : keys) {
    Window w;
    w.subject = key.subject;
    w.x.resize(n_ch * static_cast<std::size_t>(window));
    for (std::size_t c = 0; c < n_ch; ++c) {
      const auto& samples = d.channels[c].samples;
      std::copy(samples.begin() + static_cast<std::ptrdiff_t>(key.start),
                samples.begin() + static_cast<std::ptrdiff_t>(key.start + window),
                w.x.begin() + static_cast<std::ptrdiff_t>(c * window));
    }
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < window; ++i) ++counts[d.labels[key.start + i]];
    int best = 0;
    bool unique = true;
    for (int c = 1; c < d.num_classes; ++c) {
      if (counts[c] > counts[best]) {
        best = c;
        unique = true;
      } else if (counts[c] == counts[best]) {
        unique = false;
      }
    }
    w.label = unique ? best : d.labels[key.start + window - 1];
    wd.windows.push_back(std::move(w));
  }
  return wd;
}

WindowedDataset apply_mask(const WindowedDataset& wd, const SensorMask& mask) {
  if (mask.size() != wd.num_channels()) {
    fail("apply_mask: mask length " + std::to_string(mask.size()) +
         " does not match channel count " + std::to_string(wd.num_channels()));
  }
  if (!mask.any()) throw std::invalid_argument("empty sensor subset");

  WindowedDataset out;
  out.num_classes = wd.num_classes;
  out.width = wd.width;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < mask.size(); ++c) {
    if (mask.bits[c]) {
      keep.push_back(c);
      out.channel_names.push_back(wd.channel_names[c]);
    }
  }
  const std::size_t width = static_cast<std::size_t>(wd.width);
  out.windows.reserve(wd.windows.size());
  for (const auto& w : wd.windows) {
    Window m;
    m.label = w.label;
    m.subject = w.subject;
    m.x.resize(keep.size() * width);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      std::copy(w.x.begin() + static_cast<std::ptrdiff_t>(keep[i] * width),
                w.x.begin() + static_cast<std::ptrdiff_t>((keep[i] + 1) * width),
                m.x.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
    out.windows.push_back(std::move(m));
  }
  return out;
}

WindowedDataset select_windows(const WindowedDataset& wd,
                               std::span<const std::size_t> indices) {
  WindowedDataset out;
  out.channel_names = wd.channel_names;
  out.num_classes = wd.num_classes;
  out.width = wd.width;
  out.windows.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= wd.windows.size()) fail("select_windows: index out of range");
    out.windows.push_back(wd.windows[idx]);
  }
  return out;
}

SplitPlan loso_splits(const WindowedDataset& wd, double val_fraction,
                      std::uint64_t seed) {
  if (wd.windows.empty()) fail("loso_splits: empty dataset");
  if (val_fraction <= 0.0 || val_fraction >= 1.0) {
    fail("loso_splits: val_fraction must be in (0, 1)");
  }
  std::set<int> subject_set;
  for (const auto& w : wd.windows) subject_set.insert(w.subject);
  if (subject_set.size() < 2) {
    fail("loso_splits: single subject; use kfold_splits instead");
  }

  SplitPlan plan;
  rng::Engine engine(seed);
  for (int subject : subject_set) {
    Fold fold;
    fold.test_subject = subject;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < wd.windows.size(); ++i) {
      if (wd.windows[i].subject == subject) {
        fold.test.push_back(i);
      } else {
        pool.push_back(i);
      }
    }
    stratified_holdout(wd, pool, val_fraction, engine, fold.train,
                       fold.validation);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

SplitPlan kfold_splits(const WindowedDataset& wd, int k, double val_fraction,
                       std::uint64_t seed) {
  const std::size_t n = wd.windows.size();
  if (k < 2) fail("kfold_splits: k must be >= 2");
  if (static_cast<std::size_t>(k) > n) {
    fail("kfold_splits: k exceeds window count");
  }
  if (val_fraction <= 0.0 || val_fraction >= 1.0) {
    fail("kfold_splits: val_fraction must be in (0, 1)");
  }

  SplitPlan plan;
  rng::Engine engine(seed);
  for (int f = 0; f < k; ++f) {
    const std::size_t lo = n * static_cast<std::size_t>(f) / k;
    const std::size_t hi = n * (static_cast<std::size_t>(f) + 1) / k;
    Fold fold;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < n; ++i) {
      if (i >= lo && i < hi) {
        fold.test.push_back(i);
      } else {
        pool.push_back(i);
      }
    }
    stratified_holdout(wd, pool, val_fraction, engine, fold.train,
                       fold.validation);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

ChannelStats fit_normalizer(const WindowedDataset& wd,
                            std::span<const std::size_t> indices) {
  if (indices.empty()) fail("fit_normalizer: empty index set");
  const std::size_t n_ch = wd.num_channels();
  const std::size_t width = static_cast<std::size_t>(wd.width);
  ChannelStats stats;
  stats.mean.assign(n_ch, 0.0);
  stats.stddev.assign(n_ch, 0.0);
  const double count = static_cast<double>(indices.size() * width);
  for (std::size_t c = 0; c < n_ch; ++c) {
    double sum = 0.0;
    for (std::size_t idx : indices) {
      const auto& x = wd.windows[idx].x;
      for (std::size_t t = 0; t < width; ++t) sum += x[c * width + t];
    }
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t idx : indices) {
      const auto& x = wd.windows[idx].x;
      for (std::size_t t = 0; t < width; ++t) {
        const double dv = x[c * width + t] - mean;
        ss += dv * dv;
      }
    }
    stats.mean[c] = mean;
    const double sd = std::sqrt(ss / count);
    stats.stddev[c] = sd > 1e-12 ? sd : 1.0;
  }
  return stats;
}

WindowedDataset apply_normalizer(const WindowedDataset& wd,
                                 const ChannelStats& stats) {
  if (stats.mean.size() != wd.num_channels()) {
    fail("apply_normalizer: stats channel count mismatch");
  }
  WindowedDataset out = wd;
  const std::size_t width = static_cast<std::size_t>(wd.width);
  for (auto& w : out.windows) {
    for (std::size_t c = 0; c < stats.mean.size(); ++c) {
      for (std::size_t t = 0; t < width; ++t) {
        w.x[c * width + t] = (w.x[c * width + t] - stats.mean[c]) /
                             stats.stddev[c];
      }
    }
  }
  return out;
}

}  // namespace randhar
