#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace nfc {

enum class ClassLabel : int { Normal = 0, Inner = 1, Outer = 2, Ball = 3 };

inline constexpr std::size_t kNumClasses = 4;
inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::Normal, ClassLabel::Inner, ClassLabel::Outer, ClassLabel::Ball};

inline constexpr int label_index(ClassLabel c) { return static_cast<int>(c); }

inline ClassLabel label_from_index(int i) {
  if (i < 0 || i >= static_cast<int>(kNumClasses)) {
    throw DataError("class index " + std::to_string(i) + " out of range [0, 4)");
  }
  return static_cast<ClassLabel>(i);
}

inline std::string_view label_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::Normal: return "normal";
    case ClassLabel::Inner: return "inner";
    case ClassLabel::Outer: return "outer";
    case ClassLabel::Ball: return "ball";
  }
  return "?";
}

/// Case-insensitive inverse of label_name.
inline ClassLabel parse_label(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (ClassLabel c : kAllLabels) {
    if (lower == label_name(c)) return c;
  }
  throw DataError("unknown class label '" + std::string(text) + "'");
}

struct RawRecording {
  std::vector<double> samples;
  double sample_rate = 0.0;
  ClassLabel label = ClassLabel::Normal;

  void validate() const {
    if (samples.empty()) throw DataError("recording has no samples");
    if (!(sample_rate > 0.0)) throw DataError("recording sample rate must be positive");
  }
};

/// One fixed-length window. `source` and `offset` identify the slice it was
/// cut from; two segments are the same segment iff both match.
struct SignalSegment {
  std::vector<double> values;
  ClassLabel label = ClassLabel::Normal;
  std::size_t source = 0;
  std::size_t offset = 0;

  bool operator==(const SignalSegment&) const = default;
};

inline constexpr std::size_t kDefaultWindow = 1024;
inline constexpr double kDefaultOverlap = 0.5;
inline constexpr double kDefaultTestFraction = 0.2;

/// Round-half-up that treats products landing a few ulps below .5 as exact
/// halves, e.g. 45 * (1 - 0.9) = 4.499999999999999.
inline std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9 * std::max(1.0, std::abs(x))));
}

/// Stride between window starts: round-half-up of window_len * (1 - overlap).
inline std::size_t window_stride(std::size_t window_len, double overlap_fraction) {
  if (window_len < 1) throw ParameterError("window length must be at least 1");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    throw ParameterError("overlap fraction must lie in [0, 1), got " + std::to_string(overlap_fraction));
  }
  const double raw = static_cast<double>(window_len) * (1.0 - overlap_fraction);
  const std::size_t stride = round_half_up(raw);
  if (stride < 1) throw ParameterError("overlap fraction leaves a zero stride");
  return stride;
}

inline std::vector<SignalSegment> window_signal(const RawRecording& recording, std::size_t window_len,
                                                double overlap_fraction, std::size_t source = 0) {
  const std::size_t stride = window_stride(window_len, overlap_fraction);
  std::vector<SignalSegment> out;
  const std::size_t n = recording.samples.size();
  if (n < window_len) return out;
  out.reserve((n - window_len) / stride + 1);
  for (std::size_t start = 0; start + window_len <= n; start += stride) {
    SignalSegment seg;
    seg.values.assign(recording.samples.begin() + static_cast<std::ptrdiff_t>(start),
                      recording.samples.begin() + static_cast<std::ptrdiff_t>(start + window_len));
    seg.label = recording.label;
    seg.source = source;
    seg.offset = start;
    out.push_back(std::move(seg));
  }
  return out;
}

struct Standardizer {
  double mean = 0.0;
  double std = 1.0;

  double apply(double v) const { return (v - mean) / std; }
};

inline constexpr double kMinStd = 1e-12;

inline Standardizer fit_standardizer(std::span<const double> pooled) {
  if (pooled.empty()) throw ParameterError("cannot fit a standardizer to an empty set");
  double sum = 0.0;
  for (double v : pooled) sum += v;
  const double mean = sum / static_cast<double>(pooled.size());
  double sq = 0.0;
  for (double v : pooled) sq += (v - mean) * (v - mean);
  double sd = std::sqrt(sq / static_cast<double>(pooled.size()));
  if (!(sd >= kMinStd)) sd = 1.0;
  return {mean, sd};
}

/// Pooled statistics over every value of every training segment.
inline Standardizer fit_standardizer(std::span<const SignalSegment> train) {
  std::vector<double> pooled;
  std::size_t total = 0;
  for (const auto& s : train) total += s.values.size();
  pooled.reserve(total);
  for (const auto& s : train) pooled.insert(pooled.end(), s.values.begin(), s.values.end());
  if (pooled.empty()) throw ParameterError("cannot fit a standardizer to an empty training set");
  return fit_standardizer(std::span<const double>(pooled));
}

inline SignalSegment apply_standardizer(const Standardizer& s, SignalSegment seg) {
  for (double& v : seg.values) v = s.apply(v);
  return seg;
}

inline std::vector<SignalSegment> apply_standardizer(const Standardizer& s,
                                                     std::vector<SignalSegment> segments) {
  for (auto& seg : segments) seg = apply_standardizer(s, std::move(seg));
  return segments;
}

struct SplitDataset {
  std::vector<SignalSegment> train;
  std::vector<SignalSegment> test;
  std::uint64_t seed = 0;
};

/// Number of class members routed to the test side (round-half-up).
inline std::size_t stratified_test_count(std::size_t class_size, double test_fraction) {
  return round_half_up(static_cast<double>(class_size) * test_fraction);
}

/// Per class, a seeded shuffle picks round(n_c * test_fraction) test members.
/// Both sides keep the input order of the segments they receive.
inline SplitDataset stratified_split(const std::vector<SignalSegment>& segments, double test_fraction,
                                     std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test fraction must lie in [0, 1)");
  }
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    by_class[static_cast<std::size_t>(label_index(segments[i].label))].push_back(i);
  }
  for (ClassLabel c : kAllLabels) {
    if (by_class[static_cast<std::size_t>(label_index(c))].empty()) {
      throw DataError("class '" + std::string(label_name(c)) + "' has no segments");
    }
  }

  Rng rng = make_rng(seed, streams::kSplit);
  std::vector<bool> to_test(segments.size(), false);
  for (auto& members : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_test = stratified_test_count(members.size(), test_fraction);
    for (std::size_t k = 0; k < n_test; ++k) to_test[members[k]] = true;
  }

  SplitDataset out;
  out.seed = seed;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    (to_test[i] ? out.test : out.train).push_back(segments[i]);
  }
  return out;
}

/// Parameters of the synthetic bearing-vibration generator. Fault classes
/// are a periodic train of decaying resonance bursts on top of white noise.
struct SynthConfig {
  double sample_rate = 12000.0;
  double duration = 5.4;
  double noise_sigma = 0.15;
  double inner_freq = 162.0;
  double outer_freq = 107.0;
  double ball_freq = 141.0;
  double resonance_freq = 2800.0;
  double decay_rate = 700.0;
  double impulse_amplitude = 1.0;
  std::uint64_t seed = 0;

  double fault_freq(ClassLabel c) const {
    switch (c) {
      case ClassLabel::Inner: return inner_freq;
      case ClassLabel::Outer: return outer_freq;
      case ClassLabel::Ball: return ball_freq;
      case ClassLabel::Normal: break;
    }
    return 0.0;
  }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(name) + " must be positive");
    };
    positive(sample_rate, "sample_rate");
    positive(duration, "duration");
    positive(inner_freq, "inner_freq");
    positive(outer_freq, "outer_freq");
    positive(ball_freq, "ball_freq");
    positive(resonance_freq, "resonance_freq");
    positive(decay_rate, "decay_rate");
    positive(impulse_amplitude, "impulse_amplitude");
    if (!(noise_sigma >= 0.0)) throw ParameterError("noise_sigma must be non-negative");
  }
};

inline constexpr double kBallModulationDepth = 0.5;

inline RawRecording generate_synthetic(const SynthConfig& cfg, ClassLabel label) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(std::llround(cfg.sample_rate * cfg.duration));
  if (n == 0) throw ParameterError("synthetic recording would be empty");

  Rng rng(substream_seed(cfg.seed, label_name(label)));
  std::normal_distribution<double> noise(0.0, 1.0);

  RawRecording rec;
  rec.sample_rate = cfg.sample_rate;
  rec.label = label;
  rec.samples.resize(n);
  for (double& v : rec.samples) v = cfg.noise_sigma * noise(rng);
  if (label == ClassLabel::Normal) return rec;

  const double f = cfg.fault_freq(label);
  const double period = 1.0 / f;
  const double two_pi = 2.0 * std::numbers::pi;
  // Random phase of the first impulse so repeated recordings are not aligned.
  std::uniform_real_distribution<double> phase(0.0, period);
  const double t0 = phase(rng);
  // Ring-down is truncated once the envelope falls below 1e-6 of the peak.
  const double ring = std::log(1e6) / cfg.decay_rate;
  const double dt = 1.0 / cfg.sample_rate;

  for (std::size_t k = 0;; ++k) {
    const double tn = t0 + static_cast<double>(k) * period;
    if (tn >= cfg.duration) break;
    const auto first = static_cast<std::size_t>(std::ceil(tn * cfg.sample_rate));
    for (std::size_t i = first; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      const double tau = t - tn;
      if (tau > ring) break;
      double burst = cfg.impulse_amplitude * std::exp(-cfg.decay_rate * tau) *
                     std::sin(two_pi * cfg.resonance_freq * tau);
      if (label == ClassLabel::Ball) {
        burst *= 1.0 + kBallModulationDepth * std::cos(two_pi * (f / 2.0) * t);
      }
      rec.samples[i] += burst;
    }
  }
  return rec;
}

}  // namespace nfc
