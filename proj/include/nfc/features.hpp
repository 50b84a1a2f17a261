#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "signal.hpp"

namespace nfc {

inline constexpr std::size_t kNumFeatures = 12;

inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "mean",     "std",      "variance",     "rms",          "peak",           "peak_to_peak",
    "skewness", "kurtosis", "crest_factor", "shape_factor", "impulse_factor", "clearance_factor"};

struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double operator[](std::size_t i) const { return values[i]; }
  static constexpr const auto& names() { return kFeatureNames; }
};

inline constexpr double kRatioFloor = 1e-12;

namespace detail {
inline double guarded(double denominator) { return denominator < kRatioFloor ? kRatioFloor : denominator; }
}  // namespace detail

/// Classical time-domain statistics of one window. Moments are population
/// moments; kurtosis is Pearson (non-excess), so Gaussian noise gives 3.
inline FeatureVector extract_features(std::span<const double> x) {
  if (x.size() < 2) throw ParameterError("feature extraction needs at least 2 samples");
  const double n = static_cast<double>(x.size());

  double sum = 0.0, sum_abs = 0.0, sum_sqrt_abs = 0.0, sum_sq = 0.0;
  double peak = 0.0, lo = x[0], hi = x[0];
  for (double v : x) {
    const double a = std::abs(v);
    sum += v;
    sum_abs += a;
    sum_sqrt_abs += std::sqrt(a);
    sum_sq += v * v;
    peak = std::max(peak, a);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mean = sum / n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  const double sd = std::sqrt(m2);
  const double rms = std::sqrt(sum_sq / n);
  const double mean_abs = sum_abs / n;
  const double mean_sqrt_abs = sum_sqrt_abs / n;

  using detail::guarded;
  FeatureVector f;
  f.values = {mean,
              sd,
              m2,
              rms,
              peak,
              hi - lo,
              m3 / guarded(sd * sd * sd),
              m4 / guarded(m2 * m2),
              peak / guarded(rms),
              rms / guarded(mean_abs),
              peak / guarded(mean_abs),
              peak / guarded(mean_sqrt_abs * mean_sqrt_abs)};
  return f;
}

inline FeatureVector extract_features(const SignalSegment& seg) { return extract_features(seg.values); }

/// n×12 feature matrix, one row per segment in input order.
inline Matrix feature_matrix(const std::vector<SignalSegment>& segments) {
  Matrix m(segments.size(), kNumFeatures);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto f = extract_features(segments[i]);
    std::copy(f.values.begin(), f.values.end(), m.row(i).begin());
  }
  return m;
}

/// Per-column standardizers fitted on `train` (reuses the signal pooling rule).
inline std::vector<Standardizer> fit_feature_standardizers(const Matrix& train) {
  std::vector<Standardizer> out;
  std::vector<double> column(train.rows());
  for (std::size_t c = 0; c < train.cols(); ++c) {
    for (std::size_t r = 0; r < train.rows(); ++r) column[r] = train(r, c);
    out.push_back(fit_standardizer(std::span<const double>(column)));
  }
  return out;
}

inline Matrix apply_feature_standardizers(const std::vector<Standardizer>& s, Matrix m) {
  if (s.size() != m.cols()) throw ShapeError("standardizer count does not match feature width");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = s[c].apply(m(r, c));
  }
  return m;
}

/// CSV with the 12 feature columns followed by `label` (class name).
inline void write_feature_csv(std::ostream& out, const Matrix& features, std::span<const ClassLabel> labels) {
  if (features.cols() != kNumFeatures || features.rows() != labels.size()) {
    throw ShapeError("feature matrix must be n x 12 with n labels");
  }
  for (auto name : kFeatureNames) out << name << ',';
  out << "label\n";
  const auto old = out.precision(17);
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (double v : features.row(r)) out << v << ',';
    out << label_name(labels[r]) << '\n';
  }
  out.precision(old);
}

}  // namespace nfc
