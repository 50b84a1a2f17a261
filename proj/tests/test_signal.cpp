#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "nfc/signal.hpp"

using namespace nfc;

namespace {

RawRecording ramp(std::size_t n, ClassLabel label = ClassLabel::Inner) {
  RawRecording r;
  r.samples.resize(n);
  std::iota(r.samples.begin(), r.samples.end(), 0.0);
  r.sample_rate = 12000.0;
  r.label = label;
  return r;
}

std::vector<SignalSegment> balanced_segments(std::size_t per_class) {
  std::vector<SignalSegment> out;
  std::size_t id = 0;
  for (ClassLabel c : kAllLabels) {
    for (std::size_t i = 0; i < per_class; ++i) {
      out.push_back({{static_cast<double>(id)}, c, id, 0});
      ++id;
    }
  }
  return out;
}

// Brute-force oracle: every start position s with s % stride == 0 and s + W <= N.
std::vector<std::size_t> enumerate_offsets(std::size_t n, std::size_t w, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (s % stride == 0 && s + w <= n) out.push_back(s);
  }
  return out;
}

double sample_kurtosis(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0, m4 = 0;
  for (double v : x) {
    m2 += (v - mean) * (v - mean);
    m4 += std::pow(v - mean, 4);
  }
  m2 /= n;
  m4 /= n;
  return m4 / (m2 * m2);
}

// Counts bursts: a new peak starts when |x| crosses the threshold more than
// `gap` samples after the previous above-threshold sample.
std::size_t count_peaks(const std::vector<double>& x, double threshold, std::size_t gap) {
  std::size_t count = 0;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i]) > threshold) {
      if (!last || i - *last > gap) ++count;
      last = i;
    }
  }
  return count;
}

}  // namespace

TEST(WindowSignal, DefaultWindowHalfOverlap) {
  const auto segs = window_signal(ramp(2048), 1024, 0.5);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].offset, 0u);
  EXPECT_EQ(segs[1].offset, 512u);
  EXPECT_EQ(segs[2].offset, 1024u);
  for (const auto& s : segs) {
    EXPECT_EQ(s.values.size(), 1024u);
    EXPECT_EQ(s.label, ClassLabel::Inner);
    EXPECT_EQ(s.values.front(), static_cast<double>(s.offset));
  }
}

TEST(WindowSignal, ExactLengthGivesOneWindow) {
  for (double overlap : {0.0, 0.25, 0.5, 0.9}) {
    const auto rec = ramp(1024);
    const auto segs = window_signal(rec, 1024, overlap);
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_EQ(segs[0].values, rec.samples);
  }
}

TEST(WindowSignal, UndersizedInputIsEmpty) { EXPECT_TRUE(window_signal(ramp(1023), 1024, 0.5).empty()); }

TEST(WindowSignal, RejectsBadParameters) {
  EXPECT_THROW(window_signal(ramp(10), 4, 1.0), ParameterError);
  EXPECT_THROW(window_signal(ramp(10), 4, -0.1), ParameterError);
  EXPECT_THROW(window_signal(ramp(10), 0, 0.5), ParameterError);
  // 1 * (1 - 0.6) rounds to 0.
  EXPECT_THROW(window_signal(ramp(10), 1, 0.6), ParameterError);
}

TEST(WindowSignal, StrideRoundsHalfUp) {
  EXPECT_EQ(window_stride(1024, 0.5), 512u);
  EXPECT_EQ(window_stride(5, 0.5), 3u);  // 2.5 -> 3
  EXPECT_EQ(window_stride(3, 0.5), 2u);  // 1.5 -> 2
  EXPECT_EQ(window_stride(10, 0.0), 10u);
}

TEST(WindowSignal, CountAndSlicesMatchBruteForce) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t w = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 400)(rng);
    const double overlap = std::uniform_real_distribution<double>(0.0, 0.95)(rng);
    std::size_t stride = 0;
    try {
      stride = window_stride(w, overlap);
    } catch (const ParameterError&) {
      continue;
    }
    const auto rec = ramp(std::max<std::size_t>(n, 1));
    const auto segs = window_signal(rec, w, overlap);
    const auto expected = enumerate_offsets(rec.samples.size(), w, stride);
    ASSERT_EQ(segs.size(), expected.size());
    if (rec.samples.size() >= w) ASSERT_EQ(segs.size(), (rec.samples.size() - w) / stride + 1);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      ASSERT_EQ(segs[i].offset, expected[i]);
      ASSERT_TRUE(std::equal(segs[i].values.begin(), segs[i].values.end(), rec.samples.begin() + expected[i]));
    }
  }
}

TEST(Standardizer, PooledMeanAndStd) {
  std::vector<SignalSegment> train{{{0.0}, ClassLabel::Normal, 0, 0}, {{2.0}, ClassLabel::Inner, 1, 0}};
  const auto s = fit_standardizer(std::span<const SignalSegment>(train));
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
  EXPECT_DOUBLE_EQ(s.std, 1.0);
  const auto out = apply_standardizer(s, SignalSegment{{0.0, 2.0, 1.0}, ClassLabel::Ball, 0, 0});
  EXPECT_EQ(out.values, (std::vector<double>{-1.0, 1.0, 0.0}));
  EXPECT_EQ(out.label, ClassLabel::Ball);
}

TEST(Standardizer, ConstantInputUsesUnitStd) {
  std::vector<SignalSegment> train{{{3.5, 3.5, 3.5}, ClassLabel::Normal, 0, 0}, {{3.5}, ClassLabel::Outer, 1, 0}};
  const auto s = fit_standardizer(std::span<const SignalSegment>(train));
  EXPECT_DOUBLE_EQ(s.mean, 3.5);
  EXPECT_DOUBLE_EQ(s.std, 1.0);
  for (double v : apply_standardizer(s, train[0]).values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Standardizer, IdentityParametersAndEmptyInput) {
  const Standardizer id{0.0, 1.0};
  const SignalSegment seg{{1.5, -2.0}, ClassLabel::Inner, 0, 0};
  EXPECT_EQ(apply_standardizer(id, seg).values, seg.values);
  EXPECT_THROW(fit_standardizer(std::span<const SignalSegment>()), ParameterError);
}

TEST(Standardizer, FitThenApplyGivesZeroMeanUnitStd) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(4.0, 7.0);
  std::vector<SignalSegment> train(20);
  for (auto& s : train) {
    s.values.resize(64);
    for (double& v : s.values) v = n(rng);
  }
  const auto s = fit_standardizer(std::span<const SignalSegment>(train));
  const auto out = apply_standardizer(s, train);
  // Recompute statistics independently.
  double sum = 0, count = 0;
  for (const auto& seg : out)
    for (double v : seg.values) sum += v, ++count;
  const double mean = sum / count;
  double sq = 0;
  for (const auto& seg : out)
    for (double v : seg.values) sq += (v - mean) * (v - mean);
  EXPECT_LT(std::abs(mean), 1e-9);
  EXPECT_LT(std::abs(std::sqrt(sq / count) - 1.0), 1e-9);

  // Refitting on already-standardized data is the identity.
  const auto again = fit_standardizer(std::span<const SignalSegment>(out));
  EXPECT_NEAR(again.mean, 0.0, 1e-12);
  EXPECT_NEAR(again.std, 1.0, 1e-12);
}

TEST(StratifiedSplit, PerClassCounts) {
  const auto segs = balanced_segments(25);
  const auto split = stratified_split(segs, 0.2, 42);
  EXPECT_EQ(split.test.size(), 20u);
  EXPECT_EQ(split.train.size(), 80u);
  for (ClassLabel c : kAllLabels) {
    EXPECT_EQ(std::count_if(split.test.begin(), split.test.end(), [&](auto& s) { return s.label == c; }), 5);
  }
}

TEST(StratifiedSplit, ZeroFractionKeepsEverythingInTrain) {
  const auto split = stratified_split(balanced_segments(25), 0.0, 1);
  EXPECT_TRUE(split.test.empty());
  EXPECT_EQ(split.train.size(), 100u);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  const auto segs = balanced_segments(25);
  const auto a = stratified_split(segs, 0.2, 42);
  const auto b = stratified_split(segs, 0.2, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = stratified_split(segs, 0.2, 43);
  EXPECT_NE(a.test, c.test);
}

TEST(StratifiedSplit, MissingClassIsDataError) {
  auto segs = balanced_segments(5);
  segs.erase(std::remove_if(segs.begin(), segs.end(), [](auto& s) { return s.label == ClassLabel::Ball; }),
             segs.end());
  EXPECT_THROW(stratified_split(segs, 0.2, 0), DataError);
  EXPECT_THROW(stratified_split(balanced_segments(5), 1.0, 0), ParameterError);
}

TEST(StratifiedSplit, PartitionPropertyOverRandomSizes) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SignalSegment> segs;
    std::size_t id = 0;
    std::array<std::size_t, kNumClasses> sizes{};
    for (ClassLabel c : kAllLabels) {
      const auto n = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
      sizes[static_cast<std::size_t>(label_index(c))] = n;
      for (std::size_t i = 0; i < n; ++i, ++id) segs.push_back({{0.0}, c, id, 0});
    }
    const double frac = std::uniform_real_distribution<double>(0.0, 0.9)(rng);
    const auto split = stratified_split(segs, frac, trial);
    std::set<std::size_t> seen;
    for (const auto* side : {&split.train, &split.test})
      for (const auto& s : *side) ASSERT_TRUE(seen.insert(s.source).second);
    ASSERT_EQ(seen.size(), segs.size());
    for (ClassLabel c : kAllLabels) {
      const auto n = sizes[static_cast<std::size_t>(label_index(c))];
      const auto in_test = static_cast<std::size_t>(
          std::count_if(split.test.begin(), split.test.end(), [&](auto& s) { return s.label == c; }));
      ASSERT_EQ(in_test, static_cast<std::size_t>(std::floor(n * frac + 0.5)));
      ASSERT_LE(std::abs(static_cast<double>(in_test) - n * frac), 1.0);
    }
  }
}

TEST(Labels, ParseIsCaseInsensitive) {
  EXPECT_EQ(parse_label("inner"), ClassLabel::Inner);
  EXPECT_EQ(parse_label("INNER"), ClassLabel::Inner);
  EXPECT_EQ(parse_label("Ball"), ClassLabel::Ball);
  EXPECT_THROW(parse_label("cage"), DataError);
  for (ClassLabel c : kAllLabels) EXPECT_EQ(label_from_index(label_index(c)), c);
  EXPECT_EQ(label_index(ClassLabel::Normal), 0);
  EXPECT_EQ(label_index(ClassLabel::Ball), 3);
}

TEST(Synthetic, NormalIsGaussian) {
  SynthConfig cfg;
  cfg.duration = 2.0;
  cfg.seed = 9;
  const auto rec = generate_synthetic(cfg, ClassLabel::Normal);
  EXPECT_EQ(rec.samples.size(), 24000u);
  const double k = sample_kurtosis(rec.samples);
  EXPECT_GE(k, 2.5);
  EXPECT_LE(k, 3.5);
}

TEST(Synthetic, InnerImpulseCountMatchesFaultFrequency) {
  SynthConfig cfg;
  cfg.duration = 1.0;
  cfg.inner_freq = 160.0;
  cfg.seed = 4;
  const auto rec = generate_synthetic(cfg, ClassLabel::Inner);
  const std::size_t period = static_cast<std::size_t>(cfg.sample_rate / 160.0);
  const auto peaks = count_peaks(rec.samples, 4.0 * cfg.noise_sigma, period / 2);
  EXPECT_NEAR(static_cast<double>(peaks), 160.0, 2.0);
}

TEST(Synthetic, FaultClassesHaveHeavierTails) {
  SynthConfig cfg;
  cfg.seed = 1;
  cfg.duration = 1.0;
  for (ClassLabel c : {ClassLabel::Inner, ClassLabel::Outer, ClassLabel::Ball}) {
    EXPECT_GT(sample_kurtosis(generate_synthetic(cfg, c).samples), 3.5) << label_name(c);
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.duration = 0.5;
  cfg.seed = 77;
  for (ClassLabel c : kAllLabels) {
    EXPECT_EQ(generate_synthetic(cfg, c).samples, generate_synthetic(cfg, c).samples);
  }
  auto other = cfg;
  other.seed = 78;
  EXPECT_NE(generate_synthetic(cfg, ClassLabel::Outer).samples, generate_synthetic(other, ClassLabel::Outer).samples);
}

TEST(Synthetic, RejectsInvalidConfig) {
  SynthConfig cfg;
  cfg.noise_sigma = -1.0;
  EXPECT_THROW(generate_synthetic(cfg, ClassLabel::Normal), ParameterError);
  cfg = {};
  cfg.resonance_freq = 0.0;
  EXPECT_THROW(generate_synthetic(cfg, ClassLabel::Inner), ParameterError);
}

TEST(Rounding, ExactHalvesRoundUpDespiteFloatingError) {
  EXPECT_EQ(window_stride(45, 0.9), 5u);  // 45 * 0.1 = 4.5
  EXPECT_EQ(window_stride(1024, 0.5), 512u);
  EXPECT_EQ(window_stride(7, 0.5), 4u);
  EXPECT_EQ(stratified_test_count(5, 0.3), 2u);  // 1.5
  EXPECT_EQ(stratified_test_count(25, 0.2), 5u);
  EXPECT_EQ(stratified_test_count(7, 0.2), 1u);  // 1.4
}
