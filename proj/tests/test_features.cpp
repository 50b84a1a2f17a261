#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nfc/features.hpp"

using namespace nfc;

namespace {
enum F { kMean, kStd, kVar, kRms, kPeak, kP2P, kSkew, kKurt, kCrest, kShape, kImpulse, kClearance };
}

TEST(Features, NamesAreFixed) {
  EXPECT_EQ(kFeatureNames.size(), 12u);
  EXPECT_EQ(kFeatureNames[kRms], "rms");
  EXPECT_EQ(kFeatureNames[kKurt], "kurtosis");
  EXPECT_EQ(kFeatureNames[kClearance], "clearance_factor");
}

TEST(Features, PeriodAlignedSine) {
  const double A = 2.5;
  std::vector<double> x(1024);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = A * std::sin(2.0 * std::numbers::pi * 8.0 * i / 1024.0);
  const auto f = extract_features(x);
  EXPECT_NEAR(f[kRms], A / std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(f[kPeak], A, 1e-3);
  EXPECT_NEAR(f[kCrest], std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(f[kMean], 0.0, 1e-12);
  EXPECT_NEAR(f[kP2P], 2 * A, 1e-3);
  EXPECT_NEAR(f[kKurt], 1.5, 1e-3);  // sine kurtosis
  EXPECT_NEAR(f[kShape], std::numbers::pi / (2 * std::sqrt(2.0)), 1e-3);
}

TEST(Features, HandComputedSmallVector) {
  // x = {1, -1, 3, -3}: mean 0, var 5, rms sqrt(5), peak 3, p2p 6, mean|x| 2.
  const auto f = extract_features(std::vector<double>{1, -1, 3, -3});
  EXPECT_DOUBLE_EQ(f[kMean], 0.0);
  EXPECT_DOUBLE_EQ(f[kVar], 5.0);
  EXPECT_DOUBLE_EQ(f[kStd], std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(f[kRms], std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(f[kPeak], 3.0);
  EXPECT_DOUBLE_EQ(f[kP2P], 6.0);
  EXPECT_DOUBLE_EQ(f[kSkew], 0.0);
  EXPECT_NEAR(f[kKurt], (1 + 1 + 81 + 81) / 4.0 / 25.0, 1e-15);
  EXPECT_NEAR(f[kShape], std::sqrt(5.0) / 2.0, 1e-15);
  EXPECT_NEAR(f[kImpulse], 1.5, 1e-15);
  const double msa = (2 * 1.0 + 2 * std::sqrt(3.0)) / 4.0;
  EXPECT_NEAR(f[kClearance], 3.0 / (msa * msa), 1e-14);
}

TEST(Features, ZerosAndConstantsStayFinite) {
  for (double c : {0.0, 7.0, -1e-20}) {
    const auto f = extract_features(std::vector<double>(64, c));
    for (double v : f.values) EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(f[kStd], 0.0, 1e-12 * std::abs(c));
    EXPECT_NEAR(f[kMean], c, 1e-12 * std::abs(c));
  }
  const auto z = extract_features(std::vector<double>(8, 0.0));
  EXPECT_EQ(z[kRms], 0.0);
  EXPECT_EQ(z[kCrest], 0.0);
}

TEST(Features, TooShortSegment) { EXPECT_THROW(extract_features(std::vector<double>{1.0}), ParameterError); }

TEST(Features, GaussianMoments) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(1'000'000);
  for (double& v : x) v = n(rng);
  const auto f = extract_features(x);
  EXPECT_LT(std::abs(f[kSkew]), 0.05);
  EXPECT_NEAR(f[kKurt], 3.0, 0.1);
}

TEST(Features, ScaleEquivariance) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.3, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(256);
    for (double& v : x) v = n(rng);
    const double a = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    std::vector<double> ax(x);
    for (double& v : ax) v *= a;
    const auto f = extract_features(x), g = extract_features(ax);
    for (int k : {kMean, kStd, kRms, kPeak, kP2P}) EXPECT_NEAR(g[k], a * f[k], 1e-9 * a * (1 + std::abs(f[k])));
    EXPECT_NEAR(g[kVar], a * a * f[kVar], 1e-9 * a * a * f[kVar]);
    for (int k : {kSkew, kKurt, kCrest, kShape, kImpulse, kClearance}) {
      EXPECT_NEAR(g[k], f[k], 1e-9 * (1 + std::abs(f[k])));
    }
  }
}

TEST(Features, CsvExportHasNamedColumns) {
  std::vector<SignalSegment> segs{{{1, 2, 3, 4}, ClassLabel::Outer, 0, 0}, {{0, 0, 1, 0}, ClassLabel::Normal, 0, 4}};
  const Matrix m = feature_matrix(segs);
  std::ostringstream os;
  const std::vector<ClassLabel> labels{ClassLabel::Outer, ClassLabel::Normal};
  write_feature_csv(os, m, labels);
  std::istringstream in(os.str());
  std::string header, row;
  std::getline(in, header);
  EXPECT_EQ(header,
            "mean,std,variance,rms,peak,peak_to_peak,skewness,kurtosis,crest_factor,shape_factor,impulse_factor,"
            "clearance_factor,label");
  std::getline(in, row);
  EXPECT_EQ(row.substr(row.rfind(',') + 1), "outer");
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 12);
}

TEST(Features, ColumnStandardization) {
  Matrix m(3, kNumFeatures);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < kNumFeatures; ++c) m(r, c) = static_cast<double>(r * (c + 1));
  const auto s = fit_feature_standardizers(m);
  const Matrix z = apply_feature_standardizers(s, m);
  for (std::size_t c = 0; c < kNumFeatures; ++c) {
    EXPECT_NEAR(z(0, c) + z(1, c) + z(2, c), 0.0, 1e-12);
    EXPECT_NEAR(z(2, c), std::sqrt(1.5), 1e-12);
  }
}
