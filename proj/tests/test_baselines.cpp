#include <gtest/gtest.h>

#include <cmath>

#include "nfc/baselines.hpp"
#include "nfc/features.hpp"
#include "nfc/gradcheck.hpp"
#include "nfc/pipeline.hpp"
#include "toy_fixtures.hpp"

using namespace nfc;

namespace {
double accuracy(const std::vector<int>& pred, const std::vector<int>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += pred[i] == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}
}  // namespace

TEST(Logistic, SeparableBlobsFitPerfectly) {
  const auto train = nfc_test::separable_blobs(50, 1);
  const auto test = nfc_test::separable_blobs(50, 2);
  LogisticConfig cfg;
  cfg.max_epochs = 2000;
  auto clf = train_logistic(train.x, train.y, 0.0, cfg);
  EXPECT_EQ(accuracy(predict(clf, train.x), train.y), 1.0);
  EXPECT_GE(accuracy(predict(clf, test.x), test.y), 0.95);
}

TEST(Logistic, ZeroModelIsUniform) {
  LinearClassifier clf(4, 12, 0.0);
  const auto blobs = nfc_test::separable_blobs(5, 3);
  const auto logits = clf.forward(blobs.x).logits;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double z = 0.0;
    for (double v : logits.row(i)) z += std::exp(v);
    for (double v : logits.row(i)) EXPECT_DOUBLE_EQ(std::exp(v) / z, 0.25);
  }
  for (int p : predict(clf, blobs.x)) EXPECT_EQ(p, 0);
  EXPECT_THROW(clf.forward(Matrix(2, 11)), ShapeError);
}

TEST(Logistic, TieBreaksToLowestIndex) {
  LinearClassifier clf(4, 1, 0.0);
  clf.b = {0.1, 0.9, 0.9, 0.2};
  EXPECT_EQ(predict(clf, Matrix(1, 1, 0.0)), (std::vector<int>{1}));
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  const auto data = nfc_test::separable_blobs(6, 4);
  LinearClassifier clf(4, 12, 0.3);
  Rng rng(5);
  glorot_fill(clf.W, rng);
  clf.b = {0.1, -0.2, 0.3, 0.0};
  const auto fwd = clf.forward(data.x);
  const auto analytic = clf.backward(fwd.cache, softmax_cross_entropy(fwd.logits, data.y).dlogits);
  const auto numeric = finite_diff(
      [&](const LinearClassifier& m) { return logistic_objective(m, data.x, data.y); }, clf, 1e-5);
  const auto report = compare_gradients(analytic, numeric, 1e-6);
  EXPECT_TRUE(report.pass) << format_text(report);
}

TEST(Logistic, ConvexObjectiveReachesSameMinimumFromAnySeed) {
  const auto data = nfc_test::separable_blobs(40, 6);
  LogisticConfig a, b;
  a.seed = 1;
  b.seed = 2;
  const auto ca = train_logistic(data.x, data.y, 0.1, a);
  const auto cb = train_logistic(data.x, data.y, 0.1, b);
  EXPECT_NE(make_rng(1, streams::kInit)(), make_rng(2, streams::kInit)());
  EXPECT_NEAR(logistic_objective(ca, data.x, data.y), logistic_objective(cb, data.x, data.y), 1e-4);
}

TEST(Logistic, EmptyInputRejected) {
  EXPECT_THROW(train_logistic(Matrix(0, 12), std::vector<int>{}, 0.0), ParameterError);
}

TEST(Predict, ShiftInvariance) {
  const auto data = nfc_test::separable_blobs(20, 9);
  LinearClassifier clf(4, 12, 0.0);
  Rng rng(10);
  glorot_fill(clf.W, rng);
  const auto before = predict(clf, data.x);
  for (double shift : {-1e3, -1.0, 0.5, 1e3}) {
    LinearClassifier moved = clf;
    for (double& b : moved.b) b += shift;
    EXPECT_EQ(predict(moved, data.x), before);
  }
}

namespace {
struct FeatureSets {
  LabeledData train, test;
};

FeatureSets synthetic_features() {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.data.recordings_per_class = 1;
  cfg.synth.duration = 1.5;
  cfg.finalize();
  const auto data = prepare_data(cfg);
  auto to_features = [](const std::vector<SignalSegment>& segs) {
    LabeledData d;
    d.x = feature_matrix(segs);
    for (const auto& s : segs) d.y.push_back(label_index(s.label));
    return d;
  };
  FeatureSets f{to_features(data.raw_split.train), to_features(data.raw_split.test)};
  const auto st = fit_feature_standardizers(f.train.x);
  f.train.x = apply_feature_standardizers(st, f.train.x);
  f.test.x = apply_feature_standardizers(st, f.test.x);
  return f;
}
}  // namespace

TEST(Mlp, ZeroEpochsIsNoOp) {
  const auto f = synthetic_features();
  TrainConfig tc;
  tc.epochs = 0;
  const auto r = train_mlp_baseline(f.train, f.test, tc);
  EXPECT_TRUE(r.history.epochs.empty());
  const auto fresh = init_mlp_baseline(12, MlpOptions{}, tc.seed);
  EXPECT_EQ(r.model.stack.blocks[0].W, fresh.stack.blocks[0].W);
  EXPECT_EQ(r.model.stack.blocks.size(), 3u);
  EXPECT_EQ(r.model.stack.blocks[0].out(), 128u);
}

TEST(Mlp, SeedDeterminism) {
  const auto f = synthetic_features();
  TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 1e-3;
  tc.seed = 4;
  const auto a = train_mlp_baseline(f.train, f.test, tc);
  const auto b = train_mlp_baseline(f.train, f.test, tc);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model.stack.output.W, b.model.stack.output.W);
}

TEST(Mlp, SyntheticFeaturesAccuracy) {
  const auto f = synthetic_features();
  TrainConfig tc;
  tc.epochs = 100;
  tc.learning_rate = 1e-3;
  tc.seed = 11;
  auto r = train_mlp_baseline(f.train, f.test, tc);
  EXPECT_GE(accuracy(predict(r.model, f.test.x), f.test.y), 0.9);
}
