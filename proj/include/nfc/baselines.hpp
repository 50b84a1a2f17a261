#pragma once

// Reference classifiers over the 12 time-domain features: multinomial
// logistic regression and a plain ReLU MLP.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "features.hpp"
#include "linalg.hpp"
#include "params.hpp"
#include "training.hpp"

namespace nfc {

struct LinearCache {
  Matrix input;
};

struct LinearForward {
  Matrix logits;
  LinearCache cache;
};

/// Multinomial logistic regression with an L2 penalty l2 * |W|^2 / 2 (bias unpenalized).
struct LinearClassifier {
  Matrix W;  // C x features
  std::vector<double> b;
  double l2_strength = 0.0;

  LinearClassifier() = default;
  LinearClassifier(std::size_t classes, std::size_t features, double l2)
      : W(classes, features), b(classes, 0.0), l2_strength(l2) {
    if (!(l2 >= 0.0)) throw ParameterError("l2 strength must be non-negative");
  }

  template <class F>
  void for_each_parameter(F&& f) { visit(*this, f); }
  template <class F>
  void for_each_parameter(F&& f) const { visit(*this, f); }

  LinearForward forward(const Matrix& x, RunMode = RunMode::Eval, DropoutSource = {}) const {
    if (x.cols() != W.cols()) {
      throw ShapeError("classifier expects " + std::to_string(W.cols()) + " features, got " + std::to_string(x.cols()));
    }
    LinearForward r;
    r.logits = matmul_transposed(x, W);
    for (std::size_t i = 0; i < r.logits.rows(); ++i) {
      for (std::size_t c = 0; c < r.logits.cols(); ++c) r.logits(i, c) += b[c];
    }
    r.cache.input = x;
    return r;
  }

  /// Gradient of mean cross-entropy (through dlogits) plus the L2 term.
  GradientSet backward(const LinearCache& cache, const Matrix& dlogits) const {
    if (dlogits.rows() != cache.input.rows() || dlogits.cols() != W.rows()) {
      throw StateError("dlogits do not match the cached forward pass");
    }
    LinearClassifier g = zeros_like(*this);
    g.W = matmul_lhs_transposed(dlogits, cache.input);
    for (std::size_t k = 0; k < W.size(); ++k) g.W.values()[k] += l2_strength * W.values()[k];
    for (std::size_t i = 0; i < dlogits.rows(); ++i) {
      for (std::size_t c = 0; c < dlogits.cols(); ++c) g.b[c] += dlogits(i, c);
    }
    return to_gradient_set(g);
  }

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f(std::string("W"), std::vector<std::size_t>{self.W.rows(), self.W.cols()}, self.W.values());
    f(std::string("b"), std::vector<std::size_t>{self.b.size()}, std::span(self.b));
  }
};

/// Mean cross-entropy plus l2 * |W|^2 / 2.
inline double logistic_objective(const LinearClassifier& clf, const Matrix& x, std::span<const int> y) {
  double penalty = 0.0;
  for (double w : clf.W.values()) penalty += w * w;
  return softmax_cross_entropy(clf.forward(x).logits, y).loss + 0.5 * clf.l2_strength * penalty;
}

struct LogisticConfig {
  double learning_rate = 0.05;
  std::size_t max_epochs = 20000;
  double grad_tolerance = 1e-6;
  std::size_t num_classes = 4;
  std::uint64_t seed = 0;
};

inline double gradient_norm(const GradientSet& g) {
  double s = 0.0;
  for (const auto& t : g.tensors) {
    for (double v : t.values) s += v * v;
  }
  return std::sqrt(s);
}

/// Full-batch Adam on the convex logistic objective, with the learning rate
/// halved on plateaus, until the gradient norm drops below tolerance.
inline LinearClassifier train_logistic(const Matrix& features, std::span<const int> labels, double l2_strength,
                                       const LogisticConfig& cfg = {}) {
  if (features.rows() == 0) throw ParameterError("logistic regression needs at least one sample");
  if (labels.size() != features.rows()) throw ShapeError("label count does not match feature rows");
  LinearClassifier clf(cfg.num_classes, features.cols(), l2_strength);
  Rng rng = make_rng(cfg.seed, streams::kInit);
  glorot_fill(clf.W, rng);

  AdamState adam;
  PlateauScheduler scheduler(cfg.learning_rate, SchedulerConfig{0.5, 20, 1e-7, 0.0});
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const auto fwd = clf.forward(features);
    const auto loss = softmax_cross_entropy(fwd.logits, labels);
    const GradientSet g = clf.backward(fwd.cache, loss.dlogits);
    if (gradient_norm(g) < cfg.grad_tolerance) break;
    adam_step(adam, clf, g, scheduler.lr());
    scheduler.step(logistic_objective(clf, features, labels));
  }
  return clf;
}

/// Argmax class per row; ties resolve to the lowest index.
template <class Model>
std::vector<int> predict(Model& model, const Matrix& features) {
  return argmax_rows(model.forward(features).logits);
}

// ---------------------------------------------------------------------------

struct MlpOptions {
  std::vector<std::size_t> hidden{128, 64, 32};
  double dropout = 0.0;
  bool batch_norm = false;
  std::size_t num_classes = 4;
};

struct MlpForward {
  Matrix logits;
  DenseStackCache cache;
};

struct MlpBaseline {
  DenseStack stack;

  template <class F>
  void for_each_parameter(F&& f) { DenseStack::visit(stack, f); }
  template <class F>
  void for_each_parameter(F&& f) const { DenseStack::visit(stack, f); }

  MlpForward forward(const Matrix& x, RunMode mode = RunMode::Eval, DropoutSource dropout = {}) {
    if (x.cols() != stack.input_width()) throw ShapeError("MLP expects " + std::to_string(stack.input_width()) + " features");
    auto out = dense_stack_forward(stack, x, mode, dropout);
    return {std::move(out.logits), std::move(out.cache)};
  }

  GradientSet backward(const DenseStackCache& cache, const Matrix& dlogits) const {
    MlpBaseline g = zeros_like(*this);
    dense_stack_backward(stack, cache, dlogits, g.stack);
    return to_gradient_set(g);
  }
};

inline MlpBaseline init_mlp_baseline(std::size_t input_width, const MlpOptions& opt, std::uint64_t seed) {
  Rng rng = make_rng(seed, streams::kInit);
  return {make_dense_stack(input_width, opt.hidden, opt.num_classes, opt.dropout, opt.batch_norm, rng)};
}

struct MlpTrainResult {
  MlpBaseline model;
  TrainHistory history;
};

inline MlpTrainResult train_mlp_baseline(const LabeledData& train, const LabeledData& eval, const TrainConfig& cfg,
                                         const MlpOptions& opt = {}) {
  if (train.size() == 0 && cfg.epochs > 0) throw ParameterError("MLP training set is empty");
  MlpTrainResult r{init_mlp_baseline(train.x.cols() == 0 ? kNumFeatures : train.x.cols(), opt, cfg.seed), {}};
  r.history = train_classifier(r.model, train, eval, cfg, opt.num_classes);
  return r;
}

}  // namespace nfc
