#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "metrics.hpp"
#include "params.hpp"
#include "random.hpp"
#include "signal.hpp"

namespace nfc {

// ---------------------------------------------------------------------------
// Loss

struct LossResult {
  double loss = 0.0;
  Matrix dlogits;
};

/// Mean cross-entropy of softmax(logits) against `labels`; dlogits = (softmax - onehot) / B.
inline LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  const std::size_t B = logits.rows(), C = logits.cols();
  if (labels.size() != B) throw ShapeError("label count does not match logits rows");
  if (B == 0) throw ParameterError("cross-entropy of an empty batch");
  LossResult r;
  r.dlogits = Matrix(B, C);
  double total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      throw DataError("label " + std::to_string(y) + " out of range [0, " + std::to_string(C) + ")");
    }
    auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = std::log(z);
    total += -(row[static_cast<std::size_t>(y)] - mx - log_z);
    for (std::size_t c = 0; c < C; ++c) {
      const double p = std::exp(row[c] - mx - log_z);
      r.dlogits(i, c) = (p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) / static_cast<double>(B);
    }
  }
  r.loss = total / static_cast<double>(B);
  return r;
}

/// Row-wise argmax; ties go to the lowest class index.
inline std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update of every parameter in `model`.
template <class Model>
void adam_step(AdamState& state, Model& model, const GradientSet& grads, double lr, const AdamConfig& cfg = {}) {
  require_mirrors(model, grads);
  if (state.m.empty() && state.t == 0) {
    for (const auto& g : grads.tensors) {
      state.m.push_back({g.name, g.shape, std::vector<double>(g.values.size(), 0.0)});
      state.v.push_back({g.name, g.shape, std::vector<double>(g.values.size(), 0.0)});
    }
  }
  if (state.m.size() != grads.tensors.size() || state.v.size() != grads.tensors.size()) {
    throw StateError("optimizer state does not mirror the model");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  std::size_t k = 0;
  model.for_each_parameter([&](const std::string& name, const std::vector<std::size_t>&, std::span<double> theta) {
    auto& m = state.m[k].values;
    auto& v = state.v[k].values;
    const auto& g = grads.tensors[k].values;
    if (state.m[k].name != name || m.size() != theta.size()) {
      throw StateError("optimizer state for '" + state.m[k].name + "' does not match '" + name + "'");
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
    ++k;
  });
}

// ---------------------------------------------------------------------------
// Reduce-on-plateau

struct SchedulerConfig {
  double factor = 0.5;
  std::size_t patience = 10;
  double min_lr = 1e-6;
  double threshold = 1e-8;
};

class PlateauScheduler {
 public:
  PlateauScheduler(double initial_lr, SchedulerConfig cfg) : cfg_(cfg), lr_(initial_lr) {
    if (!(cfg.factor > 0.0 && cfg.factor < 1.0)) throw ParameterError("scheduler factor must lie in (0, 1)");
  }

  /// Feeds one epoch's monitored value; returns the learning rate to use next.
  double step(double monitored) {
    if (!std::isfinite(monitored)) throw NumericError("scheduler received a non-finite value");
    if (monitored < best_ - cfg_.threshold) {
      best_ = monitored;
      bad_epochs_ = 0;
    } else if (++bad_epochs_ > cfg_.patience) {
      lr_ = std::max(lr_ * cfg_.factor, cfg_.min_lr);
      bad_epochs_ = 0;
    }
    return lr_;
  }

  double lr() const { return lr_; }
  std::size_t bad_epochs() const { return bad_epochs_; }

 private:
  SchedulerConfig cfg_;
  double lr_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs_ = 0;
};

// ---------------------------------------------------------------------------
// Epoch loop

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  SchedulerConfig scheduler;
  AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
    if (batch_size < 2) throw ParameterError("batch size must be at least 2");
    if (!(scheduler.factor > 0.0 && scheduler.factor < 1.0)) throw ParameterError("scheduler factor must lie in (0, 1)");
    if (!(scheduler.min_lr >= 0.0)) throw ParameterError("min_lr must be non-negative");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
  double eval_loss = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;

  bool operator==(const TrainHistory&) const = default;
};

inline void write_history_csv(std::ostream& out, const TrainHistory& h) {
  const auto old = out.precision(17);
  out << "epoch,train_loss,lr,accuracy,precision,recall,f1\n";
  for (const auto& e : h.epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.lr << ',' << e.accuracy << ',' << e.precision << ','
        << e.recall << ',' << e.f1 << '\n';
  }
  out.precision(old);
}

/// Inputs with integer class labels, one row per sample.
struct LabeledData {
  Matrix x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

inline LabeledData to_labeled(const std::vector<SignalSegment>& segments) {
  LabeledData d;
  if (segments.empty()) return d;
  const std::size_t L = segments.front().values.size();
  d.x = Matrix(segments.size(), L);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].values.size() != L) throw ShapeError("segments differ in length");
    std::copy(segments[i].values.begin(), segments[i].values.end(), d.x.row(i).begin());
    d.y.push_back(label_index(segments[i].label));
  }
  return d;
}

inline Matrix gather_rows(const Matrix& x, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto src = x.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

/// Eval-mode logits, computed in fixed-size chunks.
template <class Model>
Matrix predict_logits(Model& model, const Matrix& x, std::size_t chunk = 256) {
  Matrix out;
  for (std::size_t start = 0; start < x.rows(); start += chunk) {
    const std::size_t n = std::min(chunk, x.rows() - start);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), start);
    auto part = model.forward(gather_rows(x, idx), RunMode::Eval).logits;
    if (out.empty()) out = Matrix(x.rows(), part.cols());
    for (std::size_t i = 0; i < n; ++i) std::copy(part.row(i).begin(), part.row(i).end(), out.row(start + i).begin());
  }
  return out;
}

struct EvalResult {
  double loss = 0.0;
  EvalReport report;
};

template <class Model>
EvalResult evaluate_model(Model& model, const LabeledData& data, std::size_t num_classes) {
  if (data.size() == 0) throw ParameterError("cannot evaluate on an empty set");
  const Matrix logits = predict_logits(model, data.x);
  EvalResult r;
  r.loss = softmax_cross_entropy(logits, data.y).loss;
  const auto pred = argmax_rows(logits);
  r.report = evaluate(confusion(data.y, pred, num_classes));
  return r;
}

/// Minibatch Adam training with reduce-on-plateau on the evaluation loss.
/// Each epoch: seeded shuffle, forward/backward/update per batch (a trailing
/// batch of one row is dropped), then eval-mode metrics on `eval`. When
/// `eval` is empty the training set is evaluated instead.
template <class Model>
TrainHistory train_classifier(Model& model, const LabeledData& train, const LabeledData& eval,
                              const TrainConfig& cfg, std::size_t num_classes) {
  cfg.validate();
  TrainHistory history;
  if (cfg.epochs == 0) return history;
  if (train.size() == 0) throw ParameterError("training set is empty");

  Rng shuffle_rng = make_rng(cfg.seed, streams::kShuffle);
  Rng dropout_rng = make_rng(cfg.seed, streams::kDropout);
  AdamState adam;
  PlateauScheduler scheduler(cfg.learning_rate, cfg.scheduler);
  const LabeledData& monitor = eval.size() > 0 ? eval : train;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduler.lr();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      if (n < 2) continue;
      std::span<const std::size_t> idx(order.data() + start, n);
      const Matrix xb = gather_rows(train.x, idx);
      std::vector<int> yb(n);
      for (std::size_t i = 0; i < n; ++i) yb[i] = train.y[idx[i]];

      auto fwd = model.forward(xb, RunMode::Train, DropoutSource{&dropout_rng, nullptr});
      const auto loss = softmax_cross_entropy(fwd.logits, yb);
      if (!std::isfinite(loss.loss)) throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch));
      const GradientSet grads = model.backward(fwd.cache, loss.dlogits);
      adam_step(adam, model, grads, lr, cfg.adam);
      loss_sum += loss.loss * static_cast<double>(n);
      seen += n;
    }

    const auto ev = evaluate_model(model, monitor, num_classes);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = seen > 0 ? loss_sum / static_cast<double>(seen) : 0.0;
    rec.lr = lr;
    rec.eval_loss = ev.loss;
    rec.accuracy = ev.report.accuracy;
    rec.precision = ev.report.precision;
    rec.recall = ev.report.recall;
    rec.f1 = ev.report.f1;
    history.epochs.push_back(rec);
    scheduler.step(ev.loss);
  }
  return history;
}

}  // namespace nfc
