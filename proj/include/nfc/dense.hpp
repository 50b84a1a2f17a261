#pragma once

// Fully connected classifier stack: N blocks of
//   Affine -> BatchNorm -> ReLU -> (inverted) Dropout
// followed by a plain affine layer producing the logits.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "random.hpp"

namespace nfc {

enum class RunMode { Train, Eval };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// Where train-mode dropout masks come from: sampled from `rng`, or replayed
/// from `frozen` (one scale matrix per block, as recorded in a cache).
struct DropoutSource {
  Rng* rng = nullptr;
  const std::vector<Matrix>* frozen = nullptr;
};

struct DenseBlock {
  Matrix W;  // out x in
  std::vector<double> b;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double dropout_p = 0.0;
  bool batch_norm = true;

  std::size_t in() const { return W.cols(); }
  std::size_t out() const { return W.rows(); }

  DenseBlock() = default;
  DenseBlock(std::size_t in, std::size_t out, double dropout, bool use_batch_norm)
      : W(out, in), b(out, 0.0), gamma(out, 1.0), beta(out, 0.0), running_mean(out, 0.0),
        running_var(out, 1.0), dropout_p(dropout), batch_norm(use_batch_norm) {
    if (in == 0 || out == 0) throw ParameterError("dense block dimensions must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout probability must lie in [0, 1)");
  }

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".W", std::vector<std::size_t>{self.W.rows(), self.W.cols()}, self.W.values());
    // Batch normalization subtracts the batch mean, so a bias in front of it
    // has an identically zero gradient; it is held at zero and not trained.
    if (!self.batch_norm) {
      f(prefix + ".b", std::vector<std::size_t>{self.b.size()}, std::span(self.b));
    } else {
      f(prefix + ".gamma", std::vector<std::size_t>{self.gamma.size()}, std::span(self.gamma));
      f(prefix + ".beta", std::vector<std::size_t>{self.beta.size()}, std::span(self.beta));
    }
  }
};

struct DenseBlockCache {
  RunMode mode = RunMode::Eval;
  Matrix input;
  Matrix xhat;                 // normalized pre-activation
  std::vector<double> inv_std; // per unit, batch or running
  Matrix y;                    // input to ReLU
  Matrix mask;                 // dropout scale (0 or 1/(1-p)); empty when inactive
};

struct DenseBlockOutput {
  Matrix out;
  DenseBlockCache cache;
};

inline DenseBlockOutput dense_block_forward(DenseBlock& block, const Matrix& batch, RunMode mode,
                                            DropoutSource dropout = {}, const Matrix* frozen_mask = nullptr) {
  if (batch.cols() != block.in()) {
    throw ShapeError("dense block expects width " + std::to_string(block.in()) + ", got " +
                     std::to_string(batch.cols()));
  }
  const std::size_t B = batch.rows();
  const std::size_t out = block.out();
  if (mode == RunMode::Train && block.batch_norm && B < 2) {
    throw ParameterError("train-mode batch normalization needs at least 2 rows");
  }
  if (B == 0) throw ParameterError("empty batch");

  DenseBlockOutput res;
  auto& c = res.cache;
  c.mode = mode;
  c.input = batch;

  Matrix z = matmul_transposed(batch, block.W);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < out; ++j) z(i, j) += block.b[j];
  }

  if (block.batch_norm) {
    c.xhat = Matrix(B, out);
    c.inv_std.assign(out, 0.0);
    c.y = Matrix(B, out);
    for (std::size_t j = 0; j < out; ++j) {
      double mu, var;
      if (mode == RunMode::Train) {
        double s = 0.0;
        for (std::size_t i = 0; i < B; ++i) s += z(i, j);
        mu = s / static_cast<double>(B);
        double sq = 0.0;
        for (std::size_t i = 0; i < B; ++i) sq += (z(i, j) - mu) * (z(i, j) - mu);
        var = sq / static_cast<double>(B);
        const double unbiased = sq / static_cast<double>(B - 1);
        block.running_mean[j] = (1.0 - kBatchNormMomentum) * block.running_mean[j] + kBatchNormMomentum * mu;
        block.running_var[j] = (1.0 - kBatchNormMomentum) * block.running_var[j] + kBatchNormMomentum * unbiased;
      } else {
        mu = block.running_mean[j];
        var = block.running_var[j];
      }
      const double inv = 1.0 / std::sqrt(var + kBatchNormEps);
      c.inv_std[j] = inv;
      for (std::size_t i = 0; i < B; ++i) {
        c.xhat(i, j) = (z(i, j) - mu) * inv;
        c.y(i, j) = block.gamma[j] * c.xhat(i, j) + block.beta[j];
      }
    }
  } else {
    c.y = std::move(z);
  }

  res.out = Matrix(B, out);
  for (std::size_t k = 0; k < res.out.size(); ++k) {
    const double v = c.y.values()[k];
    res.out.values()[k] = v > 0.0 ? v : 0.0;
  }

  if (mode == RunMode::Train && block.dropout_p > 0.0) {
    if (frozen_mask != nullptr) {
      if (frozen_mask->rows() != B || frozen_mask->cols() != out) {
        throw ShapeError("frozen dropout mask has shape " + shape_string(*frozen_mask));
      }
      c.mask = *frozen_mask;
    } else {
      if (dropout.rng == nullptr) throw ParameterError("train-mode dropout needs a random source");
      std::bernoulli_distribution keep(1.0 - block.dropout_p);
      const double scale = 1.0 / (1.0 - block.dropout_p);
      c.mask = Matrix(B, out);
      for (double& m : c.mask.values()) m = keep(*dropout.rng) ? scale : 0.0;
    }
    for (std::size_t k = 0; k < res.out.size(); ++k) res.out.values()[k] *= c.mask.values()[k];
  }
  return res;
}

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(input).
inline Matrix dense_block_backward(const DenseBlock& block, const DenseBlockCache& c, const Matrix& dout,
                                   DenseBlock& grad) {
  const std::size_t B = c.input.rows();
  const std::size_t out = block.out();
  if (dout.rows() != B || dout.cols() != out) {
    throw StateError("upstream gradient " + shape_string(dout) + " does not match block output");
  }

  Matrix dy(B, out);
  for (std::size_t k = 0; k < dy.size(); ++k) {
    double g = dout.values()[k];
    if (!c.mask.empty()) g *= c.mask.values()[k];
    dy.values()[k] = c.y.values()[k] > 0.0 ? g : 0.0;
  }

  Matrix dz(B, out);
  if (block.batch_norm) {
    for (std::size_t j = 0; j < out; ++j) {
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t i = 0; i < B; ++i) {
        sum_dy += dy(i, j);
        sum_dy_xhat += dy(i, j) * c.xhat(i, j);
      }
      grad.gamma[j] += sum_dy_xhat;
      grad.beta[j] += sum_dy;
      const double g = block.gamma[j];
      if (c.mode == RunMode::Train) {
        const double n = static_cast<double>(B);
        for (std::size_t i = 0; i < B; ++i) {
          dz(i, j) = g * c.inv_std[j] / n * (n * dy(i, j) - sum_dy - c.xhat(i, j) * sum_dy_xhat);
        }
      } else {
        for (std::size_t i = 0; i < B; ++i) dz(i, j) = g * c.inv_std[j] * dy(i, j);
      }
    }
  } else {
    dz = std::move(dy);
  }

  const Matrix dW = matmul_lhs_transposed(dz, c.input);
  for (std::size_t k = 0; k < dW.size(); ++k) grad.W.values()[k] += dW.values()[k];
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < out; ++j) grad.b[j] += dz(i, j);
  }
  return matmul(dz, block.W);
}

/// Final logits layer.
struct Affine {
  Matrix W;  // out x in
  std::vector<double> b;

  template <class Self, class F>
  static void visit(Self& self, const std::string& prefix, F&& f) {
    f(prefix + ".W", std::vector<std::size_t>{self.W.rows(), self.W.cols()}, self.W.values());
    f(prefix + ".b", std::vector<std::size_t>{self.b.size()}, std::span(self.b));
  }
};

struct DenseStackCache {
  std::vector<DenseBlockCache> blocks;
  Matrix head_input;
};

/// N dense blocks plus the output affine layer.
struct DenseStack {
  std::vector<DenseBlock> blocks;
  Affine output;

  std::size_t input_width() const { return blocks.empty() ? output.W.cols() : blocks.front().in(); }

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    for (std::size_t n = 0; n < self.blocks.size(); ++n) {
      DenseBlock::visit(self.blocks[n], "block" + std::to_string(n), f);
    }
    Affine::visit(self.output, "output", f);
  }
};

/// Glorot-uniform bound for a fan_in -> fan_out map.
inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline void glorot_fill(Matrix& w, Rng& rng) {
  const double s = glorot_bound(w.cols(), w.rows());
  std::uniform_real_distribution<double> u(-s, s);
  for (double& v : w.values()) v = u(rng);
}

inline DenseStack make_dense_stack(std::size_t input_width, const std::vector<std::size_t>& hidden,
                                   std::size_t num_outputs, double dropout, bool batch_norm, Rng& rng) {
  if (input_width == 0 || num_outputs == 0) throw ParameterError("dense stack dimensions must be positive");
  DenseStack s;
  std::size_t in = input_width;
  for (std::size_t width : hidden) {
    DenseBlock block(in, width, dropout, batch_norm);
    glorot_fill(block.W, rng);
    s.blocks.push_back(std::move(block));
    in = width;
  }
  s.output.W = Matrix(num_outputs, in);
  s.output.b.assign(num_outputs, 0.0);
  glorot_fill(s.output.W, rng);
  return s;
}

struct DenseStackOutput {
  Matrix logits;
  DenseStackCache cache;
};

inline DenseStackOutput dense_stack_forward(DenseStack& stack, const Matrix& input, RunMode mode,
                                            DropoutSource dropout) {
  if (dropout.frozen != nullptr && dropout.frozen->size() != stack.blocks.size()) {
    throw ShapeError("frozen dropout masks do not match the block count");
  }
  DenseStackOutput res;
  Matrix h = input;
  for (std::size_t n = 0; n < stack.blocks.size(); ++n) {
    const Matrix* frozen = dropout.frozen != nullptr && !(*dropout.frozen)[n].empty() ? &(*dropout.frozen)[n]
                                                                                      : nullptr;
    auto block_out = dense_block_forward(stack.blocks[n], h, mode, dropout, frozen);
    h = std::move(block_out.out);
    res.cache.blocks.push_back(std::move(block_out.cache));
  }
  res.logits = matmul_transposed(h, stack.output.W);
  for (std::size_t i = 0; i < res.logits.rows(); ++i) {
    for (std::size_t j = 0; j < res.logits.cols(); ++j) res.logits(i, j) += stack.output.b[j];
  }
  res.cache.head_input = std::move(h);
  return res;
}

/// Accumulates into `grad` (same shape as `stack`) and returns d(loss)/d(input).
inline Matrix dense_stack_backward(const DenseStack& stack, const DenseStackCache& cache, const Matrix& dlogits,
                                   DenseStack& grad) {
  if (cache.blocks.size() != stack.blocks.size() || cache.head_input.cols() != stack.output.W.cols()) {
    throw StateError("cache does not belong to this dense stack");
  }
  if (dlogits.rows() != cache.head_input.rows() || dlogits.cols() != stack.output.W.rows()) {
    throw StateError("dlogits shape " + shape_string(dlogits) + " does not match the forward pass");
  }
  const Matrix dW = matmul_lhs_transposed(dlogits, cache.head_input);
  for (std::size_t k = 0; k < dW.size(); ++k) grad.output.W.values()[k] += dW.values()[k];
  for (std::size_t i = 0; i < dlogits.rows(); ++i) {
    for (std::size_t j = 0; j < dlogits.cols(); ++j) grad.output.b[j] += dlogits(i, j);
  }
  Matrix d = matmul(dlogits, stack.output.W);
  for (std::size_t n = stack.blocks.size(); n-- > 0;) {
    d = dense_block_backward(stack.blocks[n], cache.blocks[n], d, grad.blocks[n]);
  }
  return d;
}

/// Dropout scale matrices recorded by a forward pass (empty when inactive).
inline std::vector<Matrix> dropout_masks(const DenseStackCache& cache) {
  std::vector<Matrix> out;
  for (const auto& b : cache.blocks) out.push_back(b.mask);
  return out;
}

}  // namespace nfc
