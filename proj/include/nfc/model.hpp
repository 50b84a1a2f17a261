#pragma once

// Neural factorization classifier.
//
//   x (length L) --U_k--> I_k (length D_k), k = 1..K        mode embeddings
//   CP:     f_r = lambda_r * prod_k I_k[r]                   (all D_k = R)
//   Tucker: f[p*Q + q] = G[p,q] * I_1[p] * I_2[q]            (K = 2)
//   f --> dense blocks --> affine --> logits
//
// Forward and backward are batched; each row is one window.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "params.hpp"
#include "random.hpp"

namespace nfc {

enum class FusionKind { Cp, Tucker };

inline std::string_view fusion_name(FusionKind k) { return k == FusionKind::Cp ? "cp" : "tucker"; }

inline FusionKind parse_fusion(std::string_view s) {
  if (s == "cp") return FusionKind::Cp;
  if (s == "tucker") return FusionKind::Tucker;
  throw ParameterError("unknown fusion '" + std::string(s) + "' (expected cp or tucker)");
}

struct ArchConfig {
  FusionKind fusion = FusionKind::Cp;
  std::size_t input_len = 1024;
  std::vector<std::size_t> embed_dims{32, 32};
  std::vector<std::size_t> hidden{64, 32};
  double dropout = 0.3;
  std::size_t num_classes = 4;

  /// CP: D1 = D2 = R = 32. Tucker: P = Q = 16 (256 fused features).
  static ArchConfig defaults(FusionKind kind) {
    ArchConfig a;
    a.fusion = kind;
    a.embed_dims = kind == FusionKind::Cp ? std::vector<std::size_t>{32, 32} : std::vector<std::size_t>{16, 16};
    return a;
  }

  std::size_t fused_width() const {
    if (fusion == FusionKind::Cp) return embed_dims.front();
    return embed_dims[0] * embed_dims[1];
  }

  void validate() const {
    if (input_len == 0) throw ParameterError("input length must be positive");
    if (num_classes == 0) throw ParameterError("class count must be positive");
    if (embed_dims.size() < 2) throw ParameterError("at least two mode embeddings are required");
    for (auto d : embed_dims) {
      if (d == 0) throw ParameterError("embedding sizes must be positive");
    }
    for (auto h : hidden) {
      if (h == 0) throw ParameterError("hidden widths must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
    if (fusion == FusionKind::Cp) {
      for (auto d : embed_dims) {
        if (d != embed_dims.front()) throw ParameterError("CP fusion needs equal embedding sizes");
      }
    } else if (embed_dims.size() != 2) {
      throw ParameterError("Tucker fusion supports exactly two modes");
    }
  }

  bool operator==(const ArchConfig&) const = default;
};

struct ModeEmbedding {
  Matrix U;  // D_k x L
};

struct CpFusion {
  std::vector<double> lambda;
};

struct TuckerFusion {
  Matrix core;  // P x Q
};

// ---------------------------------------------------------------------------
// Single-vector operations.

inline std::vector<double> embed_forward(const ModeEmbedding& emb, std::span<const double> x) {
  if (x.size() != emb.U.cols()) {
    throw ShapeError("embedding expects length " + std::to_string(emb.U.cols()) + ", got " +
                     std::to_string(x.size()));
  }
  std::vector<double> out(emb.U.rows(), 0.0);
  for (std::size_t d = 0; d < out.size(); ++d) {
    auto u = emb.U.row(d);
    double acc = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) acc += u[l] * x[l];
    out[d] = acc;
  }
  return out;
}

/// Elementwise lambda * prod_k I_k for any number of modes.
inline std::vector<double> cp_fuse_forward(const CpFusion& fusion, const std::vector<std::vector<double>>& modes) {
  const std::size_t r = fusion.lambda.size();
  if (modes.empty()) throw ShapeError("CP fusion needs at least one mode");
  for (const auto& m : modes) {
    if (m.size() != r) {
      throw ShapeError("CP fusion expects mode length " + std::to_string(r) + ", got " + std::to_string(m.size()));
    }
  }
  std::vector<double> f(fusion.lambda);
  for (const auto& m : modes) {
    for (std::size_t i = 0; i < r; ++i) f[i] *= m[i];
  }
  return f;
}

inline std::vector<double> cp_fuse_forward(const CpFusion& fusion, std::span<const double> i1,
                                           std::span<const double> i2) {
  return cp_fuse_forward(fusion, {std::vector<double>(i1.begin(), i1.end()), std::vector<double>(i2.begin(), i2.end())});
}

/// G ⊙ (I_1 ∘ I_2), flattened row-major (index p*Q + q).
inline std::vector<double> tucker_fuse_forward(const TuckerFusion& fusion, std::span<const double> i1,
                                               std::span<const double> i2) {
  const std::size_t P = fusion.core.rows(), Q = fusion.core.cols();
  if (i1.size() != P || i2.size() != Q) {
    throw ShapeError("Tucker fusion expects modes of length " + std::to_string(P) + " and " + std::to_string(Q));
  }
  std::vector<double> f(P * Q);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t q = 0; q < Q; ++q) f[p * Q + q] = fusion.core(p, q) * i1[p] * i2[q];
  }
  return f;
}

inline std::vector<double> flatten(const Matrix& t) { return {t.values().begin(), t.values().end()}; }

inline Matrix unflatten(std::span<const double> f, std::size_t rows, std::size_t cols) {
  if (f.size() != rows * cols) throw ShapeError("cannot unflatten " + std::to_string(f.size()) + " values");
  return Matrix(rows, cols, std::vector<double>(f.begin(), f.end()));
}

// ---------------------------------------------------------------------------

struct ModelCache {
  FusionKind fusion = FusionKind::Cp;
  Matrix input;               // B x L
  std::vector<Matrix> modes;  // I_k, B x D_k
  DenseStackCache head;
};

inline std::vector<Matrix> dropout_masks(const ModelCache& cache) { return dropout_masks(cache.head); }

struct ModelForward {
  Matrix logits;
  ModelCache cache;
};

struct NfcModel {
  ArchConfig arch;
  std::vector<ModeEmbedding> embeddings;
  std::variant<CpFusion, TuckerFusion> fusion;
  DenseStack head;

  FusionKind kind() const { return std::holds_alternative<CpFusion>(fusion) ? FusionKind::Cp : FusionKind::Tucker; }

  template <class F>
  void for_each_parameter(F&& f) { visit(*this, f); }
  template <class F>
  void for_each_parameter(F&& f) const { visit(*this, f); }

  ModelForward forward(const Matrix& batch, RunMode mode, DropoutSource dropout = {});
  GradientSet backward(const ModelCache& cache, const Matrix& dlogits) const;

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    for (std::size_t k = 0; k < self.embeddings.size(); ++k) {
      auto& U = self.embeddings[k].U;
      f("embed" + std::to_string(k) + ".U", std::vector<std::size_t>{U.rows(), U.cols()}, U.values());
    }
    if (auto* cp = std::get_if<CpFusion>(&self.fusion)) {
      f(std::string("fusion.lambda"), std::vector<std::size_t>{cp->lambda.size()}, std::span(cp->lambda));
    } else {
      auto& G = std::get<TuckerFusion>(self.fusion).core;
      f(std::string("fusion.core"), std::vector<std::size_t>{G.rows(), G.cols()}, G.values());
    }
    DenseStack::visit(self.head, f);
  }
};

inline ModelForward NfcModel::forward(const Matrix& batch, RunMode mode, DropoutSource dropout) {
  if (batch.cols() != arch.input_len) {
    throw ShapeError("model expects rows of length " + std::to_string(arch.input_len) + ", got " +
                     std::to_string(batch.cols()));
  }
  ModelForward res;
  auto& c = res.cache;
  c.fusion = kind();
  c.input = batch;
  for (const auto& emb : embeddings) c.modes.push_back(matmul_transposed(batch, emb.U));

  const std::size_t B = batch.rows();
  Matrix fused;
  if (auto* cp = std::get_if<CpFusion>(&fusion)) {
    const std::size_t R = cp->lambda.size();
    fused = Matrix(B, R);
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t r = 0; r < R; ++r) {
        double v = cp->lambda[r];
        for (const auto& m : c.modes) v *= m(i, r);
        fused(i, r) = v;
      }
    }
  } else {
    const auto& G = std::get<TuckerFusion>(fusion).core;
    const std::size_t P = G.rows(), Q = G.cols();
    fused = Matrix(B, P * Q);
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t p = 0; p < P; ++p) {
        const double a = c.modes[0](i, p);
        for (std::size_t q = 0; q < Q; ++q) fused(i, p * Q + q) = G(p, q) * a * c.modes[1](i, q);
      }
    }
  }

  auto head_out = dense_stack_forward(head, fused, mode, dropout);
  res.logits = std::move(head_out.logits);
  c.head = std::move(head_out.cache);
  return res;
}

inline GradientSet NfcModel::backward(const ModelCache& c, const Matrix& dlogits) const {
  if (c.fusion != kind() || c.modes.size() != embeddings.size() || c.input.cols() != arch.input_len) {
    throw StateError("cache was produced by a different model");
  }
  for (std::size_t k = 0; k < embeddings.size(); ++k) {
    if (c.modes[k].cols() != embeddings[k].U.rows() || c.modes[k].rows() != c.input.rows()) {
      throw StateError("cached mode " + std::to_string(k) + " does not match the model");
    }
  }

  NfcModel grad = zeros_like(*this);
  const Matrix dfused = dense_stack_backward(head, c.head, dlogits, grad.head);
  const std::size_t B = c.input.rows();

  std::vector<Matrix> dmodes;
  for (const auto& m : c.modes) dmodes.emplace_back(m.rows(), m.cols());

  if (const auto* cp = std::get_if<CpFusion>(&fusion)) {
    auto& dlambda = std::get<CpFusion>(grad.fusion).lambda;
    const std::size_t R = cp->lambda.size();
    if (dfused.cols() != R) throw StateError("fused width does not match lambda");
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t r = 0; r < R; ++r) {
        const double up = dfused(i, r);
        double all = 1.0;
        for (const auto& m : c.modes) all *= m(i, r);
        dlambda[r] += up * all;
        for (std::size_t k = 0; k < c.modes.size(); ++k) {
          double others = cp->lambda[r];
          for (std::size_t j = 0; j < c.modes.size(); ++j) {
            if (j != k) others *= c.modes[j](i, r);
          }
          dmodes[k](i, r) = up * others;
        }
      }
    }
  } else {
    const auto& G = std::get<TuckerFusion>(fusion).core;
    auto& dG = std::get<TuckerFusion>(grad.fusion).core;
    const std::size_t P = G.rows(), Q = G.cols();
    if (dfused.cols() != P * Q) throw StateError("fused width does not match the core");
    for (std::size_t i = 0; i < B; ++i) {
      for (std::size_t p = 0; p < P; ++p) {
        const double a = c.modes[0](i, p);
        double d1 = 0.0;
        for (std::size_t q = 0; q < Q; ++q) {
          const double up = dfused(i, p * Q + q);
          const double b = c.modes[1](i, q);
          dG(p, q) += up * a * b;
          d1 += G(p, q) * b * up;
          dmodes[1](i, q) += G(p, q) * a * up;
        }
        dmodes[0](i, p) = d1;
      }
    }
  }

  for (std::size_t k = 0; k < embeddings.size(); ++k) {
    grad.embeddings[k].U = matmul_lhs_transposed(dmodes[k], c.input);
  }
  return to_gradient_set(grad);
}

inline ModelForward model_forward(NfcModel& model, const Matrix& batch, RunMode mode, DropoutSource dropout = {}) {
  return model.forward(batch, mode, dropout);
}

inline GradientSet model_backward(const NfcModel& model, const ModelCache& cache, const Matrix& dlogits) {
  return model.backward(cache, dlogits);
}

/// Glorot-uniform embeddings and dense weights, unit fusion weights, zero
/// biases, identity batch normalization. Deterministic per seed.
inline NfcModel init_model(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng = make_rng(seed, streams::kInit);
  NfcModel m;
  m.arch = arch;
  for (auto d : arch.embed_dims) {
    ModeEmbedding e{Matrix(d, arch.input_len)};
    glorot_fill(e.U, rng);
    m.embeddings.push_back(std::move(e));
  }
  if (arch.fusion == FusionKind::Cp) {
    m.fusion = CpFusion{std::vector<double>(arch.embed_dims.front(), 1.0)};
  } else {
    m.fusion = TuckerFusion{Matrix(arch.embed_dims[0], arch.embed_dims[1], 1.0)};
  }
  m.head = make_dense_stack(arch.fused_width(), arch.hidden, arch.num_classes, arch.dropout, true, rng);
  return m;
}

}  // namespace nfc
