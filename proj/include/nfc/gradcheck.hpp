#pragma once

// Central finite-difference oracle for the analytic gradients. The
// numerical side only perturbs parameters through the visitor and calls the
// loss; it never touches backward code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "dense.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "params.hpp"
#include "random.hpp"
#include "training.hpp"

namespace nfc {

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kRelErrorFloor = 1e-8;

/// (f(θ+h) - f(θ-h)) / 2h for every scalar parameter of `model`.
template <class Model, class LossFn>
GradientSet finite_diff(LossFn&& loss_fn, const Model& model, double step = kGradCheckStep) {
  if (!(step > 0.0)) throw ParameterError("finite-difference step must be positive");
  Model work = model;
  std::vector<std::span<double>> views;
  work.for_each_parameter(
      [&](const std::string&, const std::vector<std::size_t>&, std::span<double> v) { views.push_back(v); });

  GradientSet out = to_gradient_set(model);
  for (std::size_t t = 0; t < views.size(); ++t) {
    for (std::size_t i = 0; i < views[t].size(); ++i) {
      const double saved = views[t][i];
      views[t][i] = saved + step;
      const double up = loss_fn(static_cast<const Model&>(work));
      views[t][i] = saved - step;
      const double down = loss_fn(static_cast<const Model&>(work));
      views[t][i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("non-finite loss while perturbing '" + out.tensors[t].name + "'");
      }
      out.tensors[t].values[i] = (up - down) / (2.0 * step);
    }
  }
  return out;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kRelErrorFloor});
}

struct GradCheckEntry {
  std::string name;
  std::size_t count = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double global_max = 0.0;
  double tolerance = kGradCheckTolerance;
  bool pass = true;

  std::vector<std::string> failing() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
      if (!e.pass) out.push_back(e.name);
    }
    return out;
  }
};

inline GradCheckReport compare_gradients(const GradientSet& analytic, const GradientSet& numeric, double tolerance) {
  if (analytic.tensors.size() != numeric.tensors.size()) throw StateError("gradient sets differ in size");
  GradCheckReport r;
  r.tolerance = tolerance;
  for (std::size_t t = 0; t < analytic.tensors.size(); ++t) {
    const auto& a = analytic.tensors[t];
    const auto& n = numeric.tensors[t];
    if (a.name != n.name || a.values.size() != n.values.size()) throw StateError("gradient sets do not mirror");
    GradCheckEntry e{a.name, a.values.size(), 0.0, 0.0, true};
    for (std::size_t i = 0; i < a.values.size(); ++i) {
      e.max_rel_error = std::max(e.max_rel_error, relative_error(a.values[i], n.values[i]));
      e.max_abs_error = std::max(e.max_abs_error, std::abs(a.values[i] - n.values[i]));
    }
    e.pass = e.max_rel_error < tolerance;
    r.global_max = std::max(r.global_max, e.max_rel_error);
    r.pass = r.pass && e.pass;
    r.entries.push_back(e);
  }
  return r;
}

struct GradCheckOptions {
  RunMode mode = RunMode::Eval;
  double step = kGradCheckStep;
  double tolerance = kGradCheckTolerance;
  std::uint64_t dropout_seed = 0;
  /// Fault injection: scale the analytic gradient of this tensor by (1 + factor).
  std::optional<std::string> corrupt_tensor;
  double corrupt_factor = 0.1;
};

namespace detail {
template <class Cache>
std::vector<Matrix> masks_of(const Cache& cache) {
  if constexpr (requires { dropout_masks(cache); }) {
    return dropout_masks(cache);
  } else {
    return {};
  }
}
}  // namespace detail

/// Compares backward() against finite differences of the mean cross-entropy.
/// Train-mode checks replay the dropout masks of one reference forward pass
/// and evaluate every perturbation on a fresh copy, so running statistics
/// never leak between evaluations.
template <class Model>
GradCheckReport check_model(const Model& model, const Matrix& batch, std::span<const int> labels,
                            const GradCheckOptions& opt = {}) {
  Model reference = model;
  Rng rng = make_rng(opt.dropout_seed, streams::kDropout);
  auto fwd = reference.forward(batch, opt.mode, DropoutSource{&rng, nullptr});
  const auto loss = softmax_cross_entropy(fwd.logits, labels);
  GradientSet analytic = reference.backward(fwd.cache, loss.dlogits);
  const std::vector<Matrix> masks = detail::masks_of(fwd.cache);

  if (opt.corrupt_tensor) {
    Tensor* t = analytic.find(*opt.corrupt_tensor);
    if (t == nullptr) throw ParameterError("no parameter tensor named '" + *opt.corrupt_tensor + "'");
    for (double& v : t->values) v *= 1.0 + opt.corrupt_factor;
  }

  const std::vector<int> y(labels.begin(), labels.end());
  auto loss_fn = [&](const Model& m) {
    Model copy = m;
    auto out = copy.forward(batch, opt.mode, DropoutSource{nullptr, &masks});
    return softmax_cross_entropy(out.logits, y).loss;
  };
  const GradientSet numeric = finite_diff(loss_fn, model, opt.step);
  return compare_gradients(analytic, numeric, opt.tolerance);
}

inline std::string format_text(const GradCheckReport& r) {
  std::ostringstream os;
  std::size_t width = 10;
  for (const auto& e : r.entries) width = std::max(width, e.name.size() + 2);
  os << std::left << std::setw(static_cast<int>(width)) << "tensor" << std::setw(8) << "size" << std::setw(14)
     << "max rel err" << std::setw(14) << "max abs err" << "status\n";
  os << std::scientific << std::setprecision(3);
  for (const auto& e : r.entries) {
    os << std::setw(static_cast<int>(width)) << e.name << std::setw(8) << e.count << std::setw(14) << e.max_rel_error
       << std::setw(14) << e.max_abs_error << (e.pass ? "ok" : "FAIL") << '\n';
  }
  os << "global max relative error " << r.global_max << " (tolerance " << r.tolerance << "): "
     << (r.pass ? "PASS" : "FAIL") << '\n';
  return os.str();
}

}  // namespace nfc
