#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"

namespace nfc {

// A "model" here is any type with
//   template <class F> void for_each_parameter(F&& f);        // mutable
//   template <class F> void for_each_parameter(F&& f) const;  // read-only
// where f(const std::string& name, const std::vector<std::size_t>& shape, std::span<T> values).
// The visiting order is the declared parameter order used by checkpoints,
// optimizer state and gradient sets.

/// One gradient tensor per parameter tensor, in declared order.
struct GradientSet {
  std::vector<Tensor> tensors;

  const Tensor* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
  Tensor* find(const std::string& name) {
    for (auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  bool all_zero() const {
    return std::all_of(tensors.begin(), tensors.end(), [](const Tensor& t) {
      return std::all_of(t.values.begin(), t.values.end(), [](double v) { return v == 0.0; });
    });
  }
};

template <class Model>
Model zeros_like(const Model& model) {
  Model z = model;
  z.for_each_parameter([](const std::string&, const std::vector<std::size_t>&, std::span<double> v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
  return z;
}

/// Snapshot of a model's parameters as named tensors.
template <class Model>
GradientSet to_gradient_set(const Model& model) {
  GradientSet g;
  model.for_each_parameter(
      [&](const std::string& name, const std::vector<std::size_t>& shape, std::span<const double> v) {
        g.tensors.push_back({name, shape, std::vector<double>(v.begin(), v.end())});
      });
  return g;
}

template <class Model>
std::size_t parameter_count(const Model& model) {
  std::size_t n = 0;
  model.for_each_parameter(
      [&](const std::string&, const std::vector<std::size_t>&, std::span<const double> v) { n += v.size(); });
  return n;
}

/// Throws StateError unless `g` names and shapes mirror `model` exactly.
template <class Model>
void require_mirrors(const Model& model, const GradientSet& g) {
  std::size_t i = 0;
  model.for_each_parameter(
      [&](const std::string& name, const std::vector<std::size_t>& shape, std::span<const double> v) {
        if (i >= g.tensors.size()) throw StateError("gradient set is missing tensor '" + name + "'");
        const Tensor& t = g.tensors[i++];
        if (t.name != name || t.shape != shape || t.values.size() != v.size()) {
          throw StateError("gradient tensor '" + t.name + "' does not mirror parameter '" + name + "'");
        }
      });
  if (i != g.tensors.size()) throw StateError("gradient set has extra tensors");
}

template <class Model>
bool all_finite(const Model& model) {
  bool ok = true;
  model.for_each_parameter([&](const std::string&, const std::vector<std::size_t>&, std::span<const double> v) {
    for (double x : v) ok = ok && std::isfinite(x);
  });
  return ok;
}

}  // namespace nfc
