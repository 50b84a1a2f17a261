#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace nfc {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) + " != " +
                       std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

/// x · wᵀ: (B×in) by (out×in) -> B×out.
inline Matrix matmul_transposed(const Matrix& x, const Matrix& w) {
  if (x.cols() != w.cols()) {
    throw ShapeError("cannot multiply " + shape_string(x) + " by transpose of " + shape_string(w));
  }
  Matrix out(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      auto wo = w.row(o);
      double acc = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) acc += xi[k] * wo[k];
      out(i, o) = acc;
    }
  }
  return out;
}

/// a · w: (B×out) by (out×in) -> B×in.
inline Matrix matmul(const Matrix& a, const Matrix& w) {
  if (a.cols() != w.rows()) {
    throw ShapeError("cannot multiply " + shape_string(a) + " by " + shape_string(w));
  }
  Matrix out(a.rows(), w.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto oi = out.row(i);
    for (std::size_t o = 0; o < w.rows(); ++o) {
      const double s = a(i, o);
      if (s == 0.0) continue;
      auto wo = w.row(o);
      for (std::size_t k = 0; k < oi.size(); ++k) oi[k] += s * wo[k];
    }
  }
  return out;
}

/// aᵀ · x: (B×out)ᵀ by (B×in) -> out×in. Sums over the batch in row order.
inline Matrix matmul_lhs_transposed(const Matrix& a, const Matrix& x) {
  if (a.rows() != x.rows()) {
    throw ShapeError("cannot multiply transpose of " + shape_string(a) + " by " + shape_string(x));
  }
  Matrix out(a.cols(), x.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto xi = x.row(i);
    for (std::size_t o = 0; o < a.cols(); ++o) {
      const double s = a(i, o);
      if (s == 0.0) continue;
      auto oo = out.row(o);
      for (std::size_t k = 0; k < xi.size(); ++k) oo[k] += s * xi[k];
    }
  }
  return out;
}

/// Named parameter-shaped tensor; the unit of GradientSet and optimizer state.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const Tensor&) const = default;
};

}  // namespace nfc
