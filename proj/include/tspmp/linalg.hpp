// SPDX-License-Identifier: MIT
#pragma once

#include <cstddef>
#include <vector>

#include "tspmp/errors.hpp"

namespace tspmp {

/// Dense vector, sized by the problem dimensions (always small here).
using Vec = std::vector<double>;

/// Dense row-major matrix for Jacobians of small systems.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot product of mismatched vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// y = M x
inline Vec matvec(const Mat& m, const Vec& x) {
  if (x.size() != m.cols) throw DimensionMismatch("matrix-vector size mismatch");
  Vec y(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) y[i] += m.at(i, j) * x[j];
  }
  return y;
}

/// y = M^T x
inline Vec matTvec(const Mat& m, const Vec& x) {
  if (x.size() != m.rows) throw DimensionMismatch("transposed matrix-vector size mismatch");
  Vec y(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) y[j] += m.at(i, j) * x[i];
  }
  return y;
}

/// y += a * x
inline void axpy(double a, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw DimensionMismatch("axpy size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double inf_norm(const Vec& x) {
  double m = 0.0;
  for (double v : x) {
    const double a = v < 0 ? -v : v;
    if (a > m) m = a;
  }
  return m;
}

}  // namespace tspmp
