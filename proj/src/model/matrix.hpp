// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_MODEL_MATRIX_HPP_
#define LATENTREC_MODEL_MATRIX_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace latentrec {

// Dense row-major matrix. Vectors are 1 x n matrices.
template <typename T>
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * c, T(0)) {}

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  T* row(int i) { return data.data() + std::size_t(i) * cols; }
  const T* row(int i) const { return data.data() + std::size_t(i) * cols; }
  std::span<T> row_span(int i) { return {row(i), std::size_t(cols)}; }
  std::span<const T> row_span(int i) const { return {row(i), std::size_t(cols)}; }
  T& operator()(int i, int j) { return data[std::size_t(i) * cols + j]; }
  T operator()(int i, int j) const { return data[std::size_t(i) * cols + j]; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  bool all_finite() const {
    return std::all_of(data.begin(), data.end(),
                       [](T v) { return std::isfinite(v); });
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = U(data[i]);
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
  }
};

}  // namespace latentrec

#endif  // LATENTREC_MODEL_MATRIX_HPP_
