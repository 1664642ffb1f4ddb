// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Row kernels shared by the taped (training) forward and the cached
// (inference) forward. Every output row is computed from its own inputs in
// a fixed operation order, independent of how many rows are processed per
// call, so extending a cached prefix one row at a time reproduces the
// full-sequence forward bit for bit.

#ifndef LATENTREC_MODEL_KERNELS_HPP_
#define LATENTREC_MODEL_KERNELS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace latentrec::kernels {

template <typename T>
constexpr T kLayerNormEps = T(1e-5);

// y[n x m] = x[n x k] * w[k x m] + b. b may be null.
template <typename T>
void linear_forward(const T* x, int n, int k, const T* w, const T* b, int m,
                    T* y) {
  for (int i = 0; i < n; ++i) {
    const T* xi = x + std::size_t(i) * k;
    T* yi = y + std::size_t(i) * m;
    if (b) {
      std::copy(b, b + m, yi);
    } else {
      std::fill(yi, yi + m, T(0));
    }
    for (int p = 0; p < k; ++p) {
      const T a = xi[p];
      const T* wp = w + std::size_t(p) * m;
      for (int j = 0; j < m; ++j) yi[j] += a * wp[j];
    }
  }
}

// Accumulates dx += dy * w^T, dw += x^T * dy, db += colsum(dy).
// Null outputs are skipped.
template <typename T>
void linear_backward(const T* x, const T* dy, int n, int k, const T* w, int m,
                     T* dx, T* dw, T* db) {
  if (dx) {
    thread_local std::vector<T> wt;
    wt.resize(std::size_t(k) * m);
    for (int p = 0; p < k; ++p)
      for (int j = 0; j < m; ++j) wt[std::size_t(j) * k + p] = w[std::size_t(p) * m + j];
    for (int i = 0; i < n; ++i) {
      const T* dyi = dy + std::size_t(i) * m;
      T* dxi = dx + std::size_t(i) * k;
      for (int j = 0; j < m; ++j) {
        const T g = dyi[j];
        const T* wj = wt.data() + std::size_t(j) * k;
        for (int p = 0; p < k; ++p) dxi[p] += g * wj[p];
      }
    }
  }
  if (dw) {
    for (int i = 0; i < n; ++i) {
      const T* xi = x + std::size_t(i) * k;
      const T* dyi = dy + std::size_t(i) * m;
      for (int p = 0; p < k; ++p) {
        const T a = xi[p];
        T* dwp = dw + std::size_t(p) * m;
        for (int j = 0; j < m; ++j) dwp[j] += a * dyi[j];
      }
    }
  }
  if (db) {
    for (int i = 0; i < n; ++i) {
      const T* dyi = dy + std::size_t(i) * m;
      for (int j = 0; j < m; ++j) db[j] += dyi[j];
    }
  }
}

// Layer normalization of one row. Writes mean and 1/std when requested.
template <typename T>
void layer_norm_row(const T* x, int d, const T* gain, const T* bias, T* y,
                    T* mean_out = nullptr, T* rstd_out = nullptr) {
  T mean = 0;
  for (int j = 0; j < d; ++j) mean += x[j];
  mean /= T(d);
  T var = 0;
  for (int j = 0; j < d; ++j) {
    const T c = x[j] - mean;
    var += c * c;
  }
  var /= T(d);
  const T rstd = T(1) / std::sqrt(var + kLayerNormEps<T>);
  for (int j = 0; j < d; ++j) y[j] = (x[j] - mean) * rstd * gain[j] + bias[j];
  if (mean_out) *mean_out = mean;
  if (rstd_out) *rstd_out = rstd;
}

template <typename T>
void layer_norm_row_backward(const T* x, const T* dy, int d, const T* gain,
                             T mean, T rstd, T* dx, T* dgain, T* dbias) {
  T sum_dxhat = 0;
  T sum_dxhat_xhat = 0;
  for (int j = 0; j < d; ++j) {
    const T xhat = (x[j] - mean) * rstd;
    const T dxhat = dy[j] * gain[j];
    sum_dxhat += dxhat;
    sum_dxhat_xhat += dxhat * xhat;
    if (dgain) dgain[j] += dy[j] * xhat;
    if (dbias) dbias[j] += dy[j];
  }
  if (!dx) return;
  const T inv_d = T(1) / T(d);
  for (int j = 0; j < d; ++j) {
    const T xhat = (x[j] - mean) * rstd;
    const T dxhat = dy[j] * gain[j];
    dx[j] += rstd * (dxhat - sum_dxhat * inv_d - xhat * sum_dxhat_xhat * inv_d);
  }
}

// tanh-approximated GELU.
template <typename T>
inline T gelu(T x) {
  const T c = T(0.7978845608028654);
  const T inner = c * (x + T(0.044715) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(inner));
}

template <typename T>
inline T gelu_grad(T x) {
  const T c = T(0.7978845608028654);
  const T inner = c * (x + T(0.044715) * x * x * x);
  const T t = std::tanh(inner);
  return T(0.5) * (T(1) + t) +
         T(0.5) * x * (T(1) - t * t) * c * (T(1) + T(3) * T(0.044715) * x * x);
}

// Multi-head attention for one query row against `count` key/value rows
// (row stride d). probs, when given, receives n_heads x count weights.
template <typename T>
void attention_row(const T* q, const T* keys, const T* values, int count,
                   int d, int n_heads, T* out, T* probs) {
  const int hd = d / n_heads;
  const T scale = T(1) / std::sqrt(T(hd));
  thread_local std::vector<T> scores;
  scores.resize(std::size_t(count));
  std::fill(out, out + d, T(0));
  for (int h = 0; h < n_heads; ++h) {
    const T* qh = q + h * hd;
    T max_score = -std::numeric_limits<T>::infinity();
    for (int j = 0; j < count; ++j) {
      const T* kj = keys + std::size_t(j) * d + h * hd;
      T s = 0;
      for (int t = 0; t < hd; ++t) s += qh[t] * kj[t];
      s *= scale;
      scores[j] = s;
      max_score = std::max(max_score, s);
    }
    T total = 0;
    for (int j = 0; j < count; ++j) {
      scores[j] = std::exp(scores[j] - max_score);
      total += scores[j];
    }
    T* oh = out + h * hd;
    for (int j = 0; j < count; ++j) {
      const T p = scores[j] / total;
      if (probs) probs[std::size_t(h) * count + j] = p;
      const T* vj = values + std::size_t(j) * d + h * hd;
      for (int t = 0; t < hd; ++t) oh[t] += p * vj[t];
    }
  }
}

// Backward of attention_row given the saved probabilities.
template <typename T>
void attention_row_backward(const T* q, const T* keys, const T* values,
                            int count, int d, int n_heads, const T* probs,
                            const T* dout, T* dq, T* dkeys, T* dvalues) {
  const int hd = d / n_heads;
  const T scale = T(1) / std::sqrt(T(hd));
  thread_local std::vector<T> dp;
  dp.resize(std::size_t(count));
  for (int h = 0; h < n_heads; ++h) {
    const T* ph = probs + std::size_t(h) * count;
    const T* doh = dout + h * hd;
    T dot_pdp = 0;
    for (int j = 0; j < count; ++j) {
      const T* vj = values + std::size_t(j) * d + h * hd;
      T s = 0;
      for (int t = 0; t < hd; ++t) s += doh[t] * vj[t];
      dp[j] = s;
      dot_pdp += ph[j] * s;
      if (dvalues) {
        T* dvj = dvalues + std::size_t(j) * d + h * hd;
        for (int t = 0; t < hd; ++t) dvj[t] += ph[j] * doh[t];
      }
    }
    const T* qh = q + h * hd;
    for (int j = 0; j < count; ++j) {
      const T ds = ph[j] * (dp[j] - dot_pdp) * scale;
      const T* kj = keys + std::size_t(j) * d + h * hd;
      if (dq) {
        T* dqh = dq + h * hd;
        for (int t = 0; t < hd; ++t) dqh[t] += ds * kj[t];
      }
      if (dkeys) {
        T* dkj = dkeys + std::size_t(j) * d + h * hd;
        for (int t = 0; t < hd; ++t) dkj[t] += ds * qh[t];
      }
    }
  }
}

// log(sum(exp(x))) of one row.
template <typename T>
T log_sum_exp_row(const T* x, int n) {
  T m = -std::numeric_limits<T>::infinity();
  for (int j = 0; j < n; ++j) m = std::max(m, x[j]);
  T s = 0;
  for (int j = 0; j < n; ++j) s += std::exp(x[j] - m);
  return m + std::log(s);
}

}  // namespace latentrec::kernels

#endif  // LATENTREC_MODEL_KERNELS_HPP_
