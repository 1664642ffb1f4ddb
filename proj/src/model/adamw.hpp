// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// AdamW with decoupled weight decay.

#ifndef LATENTREC_MODEL_ADAMW_HPP_
#define LATENTREC_MODEL_ADAMW_HPP_

#include <cmath>
#include <vector>

#include "model/transformer.hpp"

namespace latentrec {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

template <typename T>
class AdamW {
 public:
  explicit AdamW(AdamWConfig config) : config_(config) {}

  // Updates every parameter that has a gradient; others are untouched.
  void step(Model<T>& model, const Gradients<T>& grads) {
    auto& params = model.params();
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, double(t_));
    const T lr = T(config_.learning_rate);
    const T wd = T(config_.weight_decay);
    const T b1 = T(config_.beta1), b2 = T(config_.beta2);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!grads.has(static_cast<int>(i))) continue;
      auto& w = params[i].value.data;
      const auto& g = grads.grads[i].data;
      if (m_[i].empty()) {
        m_[i].assign(w.size(), T(0));
        v_[i].assign(w.size(), T(0));
      }
      for (std::size_t j = 0; j < w.size(); ++j) {
        m_[i][j] = b1 * m_[i][j] + (T(1) - b1) * g[j];
        v_[i][j] = b2 * v_[i][j] + (T(1) - b2) * g[j] * g[j];
        const T mhat = m_[i][j] / T(c1);
        const T vhat = v_[i][j] / T(c2);
        w[j] -= lr * (mhat / (std::sqrt(vhat) + T(config_.eps)) + wd * w[j]);
      }
    }
  }

  long steps() const { return t_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

 private:
  AdamWConfig config_;
  long t_ = 0;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
};

}  // namespace latentrec

#endif  // LATENTREC_MODEL_ADAMW_HPP_
