// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode automatic differentiation over row-major matrices.
//
// A Tape records every operation as a node holding its value and, when any
// input requires a gradient, a closure that pushes the node's output
// gradient into its inputs. Parameter leaves point at externally owned
// storage: their values are not copied, and their gradients accumulate
// directly into caller-provided buffers. A leaf registered without a
// gradient buffer is frozen, and nothing upstream of only-frozen inputs
// records a backward closure.

#ifndef LATENTREC_MODEL_AUTODIFF_HPP_
#define LATENTREC_MODEL_AUTODIFF_HPP_

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "common/error.hpp"
#include "model/kernels.hpp"
#include "model/matrix.hpp"

namespace latentrec::ad {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix<T>& out_grad)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Matrix<T> value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
  }

  // A leaf aliasing `value`. Gradients accumulate into `grad` when it is
  // non-null and the tape records; otherwise the leaf is frozen.
  Var parameter(const Matrix<T>* value, Matrix<T>* grad) {
    Node n;
    n.ext = value;
    n.ext_grad = record_ ? grad : nullptr;
    n.needs_grad = n.ext_grad != nullptr;
    return push(std::move(n));
  }

  Var make(Matrix<T> value, std::span<const Var> inputs, Backward back) {
    Node n;
    n.value = std::move(value);
    if (record_) {
      for (Var v : inputs) {
        if (needs_grad(v)) {
          n.needs_grad = true;
          break;
        }
      }
      if (n.needs_grad) n.back = std::move(back);
    }
    return push(std::move(n));
  }
  Var make(Matrix<T> value, std::initializer_list<Var> inputs, Backward back) {
    return make(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(back));
  }

  const Matrix<T>& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ext ? *n.ext : n.value;
  }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  // Gradient buffer of v, allocated (zeroed) on first use.
  Matrix<T>& grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.ext_grad) return *n.ext_grad;
    if (n.grad.empty()) {
      const Matrix<T>& val = value(v);
      n.grad = Matrix<T>(val.rows, val.cols);
    }
    return n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 loss and runs the closures in
  // reverse creation order.
  void backward(Var loss) {
    if (!record_) {
      throw Error(ErrorKind::kState, "autodiff", "backward on a non-recording tape");
    }
    const Matrix<T>& lv = value(loss);
    if (lv.rows != 1 || lv.cols != 1) {
      throw Error(ErrorKind::kInvalidArgument, "autodiff", "loss must be a 1x1 matrix");
    }
    if (!std::isfinite(lv.data[0])) {
      throw Error(ErrorKind::kNumeric, "autodiff", "non-finite loss");
    }
    if (!needs_grad(loss)) return;
    grad(loss).data[0] += T(1);
    for (int id = loss.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.needs_grad || !n.back || n.grad.empty()) continue;
      n.back(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* ext = nullptr;
    Matrix<T> grad;
    Matrix<T>* ext_grad = nullptr;
    bool needs_grad = false;
    Backward back;
  };

  Var push(Node n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  bool record_;
  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// out[i] = table[ids[i]]
template <typename T>
Var gather_rows(Tape<T>& tape, Var table, std::vector<int> ids) {
  const Matrix<T>& tv = tape.value(table);
  Matrix<T> out(static_cast<int>(ids.size()), tv.cols);
  for (int i = 0; i < out.rows; ++i) {
    std::copy(tv.row(ids[i]), tv.row(ids[i]) + tv.cols, out.row(i));
  }
  return tape.make(std::move(out), {table},
                   [table, ids = std::move(ids)](Tape<T>& t, const Matrix<T>& g) {
                     Matrix<T>& gt = t.grad(table);
                     for (int i = 0; i < g.rows; ++i) {
                       T* dst = gt.row(ids[i]);
                       const T* src = g.row(i);
                       for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
                     }
                   });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Matrix<T>& av = tape.value(a);
  const Matrix<T>& bv = tape.value(b);
  if (av.rows != bv.rows || av.cols != bv.cols) {
    throw Error(ErrorKind::kInvalidArgument, "autodiff", "add: shape mismatch");
  }
  Matrix<T> out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return tape.make(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    for (Var v : {a, b}) {
      if (!t.needs_grad(v)) continue;
      Matrix<T>& gv = t.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv.data[i] += g.data[i];
    }
  });
}

template <typename T>
Var concat_rows(Tape<T>& tape, std::vector<Var> parts) {
  int rows = 0;
  int cols = -1;
  for (Var p : parts) {
    const Matrix<T>& pv = tape.value(p);
    if (pv.rows == 0) continue;
    if (cols >= 0 && pv.cols != cols) {
      throw Error(ErrorKind::kInvalidArgument, "autodiff", "concat_rows: column mismatch");
    }
    cols = pv.cols;
    rows += pv.rows;
  }
  Matrix<T> out(rows, std::max(cols, 0));
  int at = 0;
  for (Var p : parts) {
    const Matrix<T>& pv = tape.value(p);
    std::copy(pv.data.begin(), pv.data.end(), out.data.begin() + std::size_t(at) * out.cols);
    at += pv.rows;
  }
  std::span<const Var> inputs(parts.data(), parts.size());
  return tape.make(std::move(out), inputs,
                   [parts](Tape<T>& t, const Matrix<T>& g) {
                     int offset = 0;
                     for (Var p : parts) {
                       const int r = t.value(p).rows;
                       if (r > 0 && t.needs_grad(p)) {
                         Matrix<T>& gp = t.grad(p);
                         const T* src = g.row(offset);
                         for (std::size_t i = 0; i < gp.size(); ++i) gp.data[i] += src[i];
                       }
                       offset += r;
                     }
                   });
}

template <typename T>
Var slice_rows(Tape<T>& tape, Var a, int start, int count) {
  const Matrix<T>& av = tape.value(a);
  if (start < 0 || count < 0 || start + count > av.rows) {
    throw Error(ErrorKind::kInvalidArgument, "autodiff", "slice_rows: out of range");
  }
  Matrix<T> out(count, av.cols);
  std::copy(av.row(start), av.row(start) + std::size_t(count) * av.cols, out.data.begin());
  return tape.make(std::move(out), {a}, [a, start](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& ga = t.grad(a);
    T* dst = ga.row(start);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g.data[i];
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var a, T c) {
  Matrix<T> out = tape.value(a);
  for (T& v : out.data) v *= c;
  return tape.make(std::move(out), {a}, [a, c](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data[i] += c * g.data[i];
  });
}

// Sum of all entries as a 1x1 matrix.
template <typename T>
Var sum(Tape<T>& tape, Var a) {
  Matrix<T> out(1, 1);
  for (T v : tape.value(a).data) out.data[0] += v;
  return tape.make(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& ga = t.grad(a);
    for (T& v : ga.data) v += g.data[0];
  });
}

// Sum of 1x1 scalars in order.
template <typename T>
Var sum_scalars(Tape<T>& tape, std::vector<Var> terms) {
  Matrix<T> out(1, 1);
  for (Var v : terms) out.data[0] += tape.value(v).data[0];
  std::span<const Var> inputs(terms.data(), terms.size());
  return tape.make(std::move(out), inputs, [terms](Tape<T>& t, const Matrix<T>& g) {
    for (Var v : terms) {
      if (t.needs_grad(v)) t.grad(v).data[0] += g.data[0];
    }
  });
}

template <typename T>
Var layer_norm(Tape<T>& tape, Var x, Var gain, Var bias) {
  const Matrix<T>& xv = tape.value(x);
  const Matrix<T>& gv = tape.value(gain);
  const Matrix<T>& bv = tape.value(bias);
  Matrix<T> out(xv.rows, xv.cols);
  std::vector<T> stats(std::size_t(xv.rows) * 2);
  for (int i = 0; i < xv.rows; ++i) {
    kernels::layer_norm_row(xv.row(i), xv.cols, gv.data.data(), bv.data.data(), out.row(i),
                            &stats[2 * i], &stats[2 * i + 1]);
  }
  return tape.make(std::move(out), {x, gain, bias},
                   [x, gain, bias, stats = std::move(stats)](Tape<T>& t, const Matrix<T>& g) {
                     const Matrix<T>& xv = t.value(x);
                     const Matrix<T>& gv = t.value(gain);
                     T* dx = t.needs_grad(x) ? t.grad(x).data.data() : nullptr;
                     T* dg = t.needs_grad(gain) ? t.grad(gain).data.data() : nullptr;
                     T* db = t.needs_grad(bias) ? t.grad(bias).data.data() : nullptr;
                     for (int i = 0; i < xv.rows; ++i) {
                       kernels::layer_norm_row_backward(
                           xv.row(i), g.row(i), xv.cols, gv.data.data(), stats[2 * i],
                           stats[2 * i + 1], dx ? dx + std::size_t(i) * xv.cols : nullptr, dg, db);
                     }
                   });
}

// x[n x k] * w[k x m] + b[1 x m]
template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, Var b) {
  const Matrix<T>& xv = tape.value(x);
  const Matrix<T>& wv = tape.value(w);
  const Matrix<T>& bv = tape.value(b);
  if (xv.cols != wv.rows || bv.cols != wv.cols) {
    throw Error(ErrorKind::kInvalidArgument, "autodiff", "linear: shape mismatch");
  }
  Matrix<T> out(xv.rows, wv.cols);
  kernels::linear_forward(xv.data.data(), xv.rows, xv.cols, wv.data.data(), bv.data.data(),
                          wv.cols, out.data.data());
  return tape.make(std::move(out), {x, w, b}, [x, w, b](Tape<T>& t, const Matrix<T>& g) {
    const Matrix<T>& xv = t.value(x);
    const Matrix<T>& wv = t.value(w);
    kernels::linear_backward(xv.data.data(), g.data.data(), xv.rows, xv.cols, wv.data.data(),
                             wv.cols, t.needs_grad(x) ? t.grad(x).data.data() : nullptr,
                             t.needs_grad(w) ? t.grad(w).data.data() : nullptr,
                             t.needs_grad(b) ? t.grad(b).data.data() : nullptr);
  });
}

template <typename T>
Var gelu(Tape<T>& tape, Var x) {
  Matrix<T> out = tape.value(x);
  for (T& v : out.data) v = kernels::gelu(v);
  return tape.make(std::move(out), {x}, [x](Tape<T>& t, const Matrix<T>& g) {
    const Matrix<T>& xv = t.value(x);
    Matrix<T>& gx = t.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] * kernels::gelu_grad(xv.data[i]);
  });
}

// Causal multi-head attention. Query row i sits at absolute position
// q_offset + i and attends to key rows [0, q_offset + i]. Keys and values
// are given as row chunks (a growing cache) and concatenated logically.
template <typename T>
Var attention(Tape<T>& tape, Var q, const std::vector<Var>& k_chunks,
              const std::vector<Var>& v_chunks, int n_heads, int q_offset) {
  const Matrix<T>& qv = tape.value(q);
  const int d = qv.cols;
  int total = 0;
  for (Var k : k_chunks) total += tape.value(k).rows;
  if (q_offset + qv.rows > total) {
    throw Error(ErrorKind::kInvalidArgument, "autodiff", "attention: query beyond keys");
  }
  Matrix<T> keys(total, d);
  Matrix<T> values(total, d);
  {
    int at = 0;
    for (std::size_t c = 0; c < k_chunks.size(); ++c) {
      const Matrix<T>& kc = tape.value(k_chunks[c]);
      const Matrix<T>& vc = tape.value(v_chunks[c]);
      std::copy(kc.data.begin(), kc.data.end(), keys.row(at));
      std::copy(vc.data.begin(), vc.data.end(), values.row(at));
      at += kc.rows;
    }
  }
  Matrix<T> out(qv.rows, d);
  std::vector<std::size_t> prob_offset(qv.rows);
  std::size_t prob_total = 0;
  for (int i = 0; i < qv.rows; ++i) {
    prob_offset[i] = prob_total;
    prob_total += std::size_t(n_heads) * (q_offset + i + 1);
  }
  std::vector<T> probs(tape.recording() ? prob_total : 0);
  for (int i = 0; i < qv.rows; ++i) {
    kernels::attention_row(qv.row(i), keys.data.data(), values.data.data(), q_offset + i + 1, d,
                           n_heads, out.row(i),
                           probs.empty() ? nullptr : probs.data() + prob_offset[i]);
  }
  std::vector<Var> inputs{q};
  inputs.insert(inputs.end(), k_chunks.begin(), k_chunks.end());
  inputs.insert(inputs.end(), v_chunks.begin(), v_chunks.end());
  return tape.make(
      std::move(out), std::span<const Var>(inputs.data(), inputs.size()),
      [q, k_chunks, v_chunks, n_heads, q_offset, keys = std::move(keys),
       values = std::move(values), probs = std::move(probs),
       prob_offset = std::move(prob_offset)](Tape<T>& t, const Matrix<T>& g) {
        const Matrix<T>& qv = t.value(q);
        const int d = qv.cols;
        Matrix<T> dkeys(keys.rows, d);
        Matrix<T> dvalues(values.rows, d);
        T* dq = t.needs_grad(q) ? t.grad(q).data.data() : nullptr;
        for (int i = 0; i < qv.rows; ++i) {
          kernels::attention_row_backward(qv.row(i), keys.data.data(), values.data.data(),
                                          q_offset + i + 1, d, n_heads,
                                          probs.data() + prob_offset[i], g.row(i),
                                          dq ? dq + std::size_t(i) * d : nullptr,
                                          dkeys.data.data(), dvalues.data.data());
        }
        int at = 0;
        for (std::size_t c = 0; c < k_chunks.size(); ++c) {
          const int rows = t.value(k_chunks[c]).rows;
          for (auto [chunk, src] : {std::pair{k_chunks[c], &dkeys}, std::pair{v_chunks[c], &dvalues}}) {
            if (!t.needs_grad(chunk) || rows == 0) continue;
            Matrix<T>& gc = t.grad(chunk);
            const T* s = src->row(at);
            for (std::size_t j = 0; j < gc.size(); ++j) gc.data[j] += s[j];
          }
          at += rows;
        }
      });
}

// Per-row log-softmax probability of targets[i]; returns n x 1.
template <typename T>
Var pick_log_probs(Tape<T>& tape, Var logits, std::vector<int> targets) {
  const Matrix<T>& lv = tape.value(logits);
  if (static_cast<int>(targets.size()) != lv.rows) {
    throw Error(ErrorKind::kInvalidArgument, "autodiff", "pick_log_probs: target count");
  }
  Matrix<T> out(lv.rows, 1);
  std::vector<T> lse(lv.rows);
  for (int i = 0; i < lv.rows; ++i) {
    lse[i] = kernels::log_sum_exp_row(lv.row(i), lv.cols);
    out.data[i] = lv(i, targets[i]) - lse[i];
  }
  return tape.make(std::move(out), {logits},
                   [logits, targets = std::move(targets), lse = std::move(lse)](
                       Tape<T>& t, const Matrix<T>& g) {
                     const Matrix<T>& lv = t.value(logits);
                     Matrix<T>& gl = t.grad(logits);
                     for (int i = 0; i < lv.rows; ++i) {
                       const T gi = g.data[i];
                       const T* li = lv.row(i);
                       T* di = gl.row(i);
                       for (int j = 0; j < lv.cols; ++j) di[j] -= gi * std::exp(li[j] - lse[i]);
                       di[targets[i]] += gi;
                     }
                   });
}

// sum_i coef * f(exp(lp_i - old_i)) where f(r) = r * A, or the pessimistic
// PPO form min(r * A, clip(r, 1 - eps, 1 + eps) * A) when clip_eps > 0.
template <typename T>
Var ratio_surrogate(Tape<T>& tape, Var log_probs, std::vector<T> old_log_probs, T advantage,
                    T coef, T clip_eps) {
  const Matrix<T>& lp = tape.value(log_probs);
  if (static_cast<int>(old_log_probs.size()) != lp.rows) {
    throw Error(ErrorKind::kInvalidArgument, "autodiff", "ratio_surrogate: length mismatch");
  }
  Matrix<T> out(1, 1);
  std::vector<T> slope(lp.rows);
  for (int i = 0; i < lp.rows; ++i) {
    const T ratio = std::exp(lp.data[i] - old_log_probs[i]);
    if (!std::isfinite(ratio)) {
      throw Error(ErrorKind::kNumeric, "grpo", "non-finite probability ratio");
    }
    T term = ratio * advantage;
    slope[i] = ratio * advantage;
    if (clip_eps > T(0)) {
      const T clipped = std::clamp(ratio, T(1) - clip_eps, T(1) + clip_eps) * advantage;
      if (clipped < term) {
        term = clipped;
        slope[i] = T(0);
      }
    }
    out.data[0] += coef * term;
  }
  return tape.make(std::move(out), {log_probs},
                   [log_probs, coef, slope = std::move(slope)](Tape<T>& t, const Matrix<T>& g) {
                     Matrix<T>& gl = t.grad(log_probs);
                     for (std::size_t i = 0; i < slope.size(); ++i) {
                       gl.data[i] += g.data[0] * coef * slope[i];
                     }
                   });
}

// sum_i coef * (exp(ref_i - lp_i) - (ref_i - lp_i) - 1): the non-negative
// per-token KL(pi || pi_ref) estimator used by GRPO.
template <typename T>
Var kl_estimate(Tape<T>& tape, Var log_probs, std::vector<T> ref_log_probs, T coef) {
  const Matrix<T>& lp = tape.value(log_probs);
  Matrix<T> out(1, 1);
  for (int i = 0; i < lp.rows; ++i) {
    const T delta = ref_log_probs[i] - lp.data[i];
    out.data[0] += coef * (std::exp(delta) - delta - T(1));
  }
  return tape.make(std::move(out), {log_probs},
                   [log_probs, coef, ref = std::move(ref_log_probs)](Tape<T>& t,
                                                                     const Matrix<T>& g) {
                     const Matrix<T>& lp = t.value(log_probs);
                     Matrix<T>& gl = t.grad(log_probs);
                     for (int i = 0; i < lp.rows; ++i) {
                       const T delta = ref[i] - lp.data[i];
                       gl.data[i] += g.data[0] * coef * (T(1) - std::exp(delta));
                     }
                   });
}

}  // namespace latentrec::ad

#endif  // LATENTREC_MODEL_AUTODIFF_HPP_
