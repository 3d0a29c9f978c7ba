// Copyright 2026 The MNELM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Transformer building blocks with explicit backward passes.
//
// Every layer is templated on the scalar type: production models run in
// float, the finite-difference gradient checks in double. Forward passes are
// const and write activations into a caller-owned Cache (or skip caching when
// handed nullptr), so a trained network can serve concurrent readers.
// Backward passes accumulate into Parameter::grad and return the input
// gradient.

#ifndef MNELM_NN_H_
#define MNELM_NN_H_

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mnelm/rng.h"

namespace mnelm::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Matrix<T>::Zero(rows, cols)),
        grad(Matrix<T>::Zero(rows, cols)) {}

  void fill_normal(Rng& rng, double stddev) {
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      value.data()[i] = static_cast<T>(rng.normal() * stddev);
    }
  }
};

template <typename T>
class Linear {
 public:
  struct Cache {
    Matrix<T> input;
  };

  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng, double gain = 1.0,
         bool with_bias = true)
      : weight(name + ".weight", in, out),
        bias(name + ".bias", with_bias ? 1 : 0, out),
        has_bias_(with_bias) {
    weight.fill_normal(rng, gain / std::sqrt(static_cast<double>(in)));
  }

  Matrix<T> forward(const Matrix<T>& x, Cache* cache) const {
    if (cache) cache->input = x;
    Matrix<T> y = x * weight.value;
    if (has_bias_) y.rowwise() += bias.value.row(0);
    return y;
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    weight.grad.noalias() += cache.input.transpose() * dy;
    if (has_bias_) bias.grad.row(0) += dy.colwise().sum();
    return dy * weight.value.transpose();
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(weight);
    if (has_bias_) f(bias);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(weight);
    if (has_bias_) f(bias);
  }

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  bool has_bias_ = true;
};

template <typename T>
class LayerNorm {
 public:
  struct Cache {
    Matrix<T> normalized;
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(const std::string& name, int dim)
      : gain(name + ".gain", 1, dim), shift(name + ".shift", 1, dim) {
    gain.value.setOnes();
  }

  Matrix<T> forward(const Matrix<T>& x, Cache* cache) const {
    const Eigen::Index n = x.rows();
    const T d = static_cast<T>(x.cols());
    Matrix<T> xhat(x.rows(), x.cols());
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      T mean = x.row(i).sum() / d;
      auto centered = x.row(i).array() - mean;
      T var = centered.square().sum() / d;
      inv_std(i) = T(1) / std::sqrt(var + kEpsilon);
      xhat.row(i) = centered * inv_std(i);
    }
    Matrix<T> y = (xhat.array().rowwise() * gain.value.row(0).array()).matrix();
    y.rowwise() += shift.value.row(0);
    if (cache) {
      cache->normalized = std::move(xhat);
      cache->inv_std = std::move(inv_std);
    }
    return y;
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    const Matrix<T>& xhat = cache.normalized;
    gain.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
    shift.grad.row(0) += dy.colwise().sum();
    Matrix<T> dxhat = (dy.array().rowwise() * gain.value.row(0).array()).matrix();
    const T d = static_cast<T>(dy.cols());
    Matrix<T> dx(dy.rows(), dy.cols());
    for (Eigen::Index i = 0; i < dy.rows(); ++i) {
      T mean_dxhat = dxhat.row(i).sum() / d;
      T mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) / d;
      dx.row(i) = cache.inv_std(i) *
                  (dxhat.row(i).array() - mean_dxhat -
                   xhat.row(i).array() * mean_dxhat_xhat);
    }
    return dx;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(gain);
    f(shift);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(gain);
    f(shift);
  }

  static constexpr T kEpsilon = T(1e-5);

  Parameter<T> gain;
  Parameter<T> shift;
};

template <typename T>
class Embedding {
 public:
  Embedding() = default;
  Embedding(const std::string& name, int rows, int dim, Rng& rng, double stddev)
      : table(name + ".table", rows, dim) {
    table.fill_normal(rng, stddev);
  }

  // ids must be in [0, rows).
  Matrix<T> forward(std::span<const int> ids) const {
    Matrix<T> out(static_cast<Eigen::Index>(ids.size()), table.value.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = table.value.row(ids[i]);
    }
    return out;
  }

  // Rows 0..count-1, used for positions.
  Matrix<T> leading(Eigen::Index count) const {
    return table.value.topRows(count);
  }

  void backward(std::span<const int> ids, const Matrix<T>& dy) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      table.grad.row(ids[i]) += dy.row(static_cast<Eigen::Index>(i));
    }
  }

  void backward_leading(const Matrix<T>& dy) {
    table.grad.topRows(dy.rows()) += dy;
  }

  Eigen::Index rows() const { return table.value.rows(); }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(table);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    f(table);
  }

  Parameter<T> table;
};

// Row-wise softmax with the max subtracted for stability.
template <typename T>
void softmax_rows(Matrix<T>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    T mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

template <typename T>
class MultiHeadAttention {
 public:
  struct Cache {
    typename Linear<T>::Cache q_cache, k_cache, v_cache, out_cache;
    Matrix<T> q, k, v;
    std::vector<Matrix<T>> probs;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, int dim, int heads, Rng& rng,
                     double out_gain)
      : heads_(heads),
        query(name + ".query", dim, dim, rng),
        // A key bias shifts every score of a query by the same amount, which
        // softmax cancels, so keys carry no bias.
        key(name + ".key", dim, dim, rng, 1.0, false),
        value(name + ".value", dim, dim, rng),
        output(name + ".output", dim, dim, rng, out_gain) {}

  // Queries come from `x`, keys and values from `memory`. With `causal`,
  // query i sees memory positions 0..i only.
  Matrix<T> forward(const Matrix<T>& x, const Matrix<T>& memory, bool causal,
                    Cache* cache) const {
    Matrix<T> q = query.forward(x, cache ? &cache->q_cache : nullptr);
    Matrix<T> k = key.forward(memory, cache ? &cache->k_cache : nullptr);
    Matrix<T> v = value.forward(memory, cache ? &cache->v_cache : nullptr);
    const Eigen::Index dh = q.cols() / heads_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Matrix<T> context(q.rows(), q.cols());
    if (cache) cache->probs.resize(heads_);
    for (int h = 0; h < heads_; ++h) {
      Matrix<T> scores =
          (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) *
          scale;
      if (causal) {
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
          for (Eigen::Index j = i + 1; j < scores.cols(); ++j) {
            scores(i, j) = -std::numeric_limits<T>::infinity();
          }
        }
      }
      softmax_rows(scores);
      context.middleCols(h * dh, dh).noalias() =
          scores * v.middleCols(h * dh, dh);
      if (cache) cache->probs[h] = std::move(scores);
    }
    Matrix<T> out = output.forward(context, cache ? &cache->out_cache : nullptr);
    if (cache) {
      cache->q = std::move(q);
      cache->k = std::move(k);
      cache->v = std::move(v);
    }
    return out;
  }

  // Returns the gradients w.r.t. x and memory.
  std::pair<Matrix<T>, Matrix<T>> backward(const Cache& cache,
                                           const Matrix<T>& dy) {
    Matrix<T> dcontext = output.backward(cache.out_cache, dy);
    const Eigen::Index dh = cache.q.cols() / heads_;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    Matrix<T> dq(cache.q.rows(), cache.q.cols());
    Matrix<T> dk(cache.k.rows(), cache.k.cols());
    Matrix<T> dv(cache.v.rows(), cache.v.cols());
    for (int h = 0; h < heads_; ++h) {
      const Matrix<T>& p = cache.probs[h];
      auto dc = dcontext.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh).noalias() = p.transpose() * dc;
      Matrix<T> dp = dc * cache.v.middleCols(h * dh, dh).transpose();
      // Softmax Jacobian: ds = p * (dp - rowsum(dp * p)).
      Eigen::Matrix<T, Eigen::Dynamic, 1> inner =
          (dp.array() * p.array()).rowwise().sum();
      Matrix<T> ds =
          (p.array() * (dp.array().colwise() - inner.array())).matrix() * scale;
      dq.middleCols(h * dh, dh).noalias() = ds * cache.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() =
          ds.transpose() * cache.q.middleCols(h * dh, dh);
    }
    Matrix<T> dx = query.backward(cache.q_cache, dq);
    Matrix<T> dmemory = key.backward(cache.k_cache, dk);
    dmemory += value.backward(cache.v_cache, dv);
    return {std::move(dx), std::move(dmemory)};
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    query.for_each_parameter(f);
    key.for_each_parameter(f);
    value.for_each_parameter(f);
    output.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    query.for_each_parameter(f);
    key.for_each_parameter(f);
    value.for_each_parameter(f);
    output.for_each_parameter(f);
  }

  int heads_ = 1;
  Linear<T> query, key, value, output;
};

// tanh approximation of GELU; smooth everywhere, which the finite-difference
// checks rely on.
template <typename T>
struct Gelu {
  static constexpr T kC = T(0.7978845608028654);  // sqrt(2 / pi)
  static constexpr T kA = T(0.044715);

  static T value(T x) {
    return T(0.5) * x * (T(1) + std::tanh(kC * (x + kA * x * x * x)));
  }
  static T derivative(T x) {
    T t = std::tanh(kC * (x + kA * x * x * x));
    return T(0.5) * (T(1) + t) +
           T(0.5) * x * (T(1) - t * t) * kC * (T(1) + T(3) * kA * x * x);
  }
};

template <typename T>
class FeedForward {
 public:
  struct Cache {
    typename Linear<T>::Cache in_cache, out_cache;
    Matrix<T> pre_activation;
  };

  FeedForward() = default;
  FeedForward(const std::string& name, int dim, int hidden, Rng& rng,
              double out_gain)
      : in(name + ".in", dim, hidden, rng),
        out(name + ".out", hidden, dim, rng, out_gain) {}

  Matrix<T> forward(const Matrix<T>& x, Cache* cache) const {
    Matrix<T> pre = in.forward(x, cache ? &cache->in_cache : nullptr);
    Matrix<T> act = pre.unaryExpr([](T v) { return Gelu<T>::value(v); });
    if (cache) cache->pre_activation = std::move(pre);
    return out.forward(act, cache ? &cache->out_cache : nullptr);
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    Matrix<T> dact = out.backward(cache.out_cache, dy);
    Matrix<T> dpre =
        (dact.array() * cache.pre_activation.unaryExpr([](T v) {
          return Gelu<T>::derivative(v);
        }).array()).matrix();
    return in.backward(cache.in_cache, dpre);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    in.for_each_parameter(f);
    out.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    in.for_each_parameter(f);
    out.for_each_parameter(f);
  }

  Linear<T> in, out;
};

// Pre-norm encoder block: x + attn(ln(x)), then x + ff(ln(x)).
template <typename T>
class EncoderLayer {
 public:
  struct Cache {
    typename LayerNorm<T>::Cache ln1, ln2;
    typename MultiHeadAttention<T>::Cache attn;
    typename FeedForward<T>::Cache ff;
  };

  EncoderLayer() = default;
  EncoderLayer(const std::string& name, int dim, int heads, int ff_hidden,
               Rng& rng, double residual_gain)
      : ln1(name + ".ln1", dim),
        attn(name + ".self_attn", dim, heads, rng, residual_gain),
        ln2(name + ".ln2", dim),
        ff(name + ".ff", dim, ff_hidden, rng, residual_gain) {}

  Matrix<T> forward(const Matrix<T>& x, Cache* cache) const {
    Matrix<T> h = ln1.forward(x, cache ? &cache->ln1 : nullptr);
    Matrix<T> y = x + attn.forward(h, h, false, cache ? &cache->attn : nullptr);
    Matrix<T> g = ln2.forward(y, cache ? &cache->ln2 : nullptr);
    return y + ff.forward(g, cache ? &cache->ff : nullptr);
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dout) {
    Matrix<T> dy = dout + ln2.backward(cache.ln2, ff.backward(cache.ff, dout));
    auto [dq, dkv] = attn.backward(cache.attn, dy);
    dq += dkv;
    return dy + ln1.backward(cache.ln1, dq);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    ln1.for_each_parameter(f);
    attn.for_each_parameter(f);
    ln2.for_each_parameter(f);
    ff.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    ln1.for_each_parameter(f);
    attn.for_each_parameter(f);
    ln2.for_each_parameter(f);
    ff.for_each_parameter(f);
  }

  LayerNorm<T> ln1;
  MultiHeadAttention<T> attn;
  LayerNorm<T> ln2;
  FeedForward<T> ff;
};

// Pre-norm decoder block: causal self-attention, cross-attention over the
// encoder output, feed-forward.
template <typename T>
class DecoderLayer {
 public:
  struct Cache {
    typename LayerNorm<T>::Cache ln1, ln2, ln3;
    typename MultiHeadAttention<T>::Cache self_attn, cross_attn;
    typename FeedForward<T>::Cache ff;
  };

  DecoderLayer() = default;
  DecoderLayer(const std::string& name, int dim, int heads, int ff_hidden,
               Rng& rng, double residual_gain)
      : ln1(name + ".ln1", dim),
        self_attn(name + ".self_attn", dim, heads, rng, residual_gain),
        ln2(name + ".ln2", dim),
        cross_attn(name + ".cross_attn", dim, heads, rng, residual_gain),
        ln3(name + ".ln3", dim),
        ff(name + ".ff", dim, ff_hidden, rng, residual_gain) {}

  Matrix<T> forward(const Matrix<T>& x, const Matrix<T>& memory,
                    Cache* cache) const {
    Matrix<T> h = ln1.forward(x, cache ? &cache->ln1 : nullptr);
    Matrix<T> y =
        x + self_attn.forward(h, h, true, cache ? &cache->self_attn : nullptr);
    Matrix<T> g = ln2.forward(y, cache ? &cache->ln2 : nullptr);
    Matrix<T> z = y + cross_attn.forward(g, memory, false,
                                         cache ? &cache->cross_attn : nullptr);
    Matrix<T> u = ln3.forward(z, cache ? &cache->ln3 : nullptr);
    return z + ff.forward(u, cache ? &cache->ff : nullptr);
  }

  // Returns dx; the memory gradient is added into `dmemory`.
  Matrix<T> backward(const Cache& cache, const Matrix<T>& dout,
                     Matrix<T>& dmemory) {
    Matrix<T> dz = dout + ln3.backward(cache.ln3, ff.backward(cache.ff, dout));
    auto [dg, dmem] = cross_attn.backward(cache.cross_attn, dz);
    dmemory += dmem;
    Matrix<T> dy = dz + ln2.backward(cache.ln2, dg);
    auto [dq, dkv] = self_attn.backward(cache.self_attn, dy);
    dq += dkv;
    return dy + ln1.backward(cache.ln1, dq);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    ln1.for_each_parameter(f);
    self_attn.for_each_parameter(f);
    ln2.for_each_parameter(f);
    cross_attn.for_each_parameter(f);
    ln3.for_each_parameter(f);
    ff.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    ln1.for_each_parameter(f);
    self_attn.for_each_parameter(f);
    ln2.for_each_parameter(f);
    cross_attn.for_each_parameter(f);
    ln3.for_each_parameter(f);
    ff.for_each_parameter(f);
  }

  LayerNorm<T> ln1;
  MultiHeadAttention<T> self_attn;
  LayerNorm<T> ln2;
  MultiHeadAttention<T> cross_attn;
  LayerNorm<T> ln3;
  FeedForward<T> ff;
};

// Mean token cross-entropy of `logits` against `targets`. When `dlogits` is
// non-null it receives d(loss)/d(logits).
template <typename T>
T cross_entropy(const Matrix<T>& logits, std::span<const int> targets,
                Matrix<T>* dlogits) {
  const Eigen::Index n = logits.rows();
  if (n == 0) {
    if (dlogits) dlogits->resize(0, logits.cols());
    return T(0);
  }
  Matrix<T> probs = logits;
  softmax_rows(probs);
  T loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    T row_max = logits.row(i).maxCoeff();
    T log_sum = std::log((logits.row(i).array() - row_max).exp().sum()) + row_max;
    loss += log_sum - logits(i, targets[i]);
  }
  loss /= static_cast<T>(n);
  if (dlogits) {
    *dlogits = std::move(probs);
    for (Eigen::Index i = 0; i < n; ++i) (*dlogits)(i, targets[i]) -= T(1);
    *dlogits /= static_cast<T>(n);
  }
  return loss;
}

// Index of the largest entry in row `i`; ties resolve to the lowest index.
template <typename T>
int argmax_row(const Matrix<T>& m, Eigen::Index i) {
  int best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(i, j) > m(i, best)) best = static_cast<int>(j);
  }
  return best;
}

}  // namespace mnelm::nn

#endif  // MNELM_NN_H_
