#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "rffr/nn/tensor.hpp"

namespace rffr::nn {

// Layers keep no forward state. Training passes a Cache to forward() and hands
// it back to backward(), which accumulates into Parameter::grad and returns the
// gradient with respect to the layer input.

enum class Init { kXavierUniform, kTruncatedNormal };

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(int in, int out) : weight(in, out, /*decay=*/true), bias(1, out) {}

  void init(Init scheme, Rng& rng) {
    if (scheme == Init::kXavierUniform) {
      fill_xavier_uniform(weight.value, rng);
    } else {
      fill_truncated_normal(weight.value, 0.02, rng);
    }
    bias.value.setZero();
  }

  int in_features() const { return static_cast<int>(weight.value.rows()); }
  int out_features() const { return static_cast<int>(weight.value.cols()); }

  Matrix<T> forward(const Matrix<T>& x) const {
    Matrix<T> y = x * weight.value;
    y.rowwise() += bias.value.row(0);
    return y;
  }

  Matrix<T> backward(const Matrix<T>& x, const Matrix<T>& dy) {
    weight.grad.noalias() += x.transpose() * dy;
    bias.grad.row(0) += dy.colwise().sum();
    return dy * weight.value.transpose();
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", weight);
    f(prefix + "bias", bias);
  }

  Parameter<T> weight;  // in x out
  Parameter<T> bias;    // 1 x out
};

template <class T>
class LayerNorm {
 public:
  struct Cache {
    Matrix<T> xhat;
    ColumnVector<T> rstd;
  };

  LayerNorm() = default;
  explicit LayerNorm(int dim, double eps = 1e-6) : gamma(1, dim), beta(1, dim), eps_(eps) {
    gamma.value.setOnes();
  }

  Matrix<T> forward(const Matrix<T>& x, Cache* cache = nullptr) const {
    const auto n = x.cols();
    ColumnVector<T> mean = x.rowwise().mean();
    Matrix<T> centered = x.colwise() - mean;
    ColumnVector<T> var = centered.array().square().rowwise().sum() / static_cast<T>(n);
    ColumnVector<T> rstd = (var.array() + static_cast<T>(eps_)).rsqrt();
    Matrix<T> xhat = centered.array().colwise() * rstd.array();
    Matrix<T> y = xhat.array().rowwise() * gamma.value.row(0).array();
    y.rowwise() += beta.value.row(0);
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->rstd = std::move(rstd);
    }
    return y;
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    const auto n = static_cast<T>(dy.cols());
    gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();
    Matrix<T> dxhat = dy.array().rowwise() * gamma.value.row(0).array();
    ColumnVector<T> sum_d = dxhat.rowwise().sum();
    ColumnVector<T> sum_dx = (dxhat.array() * cache.xhat.array()).rowwise().sum();
    Matrix<T> dx = (dxhat * n).colwise() - sum_d;
    dx -= (cache.xhat.array().colwise() * sum_dx.array()).matrix();
    dx = dx.array().colwise() * (cache.rstd.array() / n);
    return dx;
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    f(prefix + "weight", gamma);
    f(prefix + "bias", beta);
  }

  Parameter<T> gamma;
  Parameter<T> beta;

 private:
  double eps_ = 1e-6;
};

template <class T>
Matrix<T> gelu(const Matrix<T>& x) {
  return x.unaryExpr([](T v) {
    return static_cast<T>(0.5) * v * (static_cast<T>(1) + std::erf(v / std::numbers::sqrt2_v<T>));
  });
}

template <class T>
Matrix<T> gelu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
  const T inv_sqrt_2pi = static_cast<T>(1.0 / std::sqrt(2.0 * std::numbers::pi));
  Matrix<T> d = x.unaryExpr([inv_sqrt_2pi](T v) {
    const T cdf = static_cast<T>(0.5) * (static_cast<T>(1) + std::erf(v / std::numbers::sqrt2_v<T>));
    return cdf + v * inv_sqrt_2pi * std::exp(static_cast<T>(-0.5) * v * v);
  });
  return d.cwiseProduct(dy);
}

/// Row-wise softmax.
template <class T>
Matrix<T> softmax_rows(const Matrix<T>& s) {
  Matrix<T> p = s.colwise() - s.rowwise().maxCoeff();
  p = p.array().exp();
  ColumnVector<T> sum = p.rowwise().sum();
  p = p.array().colwise() / sum.array();
  return p;
}

template <class T>
class MultiHeadAttention {
 public:
  struct Cache {
    Matrix<T> x;
    Matrix<T> qkv;
    std::vector<Matrix<T>> probs;
    Matrix<T> context;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(int dim, int heads) : qkv(dim, 3 * dim), proj(dim, dim), dim_(dim), heads_(heads) {}

  void init(Init scheme, Rng& rng) {
    qkv.init(scheme, rng);
    proj.init(scheme, rng);
  }

  Matrix<T> forward(const Matrix<T>& x, Cache* cache = nullptr) const {
    const int hd = dim_ / heads_;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
    Matrix<T> packed = qkv.forward(x);
    Matrix<T> context(x.rows(), dim_);
    if (cache) cache->probs.resize(static_cast<std::size_t>(heads_));
    for (int h = 0; h < heads_; ++h) {
      const auto q = packed.middleCols(h * hd, hd);
      const auto k = packed.middleCols(dim_ + h * hd, hd);
      const auto v = packed.middleCols(2 * dim_ + h * hd, hd);
      Matrix<T> scores = (q * k.transpose()) * scale;
      Matrix<T> p = softmax_rows<T>(scores);
      context.middleCols(h * hd, hd).noalias() = p * v;
      if (cache) cache->probs[static_cast<std::size_t>(h)] = std::move(p);
    }
    Matrix<T> out = proj.forward(context);
    if (cache) {
      cache->x = x;
      cache->qkv = std::move(packed);
      cache->context = std::move(context);
    }
    return out;
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    const int hd = dim_ / heads_;
    const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hd)));
    Matrix<T> dcontext = proj.backward(cache.context, dy);
    Matrix<T> dpacked(cache.qkv.rows(), cache.qkv.cols());
    for (int h = 0; h < heads_; ++h) {
      const auto q = cache.qkv.middleCols(h * hd, hd);
      const auto k = cache.qkv.middleCols(dim_ + h * hd, hd);
      const auto v = cache.qkv.middleCols(2 * dim_ + h * hd, hd);
      const Matrix<T>& p = cache.probs[static_cast<std::size_t>(h)];
      const auto dctx = dcontext.middleCols(h * hd, hd);
      Matrix<T> dp = dctx * v.transpose();
      dpacked.middleCols(2 * dim_ + h * hd, hd).noalias() = p.transpose() * dctx;
      ColumnVector<T> row_dot = (dp.array() * p.array()).rowwise().sum();
      Matrix<T> ds = (p.array() * (dp.colwise() - row_dot).array()).matrix() * scale;
      dpacked.middleCols(h * hd, hd).noalias() = ds * k;
      dpacked.middleCols(dim_ + h * hd, hd).noalias() = ds.transpose() * q;
    }
    return qkv.backward(cache.x, dpacked);
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    qkv.visit(prefix + "qkv.", f);
    proj.visit(prefix + "proj.", f);
  }

  Linear<T> qkv;
  Linear<T> proj;

 private:
  int dim_ = 0;
  int heads_ = 1;
};

/// Pre-norm transformer block: x + attn(ln(x)), then x + mlp(ln(x)).
template <class T>
class TransformerBlock {
 public:
  struct Cache {
    typename LayerNorm<T>::Cache ln1;
    typename MultiHeadAttention<T>::Cache attn;
    typename LayerNorm<T>::Cache ln2;
    Matrix<T> n2;
    Matrix<T> hidden;
    Matrix<T> activated;
  };

  TransformerBlock() = default;
  TransformerBlock(int dim, int heads, int mlp_ratio)
      : norm1(dim), attn(dim, heads), norm2(dim), fc1(dim, dim * mlp_ratio), fc2(dim * mlp_ratio, dim) {}

  void init(Init scheme, Rng& rng) {
    attn.init(scheme, rng);
    fc1.init(scheme, rng);
    fc2.init(scheme, rng);
  }

  Matrix<T> forward(const Matrix<T>& x, Cache* cache = nullptr) const {
    if (!cache) {
      Matrix<T> x1 = x + attn.forward(norm1.forward(x));
      return x1 + fc2.forward(gelu<T>(fc1.forward(norm2.forward(x1))));
    }
    Matrix<T> x1 = x + attn.forward(norm1.forward(x, &cache->ln1), &cache->attn);
    cache->n2 = norm2.forward(x1, &cache->ln2);
    cache->hidden = fc1.forward(cache->n2);
    cache->activated = gelu<T>(cache->hidden);
    return x1 + fc2.forward(cache->activated);
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    Matrix<T> dactivated = fc2.backward(cache.activated, dy);
    Matrix<T> dhidden = gelu_backward<T>(cache.hidden, dactivated);
    Matrix<T> dn2 = fc1.backward(cache.n2, dhidden);
    Matrix<T> dx1 = dy + norm2.backward(cache.ln2, dn2);
    Matrix<T> dn1 = attn.backward(cache.attn, dx1);
    return dx1 + norm1.backward(cache.ln1, dn1);
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    norm1.visit(prefix + "norm1.", f);
    attn.visit(prefix + "attn.", f);
    norm2.visit(prefix + "norm2.", f);
    fc1.visit(prefix + "mlp.fc1.", f);
    fc2.visit(prefix + "mlp.fc2.", f);
  }

  LayerNorm<T> norm1;
  MultiHeadAttention<T> attn;
  LayerNorm<T> norm2;
  Linear<T> fc1;
  Linear<T> fc2;
};

/// Stack of blocks followed by a final LayerNorm.
template <class T>
class TransformerStack {
 public:
  struct Cache {
    std::vector<typename TransformerBlock<T>::Cache> blocks;
    typename LayerNorm<T>::Cache norm;
  };

  TransformerStack() = default;
  TransformerStack(int dim, int depth, int heads, int mlp_ratio) : norm(dim) {
    for (int i = 0; i < depth; ++i) blocks.emplace_back(dim, heads, mlp_ratio);
  }

  void init(Init scheme, Rng& rng) {
    for (auto& b : blocks) b.init(scheme, rng);
  }

  Matrix<T> forward(const Matrix<T>& x, Cache* cache = nullptr) const {
    if (cache) cache->blocks.resize(blocks.size());
    Matrix<T> h = x;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      h = blocks[i].forward(h, cache ? &cache->blocks[i] : nullptr);
    }
    return norm.forward(h, cache ? &cache->norm : nullptr);
  }

  Matrix<T> backward(const Cache& cache, const Matrix<T>& dy) {
    Matrix<T> d = norm.backward(cache.norm, dy);
    for (std::size_t i = blocks.size(); i-- > 0;) d = blocks[i].backward(cache.blocks[i], d);
    return d;
  }

  template <class F>
  void visit(const std::string& prefix, F&& f) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i].visit(prefix + "blocks." + std::to_string(i) + ".", f);
    }
    norm.visit(prefix + "norm.", f);
  }

  std::vector<TransformerBlock<T>> blocks;
  LayerNorm<T> norm;
};

}  // namespace rffr::nn
