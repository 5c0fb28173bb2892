#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "remnantflow/nn/tensor.hpp"

namespace rf::nn {

enum class NormKind { batch, instance };

/// Square kernel, symmetric zero padding.
struct ConvGeometry {
  Index kernel = 4;
  Index stride = 2;
  Index pad = 1;

  Index out_size(Index in) const { return (in + 2 * pad - kernel) / stride + 1; }
};

/// Patch matrix for a strided convolution over `x`:
/// (k*k*C) x (N*Ho*Wo), row index (ky*k + kx)*C + c.
template <typename Scalar>
Matrix<Scalar> im2col(const Tensor<Scalar>& x, const ConvGeometry& g, Index ho, Index wo) {
  const Index k = g.kernel, ch = x.c;
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(k * k * ch, x.n * ho * wo);
  for (Index b = 0; b < x.n; ++b)
    for (Index oy = 0; oy < ho; ++oy)
      for (Index ox = 0; ox < wo; ++ox) {
        const Index j = (b * ho + oy) * wo + ox;
        for (Index ky = 0; ky < k; ++ky) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= x.h) continue;
          for (Index kx = 0; kx < k; ++kx) {
            const Index ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= x.w) continue;
            cols.col(j).segment((ky * k + kx) * ch, ch) = x.data.col(x.column(b, iy, ix));
          }
        }
      }
  return cols;
}

/// Adjoint of im2col: scatters patch columns back onto `out` (accumulating).
template <typename Scalar>
void col2im(const Matrix<Scalar>& cols, const ConvGeometry& g, Index ho, Index wo, Tensor<Scalar>& out) {
  const Index k = g.kernel, ch = out.c;
  for (Index b = 0; b < out.n; ++b)
    for (Index oy = 0; oy < ho; ++oy)
      for (Index ox = 0; ox < wo; ++ox) {
        const Index j = (b * ho + oy) * wo + ox;
        for (Index ky = 0; ky < k; ++ky) {
          const Index iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= out.h) continue;
          for (Index kx = 0; kx < k; ++kx) {
            const Index ix = ox * g.stride - g.pad + kx;
            if (ix < 0 || ix >= out.w) continue;
            out.data.col(out.column(b, iy, ix)) += cols.col(j).segment((ky * k + kx) * ch, ch);
          }
        }
      }
}

/// Per-layer saved state between forward and backward.
template <typename Scalar>
struct Cache {
  Tensor<Scalar> input;
  Tensor<Scalar> output;
  Matrix<Scalar> aux;
  Matrix<Scalar> aux2;
};

template <typename Scalar>
class Layer {
 public:
  virtual ~Layer() = default;
  /// `cache` may be null for inference-only passes.
  virtual Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache<Scalar>* cache) const = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Cache<Scalar>& cache) = 0;
  virtual void collect(std::vector<Param<Scalar>*>&) {}
};

template <typename Scalar>
void init_normal(Matrix<Scalar>& m, Scalar mean, Scalar stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(static_cast<double>(mean), static_cast<double>(stddev));
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
class Conv2d final : public Layer<Scalar> {
 public:
  Conv2d(Index in, Index out, ConvGeometry g, bool bias, std::mt19937_64& rng, const std::string& name)
      : in_(in), out_(out), g_(g), has_bias_(bias) {
    weight_.name = name + ".weight";
    weight_.value.resize(out, g.kernel * g.kernel * in);
    init_normal<Scalar>(weight_.value, Scalar(0), Scalar(0.02), rng);
    weight_.zero_grad();
    if (has_bias_) {
      bias_.name = name + ".bias";
      bias_.value = Matrix<Scalar>::Zero(out, 1);
      bias_.zero_grad();
    }
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache<Scalar>* cache) const override {
    const Index ho = g_.out_size(x.h), wo = g_.out_size(x.w);
    Matrix<Scalar> cols = im2col(x, g_, ho, wo);
    Tensor<Scalar> y;
    y.n = x.n;
    y.c = out_;
    y.h = ho;
    y.w = wo;
    y.data.noalias() = weight_.value * cols;
    if (has_bias_) y.data.colwise() += bias_.value.col(0);
    if (cache) {
      cache->input.n = x.n;
      cache->input.c = x.c;
      cache->input.h = x.h;
      cache->input.w = x.w;
      cache->aux = std::move(cols);
    }
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Cache<Scalar>& cache) override {
    weight_.grad.noalias() += grad.data * cache.aux.transpose();
    if (has_bias_) bias_.grad.col(0) += grad.data.rowwise().sum();
    Matrix<Scalar> dcols = weight_.value.transpose() * grad.data;
    Tensor<Scalar> dx(cache.input.n, cache.input.c, cache.input.h, cache.input.w);
    col2im(dcols, g_, grad.h, grad.w, dx);
    return dx;
  }

  void collect(std::vector<Param<Scalar>*>& out) override {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

 private:
  Index in_, out_;
  ConvGeometry g_;
  bool has_bias_;
  Param<Scalar> weight_, bias_;
};

/// Fractionally strided convolution; the inverse geometry of Conv2d with the
/// same kernel/stride/pad (k4 s2 p1 doubles H and W).
template <typename Scalar>
class ConvTranspose2d final : public Layer<Scalar> {
 public:
  ConvTranspose2d(Index in, Index out, ConvGeometry g, bool bias, std::mt19937_64& rng, const std::string& name)
      : in_(in), out_(out), g_(g), has_bias_(bias) {
    weight_.name = name + ".weight";
    weight_.value.resize(g.kernel * g.kernel * out, in);
    init_normal<Scalar>(weight_.value, Scalar(0), Scalar(0.02), rng);
    weight_.zero_grad();
    if (has_bias_) {
      bias_.name = name + ".bias";
      bias_.value = Matrix<Scalar>::Zero(out, 1);
      bias_.zero_grad();
    }
  }

  Index out_size(Index in) const { return (in - 1) * g_.stride - 2 * g_.pad + g_.kernel; }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache<Scalar>* cache) const override {
    Tensor<Scalar> y(x.n, out_, out_size(x.h), out_size(x.w));
    const Matrix<Scalar> cols = weight_.value * x.data;
    col2im(cols, g_, x.h, x.w, y);
    if (has_bias_) y.data.colwise() += bias_.value.col(0);
    if (cache) cache->input = x;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Cache<Scalar>& cache) override {
    const Matrix<Scalar> dcols = im2col(grad, g_, cache.input.h, cache.input.w);
    weight_.grad.noalias() += dcols * cache.input.data.transpose();
    if (has_bias_) bias_.grad.col(0) += grad.data.rowwise().sum();
    Tensor<Scalar> dx;
    dx.n = cache.input.n;
    dx.c = cache.input.c;
    dx.h = cache.input.h;
    dx.w = cache.input.w;
    dx.data.noalias() = weight_.value.transpose() * dcols;
    return dx;
  }

  void collect(std::vector<Param<Scalar>*>& out) override {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

 private:
  Index in_, out_;
  ConvGeometry g_;
  bool has_bias_;
  Param<Scalar> weight_, bias_;
};

/// Affine normalization. Batch mode pools statistics over all N*H*W columns
/// of a channel; instance mode pools each sample's H*W columns separately.
/// Statistics always come from the current input (no running averages).
template <typename Scalar>
class Norm2d final : public Layer<Scalar> {
 public:
  Norm2d(Index channels, NormKind kind, std::mt19937_64& rng, const std::string& name) : kind_(kind) {
    gamma_.name = name + ".gamma";
    gamma_.value.resize(channels, 1);
    init_normal<Scalar>(gamma_.value, Scalar(1), Scalar(0.02), rng);
    gamma_.zero_grad();
    beta_.name = name + ".beta";
    beta_.value = Matrix<Scalar>::Zero(channels, 1);
    beta_.zero_grad();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache<Scalar>* cache) const override {
    const Index groups = kind_ == NormKind::batch ? 1 : x.n;
    const Index m = x.pixels() / groups;
    Tensor<Scalar> y = x;
    Matrix<Scalar> xhat(x.c, x.pixels());
    Matrix<Scalar> inv_std(x.c, groups);
    for (Index g = 0; g < groups; ++g) {
      const auto block = x.data.middleCols(g * m, m);
      const auto mean = block.rowwise().mean();
      const Matrix<Scalar> centered = block.colwise() - mean;
      const auto var = centered.array().square().rowwise().mean();
      inv_std.col(g) = (var + Scalar(kEps)).rsqrt().matrix();
      xhat.middleCols(g * m, m) = (centered.array().colwise() * inv_std.col(g).array()).matrix();
      y.data.middleCols(g * m, m) =
          ((xhat.middleCols(g * m, m).array().colwise() * gamma_.value.col(0).array()).colwise() +
           beta_.value.col(0).array())
              .matrix();
    }
    if (cache) {
      cache->aux = std::move(xhat);
      cache->aux2 = std::move(inv_std);
    }
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Cache<Scalar>& cache) override {
    const Matrix<Scalar>& xhat = cache.aux;
    const Index groups = cache.aux2.cols();
    const Index m = grad.pixels() / groups;
    gamma_.grad.col(0) += (grad.data.array() * xhat.array()).rowwise().sum().matrix();
    beta_.grad.col(0) += grad.data.rowwise().sum();
    Tensor<Scalar> dx = grad;
    for (Index g = 0; g < groups; ++g) {
      const Matrix<Scalar> dxhat =
          (grad.data.middleCols(g * m, m).array().colwise() * gamma_.value.col(0).array()).matrix();
      const auto xh = xhat.middleCols(g * m, m);
      const Matrix<Scalar> sum_d = dxhat.rowwise().sum();
      const Matrix<Scalar> sum_dx = (dxhat.array() * xh.array()).rowwise().sum().matrix();
      Matrix<Scalar> t = dxhat * Scalar(m);
      t.colwise() -= sum_d.col(0);
      t -= (xh.array().colwise() * sum_dx.col(0).array()).matrix();
      dx.data.middleCols(g * m, m) =
          (t.array().colwise() * (cache.aux2.col(g).array() / Scalar(m))).matrix();
    }
    return dx;
  }

  void collect(std::vector<Param<Scalar>*>& out) override {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  static constexpr double kEps = 1e-5;
  NormKind kind_;
  Param<Scalar> gamma_, beta_;
};

/// slope 0 gives ReLU.
template <typename Scalar>
class LeakyRelu final : public Layer<Scalar> {
 public:
  explicit LeakyRelu(Scalar slope) : slope_(slope) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache<Scalar>* cache) const override {
    Tensor<Scalar> y = x;
    y.data = x.data.unaryExpr([s = slope_](Scalar v) { return v > Scalar(0) ? v : s * v; });
    if (cache) cache->input = x;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Cache<Scalar>& cache) override {
    Tensor<Scalar> dx = grad;
    dx.data = grad.data.binaryExpr(cache.input.data,
                                   [s = slope_](Scalar g, Scalar v) { return v > Scalar(0) ? g : s * g; });
    return dx;
  }

 private:
  Scalar slope_;
};

template <typename Scalar>
class Sigmoid final : public Layer<Scalar> {
 public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x, Cache<Scalar>* cache) const override {
    Tensor<Scalar> y = x;
    y.data = x.data.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
    if (cache) cache->output = y;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Cache<Scalar>& cache) override {
    Tensor<Scalar> dx = grad;
    const auto& y = cache.output.data.array();
    dx.data = (grad.data.array() * y * (Scalar(1) - y)).matrix();
    return dx;
  }
};

template <typename Scalar>
class Sequential {
 public:
  using Tape = std::vector<Cache<Scalar>>;

  template <typename L, typename... Args>
  void add(Args&&... args) {
    layers_.push_back(std::make_unique<L>(std::forward<Args>(args)...));
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Tape* tape) const {
    if (tape) tape->assign(layers_.size(), Cache<Scalar>{});
    Tensor<Scalar> h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) h = layers_[i]->forward(h, tape ? &(*tape)[i] : nullptr);
    return h;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Tape& tape) {
    Tensor<Scalar> g = grad;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, tape[i]);
    return g;
  }

  void collect(std::vector<Param<Scalar>*>& out) {
    for (auto& l : layers_) l->collect(out);
  }

  bool empty() const { return layers_.empty(); }

 private:
  std::vector<std::unique_ptr<Layer<Scalar>>> layers_;
};

}  // namespace rf::nn
