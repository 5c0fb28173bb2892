#pragma once

#include <Eigen/Dense>

#include <string>

namespace rf::nn {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// NCHW activation stored channel-major: `data` is C x (N*H*W), column
/// ((b * h) + y) * w + x holds every channel of one pixel contiguously.
template <typename Scalar>
struct Tensor {
  Index n = 0, c = 0, h = 0, w = 0;
  Matrix<Scalar> data;

  Tensor() = default;
  Tensor(Index n_, Index c_, Index h_, Index w_) : n(n_), c(c_), h(h_), w(w_), data(Matrix<Scalar>::Zero(c_, n_ * h_ * w_)) {}

  Index pixels() const { return n * h * w; }
  Index column(Index b, Index y, Index x) const { return (b * h + y) * w + x; }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

/// Stacks channels: result has a.c + b.c rows.
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  Tensor<Scalar> out;
  out.n = a.n;
  out.c = a.c + b.c;
  out.h = a.h;
  out.w = a.w;
  out.data.resize(out.c, a.pixels());
  out.data.topRows(a.c) = a.data;
  out.data.bottomRows(b.c) = b.data;
  return out;
}

template <typename Scalar>
Tensor<Scalar> slice_channels(const Tensor<Scalar>& t, Index first, Index count) {
  Tensor<Scalar> out;
  out.n = t.n;
  out.c = count;
  out.h = t.h;
  out.w = t.w;
  out.data = t.data.middleRows(first, count);
  return out;
}

/// A trainable array and its accumulated gradient.
template <typename Scalar>
struct Param {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

}  // namespace rf::nn
