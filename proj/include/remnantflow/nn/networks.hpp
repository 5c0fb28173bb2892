#pragma once

#include <algorithm>
#include <stdexcept>

#include "remnantflow/nn/layers.hpp"

namespace rf::nn {

struct UNetSpec {
  int depth = 6;             // number of down/up levels
  int base_channels = 64;
  NormKind norm = NormKind::batch;
  int in_channels = 3;
  int out_channels = 1;

  /// Channels produced by the encoder at `level` (0 = outermost).
  Index level_channels(int level) const {
    return static_cast<Index>(base_channels) * std::min<Index>(Index(1) << std::min(level, 3), 8);
  }
};

/// Encoder-decoder with skip connections. Each level halves the spatial size
/// on the way down (k4 s2 p1) and doubles it on the way up; non-outermost
/// levels return concat(input, decoded) to their parent.
template <typename Scalar>
class UNetGenerator {
 public:
  struct LevelTape {
    typename Sequential<Scalar>::Tape down, up;
    std::unique_ptr<LevelTape> inner;
    Index skip_channels = 0;
  };
  using Tape = LevelTape;

  UNetGenerator(const UNetSpec& spec, std::mt19937_64& rng) : spec_(spec) {
    if (spec.depth < 1) throw std::invalid_argument("generator depth must be >= 1");
    root_ = build(0, rng);
  }

  const UNetSpec& spec() const { return spec_; }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Tape* tape) const {
    const Index min_side = Index(1) << spec_.depth;
    if (x.h % min_side != 0 || x.w % min_side != 0 || x.h < min_side || x.w < min_side)
      throw std::invalid_argument("input size must be a multiple of 2^depth");
    return forward_level(*root_, x, tape);
  }

  /// Accumulates parameter gradients; returns dL/dx.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Tape& tape) { return backward_level(*root_, grad, tape); }

  std::vector<Param<Scalar>*> params() {
    std::vector<Param<Scalar>*> out;
    collect_level(*root_, out);
    return out;
  }

  Index parameter_count() {
    Index total = 0;
    for (auto* p : params()) total += p->value.size();
    return total;
  }

  /// Spatial side at the bottleneck for a square input of side `in`.
  Index innermost_size(Index in) const { return in >> spec_.depth; }

 private:
  struct Level {
    Sequential<Scalar> down, up;
    std::unique_ptr<Level> inner;
    bool outermost = false;
  };

  std::unique_ptr<Level> build(int level, std::mt19937_64& rng) {
    auto node = std::make_unique<Level>();
    const bool outermost = level == 0;
    const bool innermost = level == spec_.depth - 1;
    node->outermost = outermost;
    const bool use_bias = spec_.norm == NormKind::instance;
    const Index inner_nc = spec_.level_channels(level);
    const Index input_nc = outermost ? spec_.in_channels : spec_.level_channels(level - 1);
    const Index outer_nc = outermost ? spec_.out_channels : spec_.level_channels(level - 1);
    const ConvGeometry g{4, 2, 1};
    const std::string name = "g.level" + std::to_string(level);

    if (!outermost) node->down.template add<LeakyRelu<Scalar>>(Scalar(0.2));
    node->down.template add<Conv2d<Scalar>>(input_nc, inner_nc, g, use_bias, rng, name + ".down");
    if (!outermost && !innermost) node->down.template add<Norm2d<Scalar>>(inner_nc, spec_.norm, rng, name + ".down_norm");

    if (!innermost) node->inner = build(level + 1, rng);

    const Index up_in = innermost ? inner_nc : 2 * inner_nc;
    node->up.template add<LeakyRelu<Scalar>>(Scalar(0));
    node->up.template add<ConvTranspose2d<Scalar>>(up_in, outer_nc, g, outermost || use_bias, rng, name + ".up");
    if (outermost)
      node->up.template add<Sigmoid<Scalar>>();
    else
      node->up.template add<Norm2d<Scalar>>(outer_nc, spec_.norm, rng, name + ".up_norm");
    return node;
  }

  Tensor<Scalar> forward_level(const Level& level, const Tensor<Scalar>& x, LevelTape* tape) const {
    Tensor<Scalar> h = level.down.forward(x, tape ? &tape->down : nullptr);
    if (level.inner) {
      if (tape) tape->inner = std::make_unique<LevelTape>();
      h = forward_level(*level.inner, h, tape ? tape->inner.get() : nullptr);
    }
    h = level.up.forward(h, tape ? &tape->up : nullptr);
    if (level.outermost) return h;
    if (tape) tape->skip_channels = x.c;
    return concat_channels(x, h);
  }

  Tensor<Scalar> backward_level(Level& level, const Tensor<Scalar>& grad, const LevelTape& tape) {
    Tensor<Scalar> g_up = level.outermost ? grad : slice_channels(grad, tape.skip_channels, grad.c - tape.skip_channels);
    Tensor<Scalar> g = level.up.backward(g_up, tape.up);
    if (level.inner) g = backward_level(*level.inner, g, *tape.inner);
    g = level.down.backward(g, tape.down);
    if (!level.outermost) g.data += grad.data.topRows(tape.skip_channels);
    return g;
  }

  void collect_level(Level& level, std::vector<Param<Scalar>*>& out) {
    level.down.collect(out);
    if (level.inner) collect_level(*level.inner, out);
    level.up.collect(out);
  }

  UNetSpec spec_;
  std::unique_ptr<Level> root_;
};

struct PatchSpec {
  int base_channels = 64;
  NormKind norm = NormKind::batch;
  int in_channels = 4;
  int strided_layers = 3;
};

/// Conv-arithmetic oracle for the patch discriminator's logit grid side.
inline Index patch_output_size(Index in, int strided_layers = 3) {
  const ConvGeometry strided{4, 2, 1}, unit{4, 1, 1};
  Index s = in;
  for (int i = 0; i < strided_layers; ++i) s = strided.out_size(s);
  s = unit.out_size(s);
  return unit.out_size(s);
}

/// Patch classifier: `strided_layers` stride-2 blocks, then two stride-1
/// blocks, ending in a one-channel logit grid (70x70 receptive field for 3).
template <typename Scalar>
class PatchDiscriminator {
 public:
  using Tape = typename Sequential<Scalar>::Tape;

  PatchDiscriminator(const PatchSpec& spec, std::mt19937_64& rng) : spec_(spec) {
    const bool use_bias = spec.norm == NormKind::instance;
    const ConvGeometry strided{4, 2, 1}, unit{4, 1, 1};
    const Index ndf = spec.base_channels;
    net_.template add<Conv2d<Scalar>>(spec.in_channels, ndf, strided, true, rng, "d.conv0");
    net_.template add<LeakyRelu<Scalar>>(Scalar(0.2));
    Index mult = 1;
    for (int n = 1; n <= spec.strided_layers; ++n) {
      const Index prev = mult;
      mult = std::min<Index>(Index(1) << n, 8);
      const bool last = n == spec.strided_layers;
      const std::string name = "d.conv" + std::to_string(n);
      net_.template add<Conv2d<Scalar>>(ndf * prev, ndf * mult, last ? unit : strided, use_bias, rng, name);
      net_.template add<Norm2d<Scalar>>(ndf * mult, spec.norm, rng, name + "_norm");
      net_.template add<LeakyRelu<Scalar>>(Scalar(0.2));
    }
    net_.template add<Conv2d<Scalar>>(ndf * mult, 1, unit, true, rng, "d.logits");
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Tape* tape) const { return net_.forward(x, tape); }
  Tensor<Scalar> backward(const Tensor<Scalar>& grad, const Tape& tape) { return net_.backward(grad, tape); }

  std::vector<Param<Scalar>*> params() {
    std::vector<Param<Scalar>*> out;
    net_.collect(out);
    return out;
  }

 private:
  PatchSpec spec_;
  Sequential<Scalar> net_;
};

template <typename Scalar>
struct LossGrad {
  Scalar loss;
  Tensor<Scalar> grad;
};

enum class GanMode { vanilla, least_squares };

/// vanilla: mean binary cross-entropy on logits against all-ones/all-zeros;
/// least_squares: mean squared error against 1/0.
template <typename Scalar>
LossGrad<Scalar> gan_loss(GanMode mode, const Tensor<Scalar>& logits, bool is_real) {
  const Scalar target = is_real ? Scalar(1) : Scalar(0);
  const Scalar count = static_cast<Scalar>(logits.data.size());
  LossGrad<Scalar> out{Scalar(0), logits};
  if (mode == GanMode::least_squares) {
    const auto diff = logits.data.array() - target;
    out.loss = diff.square().sum() / count;
    out.grad.data = (Scalar(2) * diff / count).matrix();
    return out;
  }
  // softplus(-z) for real targets, softplus(z) for fake targets, evaluated stably.
  auto softplus = [](Scalar z) { return std::max(z, Scalar(0)) + std::log1p(std::exp(-std::abs(z))); };
  Scalar total = 0;
  for (Index i = 0; i < logits.data.size(); ++i) {
    const Scalar z = logits.data.data()[i];
    total += is_real ? softplus(-z) : softplus(z);
    const Scalar p = Scalar(1) / (Scalar(1) + std::exp(-z));
    out.grad.data.data()[i] = (p - target) / count;
  }
  out.loss = total / count;
  return out;
}

/// Mean absolute error; subgradient 0 at equality.
template <typename Scalar>
LossGrad<Scalar> l1_loss(const Tensor<Scalar>& prediction, const Tensor<Scalar>& target) {
  const Scalar count = static_cast<Scalar>(prediction.data.size());
  LossGrad<Scalar> out{Scalar(0), prediction};
  const auto diff = (prediction.data - target.data).array();
  out.loss = diff.abs().sum() / count;
  out.grad.data = (diff.sign() / count).matrix();
  return out;
}

/// Adam with PyTorch's bias correction.
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<Param<Scalar>*> params, Scalar lr, Scalar beta1 = Scalar(0.5), Scalar beta2 = Scalar(0.999),
       Scalar eps = Scalar(1e-8))
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->grad.setZero();
  }

  void step() {
    ++t_;
    const Scalar bc1 = Scalar(1) - std::pow(beta1_, static_cast<Scalar>(t_));
    const Scalar bc2 = Scalar(1) - std::pow(beta2_, static_cast<Scalar>(t_));
    const Scalar step_size = lr_ / bc1;
    const Scalar sqrt_bc2 = std::sqrt(bc2);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      m_[i] = beta1_ * m_[i] + (Scalar(1) - beta1_) * p.grad;
      v_[i] = beta2_ * v_[i] + (Scalar(1) - beta2_) * p.grad.cwiseProduct(p.grad);
      p.value.array() -= step_size * m_[i].array() / (v_[i].array().sqrt() / sqrt_bc2 + eps_);
    }
  }

  long steps() const { return t_; }

 private:
  std::vector<Param<Scalar>*> params_;
  std::vector<Matrix<Scalar>> m_, v_;
  Scalar lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace rf::nn
