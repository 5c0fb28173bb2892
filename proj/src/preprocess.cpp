#include "remnantflow/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

namespace rf {
namespace {

/// Source offset for one axis: positive = crop origin, negative = pad amount.
Index axis_offset(Index size, Index target) {
  if (size >= target) return (size - target) / 2;
  return -((target - size) / 2);
}

template <typename Scalar>
Plane<Scalar> place(const Plane<Scalar>& src, Index target) {
  Plane<Scalar> out = Plane<Scalar>::Zero(target, target);
  const Index oy = axis_offset(src.rows(), target);
  const Index ox = axis_offset(src.cols(), target);
  // Overlap in destination coordinates.
  const Index dy0 = std::max<Index>(0, -oy), dx0 = std::max<Index>(0, -ox);
  const Index sy0 = std::max<Index>(0, oy), sx0 = std::max<Index>(0, ox);
  const Index h = std::min(target - dy0, src.rows() - sy0);
  const Index w = std::min(target - dx0, src.cols() - sx0);
  out.block(dy0, dx0, h, w) = src.block(sy0, sx0, h, w);
  return out;
}

/// Exact quarter-turn count for angles that are multiples of 90 degrees.
std::optional<int> quarter_turns(double degrees) {
  const double q = degrees / 90.0;
  const double rounded = std::round(q);
  if (std::abs(q - rounded) > 1e-12) return std::nullopt;
  return ((static_cast<int>(rounded) % 4) + 4) % 4;
}

template <typename Scalar>
Plane<Scalar> rotate_quarter(const Plane<Scalar>& src, int turns) {
  const Index h = src.rows(), w = src.cols();
  Plane<Scalar> out = Plane<Scalar>::Zero(h, w);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      // Inverse map of a counter-clockwise (display) rotation by turns * 90.
      const double dx = c - cx, dy = r - cy;
      double sx = dx, sy = dy;
      for (int t = 0; t < turns; ++t) {
        const double nx = -sy, ny = sx;
        sx = nx;
        sy = ny;
      }
      const double fx = sx + cx, fy = sy + cy;
      const Index ix = static_cast<Index>(std::lround(fx)), iy = static_cast<Index>(std::lround(fy));
      if (std::abs(fx - ix) < 1e-9 && std::abs(fy - iy) < 1e-9 && ix >= 0 && iy >= 0 && ix < w && iy < h)
        out(r, c) = src(iy, ix);
    }
  return out;
}

struct InverseRotation {
  double cos_t, sin_t, cx, cy;
  Eigen::Vector2d source(Index r, Index c) const {
    const double dx = c - cx, dy = r - cy;
    // Counter-clockwise on screen (y down) is clockwise in (x, y) math; the
    // inverse maps destination to source.
    return {cos_t * dx - sin_t * dy + cx, sin_t * dx + cos_t * dy + cy};
  }
};

InverseRotation inverse_rotation(Index rows, Index cols, double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  return {std::cos(t), std::sin(t), (cols - 1) / 2.0, (rows - 1) / 2.0};
}

}  // namespace

void AugmentPolicy::validate() const {
  if (hflip_prob < 0 || hflip_prob > 1) throw Error(ErrorKind::validation, "hflip_prob must lie in [0, 1]");
  if (rotation_degrees_max < 0) throw Error(ErrorKind::validation, "rotation_degrees_max must be >= 0");
  if (brightness_delta_max < 0 || brightness_delta_max > 0.5)
    throw Error(ErrorKind::validation, "brightness_delta_max must lie in [0, 0.5]");
}

RasterImage standardize(const RasterImage& image, Index target) {
  if (image.empty()) throw Error(ErrorKind::validation, "cannot standardize an empty image");
  if (target < 1) throw Error(ErrorKind::validation, "target side must be >= 1");
  const RasterImage rgb = to_rgb(image);
  if (rgb.rows() == target && rgb.cols() == target) return rgb;
  RasterImage out;
  for (Index c = 0; c < 3; ++c) out.push_channel(place(rgb.channel(c), target));
  return out;
}

BinaryMask standardize(const BinaryMask& mask, Index target) {
  if (mask.size() == 0) throw Error(ErrorKind::validation, "cannot standardize an empty mask");
  if (target < 1) throw Error(ErrorKind::validation, "target side must be >= 1");
  return place(mask, target);
}

RasterImage hflip(const RasterImage& image) {
  RasterImage out;
  for (Index c = 0; c < image.channels(); ++c) out.push_channel(image.channel(c).rowwise().reverse());
  return out;
}

BinaryMask hflip(const BinaryMask& mask) { return mask.rowwise().reverse(); }

RasterImage rotate_bilinear(const RasterImage& image, double degrees) {
  if (auto turns = quarter_turns(degrees)) {
    if (*turns == 0) return image;
    RasterImage out;
    for (Index c = 0; c < image.channels(); ++c) out.push_channel(rotate_quarter(image.channel(c), *turns));
    return out;
  }
  const Index h = image.rows(), w = image.cols();
  const InverseRotation inv = inverse_rotation(h, w, degrees);
  RasterImage out(h, w, image.channels());
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const Eigen::Vector2d s = inv.source(r, c);
      const double fx = std::floor(s.x()), fy = std::floor(s.y());
      const double ax = s.x() - fx, ay = s.y() - fy;
      const Index x0 = static_cast<Index>(fx), y0 = static_cast<Index>(fy);
      for (Index ch = 0; ch < image.channels(); ++ch) {
        const auto& p = image.channel(ch);
        auto at = [&](Index y, Index x) { return (y >= 0 && x >= 0 && y < h && x < w) ? p(y, x) : 0.0; };
        out(r, c, ch) = (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
                        ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
      }
    }
  return out;
}

BinaryMask rotate_nearest(const BinaryMask& mask, double degrees) {
  if (auto turns = quarter_turns(degrees)) return *turns == 0 ? mask : rotate_quarter(mask, *turns);
  const Index h = mask.rows(), w = mask.cols();
  const InverseRotation inv = inverse_rotation(h, w, degrees);
  BinaryMask out = BinaryMask::Constant(h, w, false);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) {
      const Eigen::Vector2d s = inv.source(r, c);
      const Index x = static_cast<Index>(std::lround(s.x())), y = static_cast<Index>(std::lround(s.y()));
      if (x >= 0 && y >= 0 && x < w && y < h) out(r, c) = mask(y, x);
    }
  return out;
}

AugmentDraw draw_augment(const AugmentPolicy& policy, std::int64_t index) {
  policy.validate();
  if (index < 0) throw Error(ErrorKind::validation, "augment index must be >= 0");
  std::seed_seq seq{static_cast<std::uint32_t>(policy.seed), static_cast<std::uint32_t>(policy.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // All three draws always happen so each field's stream position is fixed.
  const double u_flip = unit(rng), u_rot = unit(rng), u_bright = unit(rng);
  AugmentDraw draw;
  draw.flip = u_flip < policy.hflip_prob;
  draw.degrees = policy.rotation_degrees_max * (2.0 * u_rot - 1.0);
  draw.brightness = policy.brightness_delta_max * (2.0 * u_bright - 1.0);
  return draw;
}

SamplePair apply_augment(const SamplePair& pair, const AugmentDraw& draw) {
  SamplePair out = pair;
  if (draw.flip) {
    out.photo = hflip(out.photo);
    out.mask = hflip(out.mask);
  }
  if (draw.degrees != 0.0) {
    out.photo = rotate_bilinear(out.photo, draw.degrees);
    out.mask = rotate_nearest(out.mask, draw.degrees);
  }
  if (draw.brightness != 0.0) {
    for (Index c = 0; c < out.photo.channels(); ++c) out.photo.channel(c) += draw.brightness;
    out.photo = clamp01(std::move(out.photo));
  }
  return out;
}

SamplePair augment(const SamplePair& pair, const AugmentPolicy& policy, std::int64_t index) {
  if (pair.photo.rows() != pair.mask.rows() || pair.photo.cols() != pair.mask.cols())
    throw Error(ErrorKind::validation, "photo and mask shapes differ");
  return apply_augment(pair, draw_augment(policy, index));
}

}  // namespace rf
