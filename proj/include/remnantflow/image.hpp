#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "remnantflow/error.hpp"

namespace rf {

using Index = Eigen::Index;

/// One row-major image plane. Row = y, column = x.
template <typename Scalar>
using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// H x W boolean mask. Foreground = true.
using BinaryMask = Plane<bool>;

/// Planar H x W x C image with channel values in [0, 1].
template <typename Scalar>
class Image {
 public:
  using PlaneType = Plane<Scalar>;

  Image() = default;
  Image(Index rows, Index cols, Index channels, Scalar fill = Scalar(0))
      : planes_(static_cast<std::size_t>(channels), PlaneType::Constant(rows, cols, fill)) {}

  static Image from_plane(PlaneType plane) {
    Image img;
    img.planes_.push_back(std::move(plane));
    return img;
  }

  Index rows() const { return planes_.empty() ? 0 : planes_.front().rows(); }
  Index cols() const { return planes_.empty() ? 0 : planes_.front().cols(); }
  Index channels() const { return static_cast<Index>(planes_.size()); }
  bool empty() const { return planes_.empty() || rows() == 0 || cols() == 0; }

  PlaneType& channel(Index c) { return planes_[static_cast<std::size_t>(c)]; }
  const PlaneType& channel(Index c) const { return planes_[static_cast<std::size_t>(c)]; }

  Scalar& operator()(Index r, Index c, Index ch) { return channel(ch)(r, c); }
  Scalar operator()(Index r, Index c, Index ch) const { return channel(ch)(r, c); }

  bool same_shape(const Image& other) const {
    return rows() == other.rows() && cols() == other.cols() && channels() == other.channels();
  }

  friend bool operator==(const Image& a, const Image& b) {
    if (!a.same_shape(b)) return false;
    for (Index c = 0; c < a.channels(); ++c)
      if (!(a.channel(c) == b.channel(c)).all()) return false;
    return true;
  }

  template <typename Other>
  Image<Other> cast() const {
    Image<Other> out;
    for (const auto& p : planes_) out.push_channel(p.template cast<Other>());
    return out;
  }

  void push_channel(PlaneType plane) {
    if (!planes_.empty() && (plane.rows() != rows() || plane.cols() != cols()))
      throw Error(ErrorKind::validation, "channel shape does not match image");
    planes_.push_back(std::move(plane));
  }

 private:
  std::vector<PlaneType> planes_;
};

using RasterImage = Image<double>;

/// Rec. 601 luma: 0.299 R + 0.587 G + 0.114 B. Single-channel input is returned as is.
Plane<double> luminance(const RasterImage& image);

/// Grayscale inputs are replicated to three channels; RGB passes through.
RasterImage to_rgb(const RasterImage& image);

/// Foreground where luminance >= threshold.
BinaryMask binarize(const RasterImage& image, double threshold = 0.5);

RasterImage mask_to_image(const BinaryMask& mask);

RasterImage clamp01(RasterImage image);

/// Bilinear resample to rows x cols (pixel-center aligned).
RasterImage resize_bilinear(const RasterImage& image, Index rows, Index cols);

/// 64-bit FNV-1a over shape and pixels.
std::uint64_t digest(const BinaryMask& mask);

}  // namespace rf
