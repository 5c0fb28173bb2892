#include "remnantflow/image.hpp"

#include <algorithm>
#include <cmath>

namespace rf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::wrong_state: return "wrong_state";
    case ErrorKind::bad_index: return "bad_index";
    case ErrorKind::generation_failed: return "generation_failed";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::provider_unavailable: return "provider_unavailable";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::io: return "io";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::unavailable_backend: return "unavailable_backend";
    case ErrorKind::missing_ground_truth: return "missing_ground_truth";
    case ErrorKind::missing_placeholder: return "missing_placeholder";
  }
  return "unknown";
}

Plane<double> luminance(const RasterImage& image) {
  if (image.channels() == 1) return image.channel(0);
  if (image.channels() < 3) throw Error(ErrorKind::validation, "luminance needs 1 or 3 channels");
  return 0.299 * image.channel(0) + 0.587 * image.channel(1) + 0.114 * image.channel(2);
}

RasterImage to_rgb(const RasterImage& image) {
  if (image.channels() == 3) return image;
  if (image.channels() != 1) throw Error(ErrorKind::validation, "to_rgb needs 1 or 3 channels");
  RasterImage out;
  for (int c = 0; c < 3; ++c) out.push_channel(image.channel(0));
  return out;
}

BinaryMask binarize(const RasterImage& image, double threshold) {
  return luminance(image) >= threshold;
}

RasterImage mask_to_image(const BinaryMask& mask) {
  return RasterImage::from_plane(mask.cast<double>());
}

RasterImage clamp01(RasterImage image) {
  for (Index c = 0; c < image.channels(); ++c)
    image.channel(c) = image.channel(c).max(0.0).min(1.0);
  return image;
}

RasterImage resize_bilinear(const RasterImage& image, Index rows, Index cols) {
  if (image.rows() == rows && image.cols() == cols) return image;
  RasterImage out(rows, cols, image.channels());
  const double sy = static_cast<double>(image.rows()) / rows;
  const double sx = static_cast<double>(image.cols()) / cols;
  for (Index r = 0; r < rows; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(image.rows() - 1));
    const Index y0 = static_cast<Index>(fy);
    const Index y1 = std::min(y0 + 1, image.rows() - 1);
    const double wy = fy - y0;
    for (Index c = 0; c < cols; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(image.cols() - 1));
      const Index x0 = static_cast<Index>(fx);
      const Index x1 = std::min(x0 + 1, image.cols() - 1);
      const double wx = fx - x0;
      for (Index ch = 0; ch < image.channels(); ++ch) {
        const auto& p = image.channel(ch);
        out(r, c, ch) = (1 - wy) * ((1 - wx) * p(y0, x0) + wx * p(y0, x1)) +
                        wy * ((1 - wx) * p(y1, x0) + wx * p(y1, x1));
      }
    }
  }
  return out;
}

std::uint64_t digest(const BinaryMask& mask) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (int shift = 0; shift < 64; shift += 8) mix((static_cast<std::uint64_t>(mask.rows()) >> shift) & 0xff);
  for (int shift = 0; shift < 64; shift += 8) mix((static_cast<std::uint64_t>(mask.cols()) >> shift) & 0xff);
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) mix(mask(r, c) ? 1 : 0);
  return h;
}

}  // namespace rf
