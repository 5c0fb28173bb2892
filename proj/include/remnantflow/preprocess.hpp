#pragma once

#include <cstdint>

#include "remnantflow/image.hpp"
#include "remnantflow/synthgen.hpp"

namespace rf {

struct AugmentPolicy {
  double hflip_prob = 0.5;
  double rotation_degrees_max = 15.0;
  double brightness_delta_max = 0.1;
  std::int64_t seed = 0;

  void validate() const;
};

/// Center-crops or zero-pads each axis independently to `target`, then
/// replicates grayscale to RGB. Odd remainders go to the bottom/right.
RasterImage standardize(const RasterImage& image, Index target = 1024);

/// Same placement rule applied to a mask (padding is background).
BinaryMask standardize(const BinaryMask& mask, Index target);

RasterImage hflip(const RasterImage& image);
BinaryMask hflip(const BinaryMask& mask);

/// Rotates content counter-clockwise (as displayed) about the image center
/// with zero fill. Multiples of 90 degrees use exact index permutation.
RasterImage rotate_bilinear(const RasterImage& image, double degrees);
BinaryMask rotate_nearest(const BinaryMask& mask, double degrees);

/// The transform drawn for one (policy, index).
struct AugmentDraw {
  bool flip = false;
  double degrees = 0.0;
  double brightness = 0.0;
};

AugmentDraw draw_augment(const AugmentPolicy& policy, std::int64_t index);

/// Identical geometric transform on photo and mask, brightness on photo only.
SamplePair augment(const SamplePair& pair, const AugmentPolicy& policy, std::int64_t index);
SamplePair apply_augment(const SamplePair& pair, const AugmentDraw& draw);

}  // namespace rf
