#include <doctest.h>

#include "oracles.hpp"
#include "remnantflow/preprocess.hpp"

using namespace rf;

namespace {

RasterImage ramp(Index rows, Index cols) {
  RasterImage img(rows, cols, 3);
  for (Index ch = 0; ch < 3; ++ch)
    for (Index r = 0; r < rows; ++r)
      for (Index c = 0; c < cols; ++c) img(r, c, ch) = 0.1 + 0.8 * double((r * 7 + c * 3 + ch) % 97) / 97.0;
  return img;
}

SamplePair pair_of(Index size, std::int64_t seed) {
  SynthConfig config;
  config.rows = config.cols = size;
  return generate_remnant(seed, config);
}

}  // namespace

TEST_CASE("standardize pads 800x600 symmetrically") {
  // 800 wide, 600 tall.
  RasterImage img(600, 800, 3, 1.0);
  const RasterImage out = standardize(img, 1024);
  CHECK(out.rows() == 1024);
  CHECK(out.cols() == 1024);
  const Plane<double>& p = out.channel(0);
  CHECK(p(212, 112) == 1.0);
  CHECK(p(211, 112) == 0.0);
  CHECK(p(212, 111) == 0.0);
  CHECK(p(1024 - 212 - 1, 1024 - 112 - 1) == 1.0);
  CHECK(p(1024 - 212, 1024 - 112 - 1) == 0.0);
  CHECK(p(1024 - 212 - 1, 1024 - 112) == 0.0);
}

TEST_CASE("standardize crops 2000x1500 from origin (488, 238)") {
  const RasterImage img = ramp(1500, 2000);
  const RasterImage out = standardize(img, 1024);
  CHECK(out.rows() == 1024);
  for (Index ch = 0; ch < 3; ++ch) CHECK((out.channel(ch) == img.channel(ch).block(238, 488, 1024, 1024)).all());
}

TEST_CASE("standardize is the identity at the target size and idempotent") {
  const RasterImage img = ramp(64, 64);
  CHECK(standardize(img, 64) == img);
  for (auto [rows, cols] : {std::pair<Index, Index>{37, 90}, {90, 37}, {63, 64}, {65, 65}}) {
    const RasterImage once = standardize(ramp(rows, cols), 64);
    CHECK(standardize(once, 64) == once);
  }
}

TEST_CASE("standardize puts the odd remainder bottom/right") {
  RasterImage img(1, 1, 1, 1.0);
  const RasterImage out = standardize(img, 4);
  CHECK(out.channels() == 3);
  CHECK(out(1, 1, 0) == 1.0);
  CHECK(out.channel(0).sum() == 1.0);
  RasterImage wide(1, 5, 1);
  for (Index c = 0; c < 5; ++c) wide(0, c, 0) = c / 10.0;
  const RasterImage cropped = standardize(wide, 2);
  // 3 columns removed: 1 left, 2 right.
  CHECK(cropped(0, 0, 0) == doctest::Approx(0.1));
  CHECK(cropped(0, 1, 0) == doctest::Approx(0.2));
}

TEST_CASE("grayscale standardizes to RGB") {
  RasterImage gray(3, 3, 1, 0.4);
  const RasterImage out = standardize(gray, 3);
  CHECK(out.channels() == 3);
  CHECK(out.channel(2)(1, 1) == 0.4);
}

TEST_CASE("hflip twice is the identity") {
  const SamplePair p = pair_of(32, 4);
  AugmentDraw flip{true, 0.0, 0.0};
  CHECK(apply_augment(apply_augment(p, flip), flip) == p);
}

TEST_CASE("null policy is the identity") {
  AugmentPolicy policy;
  policy.hflip_prob = 0.0;
  policy.rotation_degrees_max = 0.0;
  policy.brightness_delta_max = 0.0;
  const SamplePair p = pair_of(32, 2);
  for (std::int64_t i = 0; i < 5; ++i) CHECK(augment(p, policy, i) == p);
}

TEST_CASE("right-angle rotation is an exact permutation") {
  const BinaryMask rect = oracle::box(12, 12, 2, 3, 4, 7);
  // Counter-clockwise as displayed: out(r, c) = src(c, W - 1 - r).
  BinaryMask expected(12, 12);
  for (Index r = 0; r < 12; ++r)
    for (Index c = 0; c < 12; ++c) expected(r, c) = rect(c, 11 - r);
  CHECK((rotate_nearest(rect, 90.0) == expected).all());
  const BinaryMask transposed_flipped = rect.transpose().colwise().reverse();
  CHECK((rotate_nearest(rect, 90.0) == transposed_flipped).all());
  CHECK((rotate_nearest(rotate_nearest(rect, 90.0), 270.0) == rect).all());
  CHECK((rotate_nearest(rect, 180.0) == rect.reverse()).all());

  const RasterImage img = ramp(12, 12);
  const RasterImage rot = rotate_bilinear(img, 90.0);
  for (Index r = 0; r < 12; ++r)
    for (Index c = 0; c < 12; ++c) CHECK(rot(r, c, 1) == img(c, 11 - r, 1));
}

TEST_CASE("augment preserves binarity, range and alignment") {
  const SamplePair p = pair_of(48, 9);
  AugmentPolicy policy;
  policy.seed = 3;
  AugmentPolicy flips_only = policy;
  flips_only.rotation_degrees_max = 0.0;
  for (std::int64_t i = 0; i < 30; ++i) {
    const SamplePair a = augment(p, policy, i);
    for (Index ch = 0; ch < 3; ++ch) {
      CHECK(a.photo.channel(ch).minCoeff() >= 0.0);
      CHECK(a.photo.channel(ch).maxCoeff() <= 1.0);
    }
    CHECK(a.mask.rows() == p.mask.rows());
    CHECK(augment(p, policy, i) == a);
    CHECK(augment(p, flips_only, i).mask.count() == p.mask.count());
  }
  AugmentPolicy bad;
  bad.brightness_delta_max = 0.7;
  CHECK_THROWS_AS(bad.validate(), Error);
}
