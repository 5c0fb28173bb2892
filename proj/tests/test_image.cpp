#include <doctest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "remnantflow/png_io.hpp"

using namespace rf;

TEST_CASE("luminance uses Rec. 601 weights") {
  RasterImage img(1, 1, 3);
  img(0, 0, 0) = 1.0;
  CHECK(luminance(img)(0, 0) == doctest::Approx(0.299));
  img(0, 0, 1) = 1.0;
  img(0, 0, 2) = 1.0;
  CHECK(luminance(img)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("binarize thresholds at 0.5 inclusive") {
  RasterImage img = RasterImage::from_plane((Plane<double>(1, 3) << 0.49, 0.5, 0.9).finished());
  const BinaryMask m = binarize(img);
  CHECK(!m(0, 0));
  CHECK(m(0, 1));
  CHECK(m(0, 2));
}

TEST_CASE("png round trip is exact at 8 bits") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 255);
  RasterImage img(7, 9, 3);
  for (Index ch = 0; ch < 3; ++ch)
    for (Index r = 0; r < 7; ++r)
      for (Index c = 0; c < 9; ++c) img(r, c, ch) = level(rng) / 255.0;
  const RasterImage back = decode_png(encode_png(img));
  REQUIRE(back.same_shape(img));
  for (Index ch = 0; ch < 3; ++ch) CHECK((back.channel(ch) - img.channel(ch)).abs().maxCoeff() < 1e-12);

  const BinaryMask mask = oracle::random_mask(rng, 11, 5, 0.4);
  const RasterImage decoded = decode_png(encode_mask_png(mask));
  CHECK(decoded.channels() == 1);
  CHECK((binarize(decoded) == mask).all());
}

TEST_CASE("corrupt bytes are a validation error") {
  const Bytes junk{1, 2, 3, 4, 5};
  CHECK_THROWS_AS(decode_png(junk), Error);
  try {
    decode_png(junk);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
  }
}

TEST_CASE("resize_bilinear keeps constants and identity") {
  RasterImage img(4, 4, 1, 0.25);
  const RasterImage up = resize_bilinear(img, 9, 7);
  CHECK(up.rows() == 9);
  CHECK(up.cols() == 7);
  CHECK((up.channel(0) - 0.25).abs().maxCoeff() < 1e-12);
  std::mt19937_64 rng(1);
  RasterImage rnd = RasterImage::from_plane(oracle::random_plane(rng, 5, 6));
  CHECK(resize_bilinear(rnd, 5, 6) == rnd);
}

TEST_CASE("mask digest separates shape and content") {
  const BinaryMask a = oracle::box(8, 8, 1, 1, 3, 3);
  BinaryMask b = a;
  CHECK(digest(a) == digest(b));
  b(0, 0) = true;
  CHECK(digest(a) != digest(b));
  CHECK(digest(BinaryMask::Constant(2, 8, false)) != digest(BinaryMask::Constant(8, 2, false)));
}

TEST_CASE("atomic writes leave no temporaries") {
  const auto dir = std::filesystem::temp_directory_path() / "rf_test_atomic";
  std::filesystem::remove_all(dir);
  write_file_atomic(dir / "x.txt", std::string("hello"));
  write_file_atomic(dir / "x.txt", std::string("world"));
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  CHECK(files == 1);
  const Bytes back = read_file(dir / "x.txt");
  CHECK(std::string(back.begin(), back.end()) == "world");
  std::filesystem::remove_all(dir);
}
