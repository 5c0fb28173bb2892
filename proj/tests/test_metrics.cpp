#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "remnantflow/metrics.hpp"
#include "remnantflow/png_io.hpp"

using namespace rf;
namespace fs = std::filesystem;

namespace {

BinaryMask points(Index rows, Index cols, std::initializer_list<std::pair<Index, Index>> rc) {
  BinaryMask m = BinaryMask::Constant(rows, cols, false);
  for (auto [r, c] : rc) m(r, c) = true;
  return m;
}

}  // namespace

TEST_CASE("ssim examples") {
  std::mt19937_64 rng(1);
  const Plane<double> x = oracle::random_plane(rng, 20, 20);
  CHECK(ssim(x, x) == 1.0);

  const Plane<double> a = Plane<double>::Constant(16, 16, 0.3), b = Plane<double>::Constant(16, 16, 0.7);
  const double c1 = 0.01 * 0.01;
  CHECK(ssim(a, b) == doctest::Approx((2 * 0.21 + c1) / (0.09 + 0.49 + c1)).epsilon(1e-12));

  for (int trial = 0; trial < 5; ++trial) {
    const Plane<double> p = oracle::random_plane(rng, 16, 16), q = oracle::random_plane(rng, 16, 16);
    CHECK(std::abs(ssim(p, q) - oracle::ssim(p, q)) < 1e-6);
    CHECK(ssim(p, q) == doctest::Approx(ssim(q, p)).epsilon(1e-12));
    CHECK(ssim(p, q) < 1.0);
  }
  // Images narrower than the window shrink it.
  const Plane<double> s = oracle::random_plane(rng, 6, 9), t = oracle::random_plane(rng, 6, 9);
  CHECK(std::abs(ssim(s, t) - oracle::ssim(s, t)) < 1e-6);
  CHECK_THROWS_AS(ssim(s, x), Error);
  SsimParams bad;
  bad.window = 4;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("iou examples") {
  const BinaryMask a = oracle::box(6, 6, 1, 1, 2, 2);
  const BinaryMask shifted = oracle::box(6, 6, 1, 2, 2, 2);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, oracle::box(6, 6, 4, 4, 2, 2)) == 0.0);
  CHECK(iou(a, shifted) == doctest::Approx(1.0 / 3.0));
  const BinaryMask empty = BinaryMask::Constant(6, 6, false);
  CHECK(iou(empty, empty) == 1.0);
  CHECK_THROWS_AS(iou(a, BinaryMask::Constant(5, 6, false)), Error);
}

TEST_CASE("hausdorff examples") {
  const BinaryMask a = points(5, 5, {{0, 0}}), b = points(5, 5, {{3, 4}});
  CHECK(hausdorff(a, b, HausdorffVariant::max) == doctest::Approx(5.0));
  CHECK(hausdorff(a, b, HausdorffVariant::mean) == doctest::Approx(5.0));
  CHECK(hausdorff(a, a, HausdorffVariant::max) == 0.0);
  const BinaryMask two = points(1, 11, {{0, 0}, {0, 10}}), one = points(1, 11, {{0, 0}});
  CHECK(hausdorff(two, one, HausdorffVariant::max) == doctest::Approx(10.0));
  CHECK(hausdorff(two, one, HausdorffVariant::mean) == doctest::Approx(2.5));
  try {
    hausdorff(a, BinaryMask::Constant(5, 5, false), HausdorffVariant::mean);
    FAIL("expected undefined_metric");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::undefined_metric);
  }
}

TEST_CASE("mask metrics match brute-force oracles") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<Index> dim(1, 32);
  for (int trial = 0; trial < 60; ++trial) {
    const Index rows = dim(rng), cols = dim(rng);
    const double p = 0.05 + 0.9 * (trial % 10) / 10.0;
    BinaryMask a = oracle::random_mask(rng, rows, cols, p), b = oracle::random_mask(rng, rows, cols, p);
    a(0, 0) = true;
    b(rows - 1, cols - 1) = true;
    CHECK(std::abs(iou(a, b) - oracle::iou(a, b)) <= 1e-9);
    CHECK(iou(a, b) == iou(b, a));
    for (auto v : {HausdorffVariant::max, HausdorffVariant::mean}) {
      const double h = hausdorff(a, b, v);
      CHECK(std::abs(h - oracle::hausdorff(a, b, v == HausdorffVariant::mean)) <= 1e-9);
      CHECK(h == doctest::Approx(hausdorff(b, a, v)).epsilon(1e-12));
      CHECK(hausdorff(a, a, v) == 0.0);
      CHECK((h == 0.0) == (a == b).all());
    }
  }
}

TEST_CASE("proxy perceptual distance") {
  SynthConfig config;
  config.rows = config.cols = 64;
  const RasterImage clean = mask_to_image(generate_remnant(3, config).mask);
  CHECK(perceptual_distance(clean, clean) == 0.0);
  std::mt19937_64 rng(9);
  double previous = 0.0;
  for (double sigma : {0.05, 0.1, 0.2}) {
    std::normal_distribution<double> noise(0.0, sigma);
    RasterImage noisy = clean;
    for (Index ch = 0; ch < noisy.channels(); ++ch)
      for (Index r = 0; r < noisy.rows(); ++r)
        for (Index c = 0; c < noisy.cols(); ++c)
          noisy(r, c, ch) = std::clamp(noisy(r, c, ch) + noise(rng), 0.0, 1.0);
    const double d = perceptual_distance(clean, noisy);
    CHECK(d > previous);
    CHECK(d == doctest::Approx(perceptual_distance(noisy, clean)).epsilon(1e-12));
    previous = d;
  }
  try {
    perceptual_distance(clean, clean, "lpips-alex");
    FAIL("expected unavailable_backend");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unavailable_backend);
  }
}

TEST_CASE("evaluate_pairset and reports") {
  const fs::path root = fs::temp_directory_path() / "rf_test_metrics";
  fs::remove_all(root);
  SynthConfig config;
  config.rows = config.cols = 32;
  const DatasetManifest manifest = generate_dataset(10, config, {0.4, 0.2, 0.4}, root / "data", 5);
  const auto test = manifest.split(Split::test);
  REQUIRE(test.size() == 4);

  fs::create_directories(root / "same");
  fs::create_directories(root / "pred");
  for (std::size_t i = 0; i < test.size(); ++i) {
    const BinaryMask truth = read_mask_png(manifest.mask_path(test[i]));
    write_mask_png(root / "same" / (test[i].id + ".png"), truth);
    if (i == 0) continue;  // missing prediction
    BinaryMask shifted = BinaryMask::Constant(truth.rows(), truth.cols(), false);
    shifted.rightCols(truth.cols() - 1) = truth.leftCols(truth.cols() - 1);
    write_mask_png(root / "pred" / (test[i].id + ".png"), shifted);
  }

  const MetricsReport same = evaluate_pairset(manifest, root / "same", "identity");
  CHECK(same.n == 4);
  CHECK(same.errors.empty());
  for (const auto& s : same.per_sample) {
    CHECK(s.ssim == 1.0);
    CHECK(s.perceptual == 0.0);
    CHECK(s.hausdorff_mean == 0.0);
    CHECK(s.hausdorff_max == 0.0);
    CHECK(s.iou == 1.0);
  }

  const MetricsReport pred = evaluate_pairset(manifest, root / "pred", "shifted");
  CHECK(pred.n == 3);
  REQUIRE(pred.errors.size() == 1);
  CHECK(pred.errors[0].id == test[0].id);
  for (const auto& name : metric_names()) {
    double sum = 0.0, sq = 0.0;
    for (const auto& s : pred.per_sample) sum += metric_value(s, name);
    const double mean = sum / 3.0;
    for (const auto& s : pred.per_sample) sq += std::pow(metric_value(s, name) - mean, 2);
    CHECK(std::abs(pred.aggregate.at(name).mean - mean) <= 1e-12);
    CHECK(std::abs(pred.aggregate.at(name).std - std::sqrt(sq / 3.0)) <= 1e-12);
  }

  save_report(pred, root / "report.json");
  const MetricsReport back = load_report(root / "report.json");
  CHECK(back.n == 3);
  CHECK(back.method_label == "shifted");
  CHECK(back.per_sample[1].iou == pred.per_sample[1].iou);
  const auto j = nlohmann::json::parse(std::string(
      [&] { auto b = read_file(root / "report.json"); return std::string(b.begin(), b.end()); }()));
  CHECK(j.contains("aggregate"));
  CHECK(j["aggregate"].contains("hausdorff_mean"));
  CHECK(j["perceptual_backend"] == kProxyBackend);

  const std::string table = render_table(same);
  CHECK(table.rfind("| Metric | Value |\n", 0) == 0);
  CHECK(table.find("| SSIM | 1.0000 |") != std::string::npos);
  CHECK(table.find("| IoU | 1.0000 |") != std::string::npos);
  CHECK(table.find("LPIPS (proxy-msssim3)") != std::string::npos);
  const std::string cmp = render_comparison(same, pred);
  CHECK(cmp.rfind("| Metric | identity (n=4) | shifted (n=3) |\n", 0) == 0);
  for (const char* row : {"| SSIM |", "| LPIPS (proxy-msssim3) |", "| Hausdorff Mean |", "| IoU |"})
    CHECK(cmp.find(row) != std::string::npos);
  fs::remove_all(root);
}
