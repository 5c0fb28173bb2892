#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "remnantflow/morphology.hpp"
#include "remnantflow/png_io.hpp"
#include "remnantflow/synthgen.hpp"

using namespace rf;
namespace fs = std::filesystem;

namespace {

std::vector<Polygon> rings_of(const RemnantSpec& spec) {
  std::vector<Polygon> rings{spec.outer_polygon};
  for (const auto& h : spec.holes) rings.push_back(h);
  return rings;
}

SynthConfig small_config(Index size) {
  SynthConfig c;
  c.rows = c.cols = size;
  return c;
}

}  // namespace

TEST_CASE("signed area follows the displayed orientation") {
  // Counter-clockwise on screen: right, then up (decreasing row).
  Polygon ccw{{0, 0}, {4, 0}, {4, -3}, {0, -3}};
  CHECK(signed_area(ccw) == doctest::Approx(12.0));
  Polygon cw(ccw.rbegin(), ccw.rend());
  CHECK(signed_area(cw) == doctest::Approx(-12.0));
}

TEST_CASE("rasterize matches the point-in-polygon oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 30.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<Polygon> rings(1 + trial % 3);
    for (auto& ring : rings) {
      const int n = 3 + trial % 6;
      for (int i = 0; i < n; ++i) {
        // Half the trials snap to the lattice so edges pass through pixel centers.
        double x = u(rng), y = u(rng);
        if (trial % 2 == 0) {
          x = std::round(x);
          y = std::round(y);
        }
        ring.emplace_back(x, y);
      }
    }
    CHECK((rasterize(rings, 28, 28) == oracle::rasterize(rings, 28, 28)).all());
  }
}

TEST_CASE("generated masks equal the rasterization oracle") {
  for (Index size : {32, 48, 64})
    for (std::int64_t seed = 0; seed < 12; ++seed) {
      const SynthConfig config = small_config(size);
      const RemnantSpec spec = sample_remnant_spec(seed, config);
      const SamplePair pair = generate_remnant(seed, config);
      CHECK((pair.mask == oracle::rasterize(rings_of(spec), size, size)).all());
    }
}

TEST_CASE("noiseless flat render thresholds back to the mask") {
  SynthConfig config;
  config.textures = {Texture::flat};
  config.noise_sigma = {0.0, 0.0};
  config.gradient_max = 0.0;
  const RemnantSpec spec = sample_remnant_spec(7, config);
  const SamplePair pair = generate_remnant(7, config);
  const double mid = 0.5 * (spec.material_shade + spec.background_shade);
  const Plane<double> lum = luminance(pair.photo);
  BinaryMask thresholded = lum >= mid;
  if (spec.material_shade < spec.background_shade) thresholded = lum <= mid;
  CHECK((thresholded == pair.mask).all());
}

TEST_CASE("generate_remnant is deterministic") {
  const SynthConfig config = small_config(64);
  CHECK(generate_remnant(7, config) == generate_remnant(7, config));
  CHECK(!(generate_remnant(7, config) == generate_remnant(8, config)));
}

TEST_CASE("zero holes gives one 8-connected component") {
  SynthConfig config;
  config.hole_count = {0, 0};
  for (std::int64_t seed = 0; seed < 10; ++seed) {
    const SamplePair pair = generate_remnant(seed, config);
    CHECK(oracle::components(pair.mask, true, true) == 1);
  }
}

TEST_CASE("geometric invariants and the foreground band hold") {
  const SynthConfig config;
  for (std::int64_t seed = 0; seed < 25; ++seed) {
    const RemnantSpec spec = sample_remnant_spec(seed, config);
    const SamplePair pair = generate_remnant(seed, config);
    const double fraction = double(pair.mask.count()) / double(pair.mask.size());
    CHECK(fraction >= config.foreground_band.lo);
    CHECK(fraction <= config.foreground_band.hi);
    CHECK(pair.photo.rows() == pair.mask.rows());
    CHECK(pair.photo.channels() == 3);
    const auto& outer = spec.outer_polygon;
    const std::size_t n = outer.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 2; j < n; ++j) {
        if (i == 0 && j == n - 1) continue;
        CHECK_FALSE(segments_intersect(outer[i], outer[(i + 1) % n], outer[j], outer[(j + 1) % n]));
      }
    for (std::size_t h = 0; h < spec.holes.size(); ++h) {
      for (const auto& p : spec.holes[h]) CHECK(contains(outer, p));
      for (std::size_t k = h + 1; k < spec.holes.size(); ++k)
        for (const auto& p : spec.holes[k]) CHECK_FALSE(contains(spec.holes[h], p));
    }
  }
}

TEST_CASE("noise error grows with sigma") {
  SynthConfig config = small_config(64);
  const RemnantSpec base = sample_remnant_spec(3, config);
  const BinaryMask mask = rasterize_remnant(base, 64, 64);
  RemnantSpec clean = base;
  clean.noise_sigma = 0.0;
  const RasterImage reference = render_photo(clean, mask, 3);
  double previous = -1.0;
  for (double sigma : {0.0, 0.05, 0.1, 0.2}) {
    RemnantSpec s = base;
    s.noise_sigma = sigma;
    const RasterImage photo = render_photo(s, mask, 3);
    double err = 0.0;
    for (Index ch = 0; ch < 3; ++ch) err += (photo.channel(ch) - reference.channel(ch)).abs().mean();
    CHECK(err > previous);
    previous = err;
  }
}

TEST_CASE("degenerate configs fail naming the constraint") {
  SynthConfig config = small_config(64);
  config.foreground_band = {0.95, 0.99};
  config.max_attempts = 20;
  try {
    sample_remnant_spec(0, config);
    FAIL("expected generation failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::generation_failed);
    CHECK(std::string(e.what()).find("foreground") != std::string::npos);
  }
}

TEST_CASE("split sizes floor-partition with remainder to train") {
  CHECK(split_sizes(10, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(split_sizes(3, {1.0, 0.0, 0.0}) == std::array<std::size_t, 3>{3, 0, 0});
  CHECK(split_sizes(11, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{9, 1, 1});
  CHECK_THROWS_AS(split_sizes(2, {1.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(split_sizes(10, {0.5, 0.1, 0.1}), Error);
  CHECK_THROWS_AS(split_sizes(5, {0.9, 0.05, 0.05}), Error);
}

TEST_CASE("datasets round-trip through the manifest") {
  const fs::path dir = fs::temp_directory_path() / "rf_test_dataset";
  fs::remove_all(dir);
  const DatasetManifest m = generate_dataset(3, small_config(32), {1.0, 0.0, 0.0}, dir / "a", 5);
  CHECK(m.split(Split::train).size() == 3);
  const DatasetManifest back = load_manifest(dir / "a" / "manifest.json");
  CHECK(back == m);
  const auto j = nlohmann::json::parse(std::ifstream(dir / "a" / "manifest.json"));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"created_with", "entries", "root"});
  std::vector<std::string> entry_keys;
  for (const auto& [k, v] : j["entries"][0].items()) entry_keys.push_back(k);
  std::sort(entry_keys.begin(), entry_keys.end());
  CHECK(entry_keys == std::vector<std::string>{"id", "mask", "photo", "seed", "split"});

  const DatasetManifest again = generate_dataset(3, small_config(32), {1.0, 0.0, 0.0}, dir / "b", 5);
  CHECK(again.created_with == m.created_with);
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    CHECK(again.entries[i].seed == m.entries[i].seed);
    CHECK(read_file(again.photo_path(again.entries[i])) == read_file(m.photo_path(m.entries[i])));
  }

  fs::remove(dir / "a" / "masks" / (m.entries[0].id + ".png"));
  CHECK_THROWS_AS(load_manifest(dir / "a" / "manifest.json"), Error);
  fs::remove_all(dir);
}
