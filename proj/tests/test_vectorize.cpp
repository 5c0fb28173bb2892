#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "remnantflow/metrics.hpp"
#include "remnantflow/png_io.hpp"
#include "remnantflow/synthgen.hpp"
#include "remnantflow/vectorize.hpp"

using namespace rf;
namespace fs = std::filesystem;

namespace {

Polygon poly(std::initializer_list<std::pair<double, double>> xy) {
  Polygon p;
  for (auto [x, y] : xy) p.emplace_back(x, y);
  return p;
}

void check_orientation(const PolySet& s) {
  for (const auto& o : s.outers) CHECK(signed_area(o) >= 0.0);
  for (const auto& h : s.holes) {
    CHECK(signed_area(h.ring) < 0.0);
    CHECK(h.parent < s.outers.size());
  }
}

}  // namespace

TEST_CASE("tracing examples") {
  const PolySet square = trace_contours(oracle::box(5, 5, 1, 1, 3, 3));
  CHECK(square.outers.size() == 1);
  CHECK(square.holes.empty());
  CHECK(signed_area(square.outers[0]) == doctest::Approx(4.0));

  BinaryMask holed = oracle::box(5, 5, 0, 0, 5, 5);
  holed(2, 2) = false;
  const PolySet h = trace_contours(holed);
  REQUIRE(h.outers.size() == 1);
  REQUIRE(h.holes.size() == 1);
  CHECK(h.holes[0].parent == 0);
  // 8-connected border around the 4-connected hole: the diamond of its 4 neighbours.
  CHECK(h.holes[0].ring.size() == 5);
  CHECK(signed_area(h.holes[0].ring) == doctest::Approx(-2.0));
  CHECK_NOTHROW(h.validate());

  BinaryMask two = oracle::box(12, 12, 1, 1, 3, 3);
  two.block(7, 7, 4, 4).setConstant(true);
  CHECK(trace_contours(two).outers.size() == 2);
  CHECK(trace_contours(two).holes.empty());
  CHECK(trace_contours(BinaryMask::Constant(4, 4, false)).empty());
}

TEST_CASE("tracing property on random masks") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const BinaryMask m = oracle::random_mask(rng, 24, 24, 0.35 + 0.01 * trial);
    const PolySet s = trace_contours(m);
    CHECK(static_cast<int>(s.outers.size()) == oracle::components(m, true, true));
    check_orientation(s);
    CHECK_NOTHROW(s.validate());
    for (const auto& o : s.outers)
      for (const auto& p : o) CHECK(m(static_cast<Index>(p.y()), static_cast<Index>(p.x())));
    const PolySet simple = simplify(s, 1.0);
    check_orientation(simple);
    CHECK(simple.vertex_count() <= s.vertex_count());
  }
}

TEST_CASE("simplify examples") {
  const Polygon chain = poly({{0, 0}, {1, 0}, {2, 0}});
  const Polygon out = simplify(chain, 0.1);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == Point2d(0, 0));
  CHECK(out[1] == Point2d(2, 0));
  CHECK(simplify(chain, 0.0) == chain);
  CHECK_THROWS_AS(simplify(chain, -1.0), Error);

  // Unit square sampled with 4 points per edge (corners shared), closed.
  Polygon sq;
  for (int i = 0; i < 3; ++i) sq.emplace_back(i / 3.0, 0);
  for (int i = 0; i < 3; ++i) sq.emplace_back(1, i / 3.0);
  for (int i = 0; i < 3; ++i) sq.emplace_back(1 - i / 3.0, 1);
  for (int i = 0; i < 3; ++i) sq.emplace_back(0, 1 - i / 3.0);
  sq.push_back(sq.front());
  const Polygon corners = simplify(sq, 0.5);
  REQUIRE(corners.size() == 5);
  CHECK(corners.front() == corners.back());
  for (const auto& p : corners) {
    CHECK((p.x() == 0.0 || p.x() == 1.0));
    CHECK((p.y() == 0.0 || p.y() == 1.0));
  }

  // Surviving vertices are never moved and removed ones stay within epsilon.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  Polygon walk{Point2d(0, 0)};
  for (int i = 0; i < 60; ++i) walk.push_back(walk.back() + Point2d(1.0, n(rng)));
  const Polygon s = simplify(walk, 1.5);
  std::size_t j = 0;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    if (j < s.size() && walk[i] == s[j]) {
      ++j;
      continue;
    }
    CHECK(point_segment_distance(walk[i], s[j - 1], s[j]) <= 1.5 + 1e-12);
  }
  CHECK(j == s.size());
}

TEST_CASE("svg and dxf export") {
  PolySet empty;
  empty.rows = empty.cols = 10;
  const std::string svg0 = to_svg(empty, 1.0);
  CHECK(svg0.find("<svg") != std::string::npos);
  CHECK(parse_svg_paths(svg0).empty());
  CHECK(parse_dxf_polylines(to_dxf(empty, 1.0)).empty());

  PolySet unit;
  unit.rows = unit.cols = 2;
  unit.outers.push_back(poly({{0, 1}, {1, 1}, {1, 0}, {0, 0}, {0, 1}}));  // pixel frame, y down
  CHECK(signed_area(unit.outers[0]) > 0);
  const auto rings = parse_svg_paths(to_svg(unit, 1.0));
  REQUIRE(rings.size() == 1);
  REQUIRE(rings[0].size() == 5);
  for (std::size_t i = 0; i < 4; ++i) {
    // CAD frame: x = c, y = rows - 1 - r.
    CHECK(std::abs(rings[0][i].x() - unit.outers[0][i].x()) < 1e-6);
    CHECK(std::abs(rings[0][i].y() - (1.0 - unit.outers[0][i].y())) < 1e-6);
  }
  const auto half = parse_svg_paths(to_svg(unit, 2.0));
  for (std::size_t i = 0; i < 5; ++i) CHECK((half[0][i] - rings[0][i] / 2.0).norm() < 1e-9);

  const std::string dxf = to_dxf(unit, 2.0);
  CHECK(dxf.find("AC1009") != std::string::npos);
  CHECK(dxf.find("SEQEND") != std::string::npos);
  const auto d = parse_dxf_polylines(dxf);
  REQUIRE(d.size() == 1);
  for (std::size_t i = 0; i < 5; ++i) CHECK((d[0][i] - half[0][i]).norm() < 1e-6);

  const fs::path out = fs::temp_directory_path() / "rf_test_export.svg";
  export_polyset(unit, ExportFormat::svg, out, 1.0);
  CHECK(fs::exists(out));
  fs::remove(out);
  CHECK(export_format_from_string("dxf") == ExportFormat::dxf);
  CHECK_THROWS_AS(export_format_from_string("pdf"), Error);
}

TEST_CASE("round trip on synthetic masks") {
  SynthConfig config;
  config.rows = config.cols = 96;
  for (std::int64_t seed = 0; seed < 10; ++seed) {
    const BinaryMask m = generate_remnant(seed, config).mask;
    const PolySet s = trace_contours(m);
    check_orientation(s);
    CHECK(iou(rasterize(s), m) >= 0.98);
    const auto rings = parse_svg_paths(to_svg(s, 1.0));
    CHECK(rings.size() == s.outers.size() + s.holes.size());
  }
}
