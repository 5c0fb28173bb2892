#include "remnantflow/vectorize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "remnantflow/morphology.hpp"
#include "remnantflow/png_io.hpp"

namespace rf {
namespace {

// Clockwise as displayed (row axis points down), starting east.
constexpr std::array<int, 8> kDr{0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDc{1, 1, 0, -1, -1, -1, 0, 1};

int direction(Index dr, Index dc) {
  for (int d = 0; d < 8; ++d)
    if (kDr[d] == dr && kDc[d] == dc) return d;
  return 0;
}

struct Pixel {
  Index r, c;
  bool operator==(const Pixel&) const = default;
};

/// Border following from `start`, whose neighbour in direction `from` is
/// background. Returns the border pixels in visiting order (not closed).
std::vector<Pixel> follow_border(const BinaryMask& mask, Pixel start, int from) {
  auto fg = [&](Index r, Index c) { return r >= 0 && c >= 0 && r < mask.rows() && c < mask.cols() && mask(r, c); };
  std::vector<Pixel> chain;
  int first = -1;
  for (int k = 0; k < 8; ++k) {
    const int d = (from + k) % 8;
    if (fg(start.r + kDr[d], start.c + kDc[d])) {
      first = d;
      break;
    }
  }
  if (first < 0) return {start};
  const Pixel p1{start.r + kDr[first], start.c + kDc[first]};
  Pixel p2 = p1, p3 = start;
  while (true) {
    const int d2 = direction(p2.r - p3.r, p2.c - p3.c);
    Pixel p4 = p3;
    for (int k = 1; k <= 8; ++k) {
      const int d = (d2 - k + 16) % 8;
      if (fg(p3.r + kDr[d], p3.c + kDc[d])) {
        p4 = {p3.r + kDr[d], p3.c + kDc[d]};
        break;
      }
    }
    chain.push_back(p3);
    if (p4 == start && p3 == p1) break;
    p2 = p3;
    p3 = p4;
  }
  return chain;
}

Polygon closed_ring(const std::vector<Pixel>& chain, bool counter_clockwise) {
  Polygon ring;
  for (const auto& p : chain) ring.emplace_back(double(p.c), double(p.r));
  while (ring.size() < 3) ring.push_back(ring.back());
  ring.push_back(ring.front());
  const double area = signed_area(ring);
  if ((counter_clockwise && area < 0) || (!counter_clockwise && area > 0)) std::reverse(ring.begin(), ring.end());
  return ring;
}

void douglas_peucker(const Polygon& pts, std::size_t lo, std::size_t hi, double epsilon, std::vector<bool>& keep) {
  if (hi <= lo + 1) return;
  double worst = -1.0;
  std::size_t index = lo;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > worst) {
      worst = d;
      index = i;
    }
  }
  if (worst > epsilon) {
    keep[index] = true;
    douglas_peucker(pts, lo, index, epsilon, keep);
    douglas_peucker(pts, index, hi, epsilon, keep);
  }
}

bool is_closed(const Polygon& ring) { return ring.size() >= 2 && ring.front() == ring.back(); }

Point2d to_cad(const Point2d& p, Index rows, double ppu) { return {p.x() / ppu, (double(rows - 1) - p.y()) / ppu}; }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

}  // namespace

void PolySet::validate() const {
  auto check = [](const Polygon& ring, bool outer) {
    if (ring.size() < 4) throw Error(ErrorKind::validation, "ring has fewer than 4 points");
    if (!is_closed(ring)) throw Error(ErrorKind::validation, "ring is not closed");
    const double area = signed_area(ring);
    if ((outer && area < 0) || (!outer && area > 0))
      throw Error(ErrorKind::validation, outer ? "outer ring is clockwise" : "hole ring is counter-clockwise");
  };
  for (const auto& ring : outers) check(ring, true);
  for (const auto& hole : holes) {
    check(hole.ring, false);
    if (hole.parent >= outers.size()) throw Error(ErrorKind::validation, "hole parent index out of range");
  }
}

std::size_t PolySet::vertex_count() const {
  std::size_t n = 0;
  for (const auto& ring : outers) n += ring.size();
  for (const auto& hole : holes) n += hole.ring.size();
  return n;
}

PolySet trace_contours(const BinaryMask& mask) {
  PolySet polys;
  polys.rows = mask.rows();
  polys.cols = mask.cols();
  const Components components = label_components(mask, Connectivity::eight, true);
  std::vector<bool> seen(components.count(), false);
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) {
      const int label = components.labels(r, c);
      if (label == 0 || seen[label - 1]) continue;
      seen[label - 1] = true;
      // First pixel in raster order: its west neighbour is background.
      polys.outers.push_back(closed_ring(follow_border(mask, {r, c}, 4), true));
    }

  const Components holes = interior_holes(mask);
  std::vector<bool> hole_seen(holes.count(), false);
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) {
      const int label = holes.labels(r, c);
      if (label == 0 || hole_seen[label - 1]) continue;
      hole_seen[label - 1] = true;
      // The raster-first hole pixel has a foreground west neighbour.
      const Pixel start{r, c - 1};
      Hole hole;
      hole.ring = closed_ring(follow_border(mask, start, 0), false);
      hole.parent = static_cast<std::size_t>(components.labels(start.r, start.c) - 1);
      polys.holes.push_back(std::move(hole));
    }
  return polys;
}

BinaryMask rasterize(const PolySet& polys) {
  std::vector<Polygon> rings = polys.outers;
  for (const auto& hole : polys.holes) rings.push_back(hole.ring);
  return rasterize(rings, polys.rows, polys.cols);
}

Polygon simplify(const Polygon& polyline, double epsilon) {
  if (epsilon < 0) throw Error(ErrorKind::validation, "simplify epsilon must be >= 0");
  if (epsilon == 0 || polyline.size() < 3) return polyline;
  std::vector<bool> keep(polyline.size(), false);
  keep.front() = keep.back() = true;
  if (is_closed(polyline)) {
    std::size_t far = 0;
    double best = -1.0;
    for (std::size_t i = 1; i + 1 < polyline.size(); ++i) {
      const double d = (polyline[i] - polyline.front()).norm();
      if (d > best) {
        best = d;
        far = i;
      }
    }
    if (far == 0) return polyline;
    keep[far] = true;
    douglas_peucker(polyline, 0, far, epsilon, keep);
    douglas_peucker(polyline, far, polyline.size() - 1, epsilon, keep);
  } else {
    douglas_peucker(polyline, 0, polyline.size() - 1, epsilon, keep);
  }
  Polygon out;
  for (std::size_t i = 0; i < polyline.size(); ++i)
    if (keep[i]) out.push_back(polyline[i]);
  return out;
}

PolySet simplify(const PolySet& polys, double epsilon) {
  auto reduce = [&](const Polygon& ring) {
    Polygon s = simplify(ring, epsilon);
    const double before = signed_area(ring), after = signed_area(s);
    if (s.size() < 4 || (before > 0) != (after > 0) || (before < 0) != (after < 0)) return ring;
    return s;
  };
  PolySet out;
  out.rows = polys.rows;
  out.cols = polys.cols;
  for (const auto& ring : polys.outers) out.outers.push_back(reduce(ring));
  for (const auto& hole : polys.holes) out.holes.push_back({reduce(hole.ring), hole.parent});
  return out;
}

std::string to_string(ExportFormat format) { return format == ExportFormat::svg ? "svg" : "dxf"; }

ExportFormat export_format_from_string(const std::string& text) {
  if (text == "svg") return ExportFormat::svg;
  if (text == "dxf") return ExportFormat::dxf;
  throw Error(ErrorKind::validation, "unknown export format '" + text + "' (expected svg or dxf)", text);
}

std::string to_svg(const PolySet& polys, double px_per_unit) {
  if (!(px_per_unit > 0)) throw Error(ErrorKind::validation, "px_per_unit must be > 0");
  const double width = double(polys.cols) / px_per_unit, height = double(polys.rows) / px_per_unit;
  // CAD y of the last row is 0; flipping about (rows - 1) / 2 puts rows back in place.
  const double shift = double(polys.rows - 1) / px_per_unit;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"" << num(-0.5 / px_per_unit) << ' ' << num(-0.5 / px_per_unit) << ' '
      << num(width) << ' ' << num(height) << "\">\n"
      << "<g transform=\"matrix(1 0 0 -1 0 " << num(shift) << ")\">\n";
  auto subpath = [&](const Polygon& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
      const Point2d p = to_cad(ring[i], polys.rows, px_per_unit);
      out << (i == 0 ? "M " : " L ") << num(p.x()) << ' ' << num(p.y());
    }
    out << " Z";
  };
  for (std::size_t k = 0; k < polys.outers.size(); ++k) {
    out << "<path fill=\"black\" fill-rule=\"evenodd\" d=\"";
    subpath(polys.outers[k]);
    for (const auto& hole : polys.holes)
      if (hole.parent == k) {
        out << ' ';
        subpath(hole.ring);
      }
    out << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string to_dxf(const PolySet& polys, double px_per_unit) {
  if (!(px_per_unit > 0)) throw Error(ErrorKind::validation, "px_per_unit must be > 0");
  std::ostringstream out;
  auto pair = [&](int code, const std::string& value) { out << code << '\n' << value << '\n'; };
  pair(0, "SECTION");
  pair(2, "HEADER");
  pair(9, "$ACADVER");
  pair(1, "AC1009");
  pair(0, "ENDSEC");
  pair(0, "SECTION");
  pair(2, "ENTITIES");
  auto polyline = [&](const Polygon& ring, const char* layer) {
    pair(0, "POLYLINE");
    pair(8, layer);
    pair(66, "1");
    pair(10, num(0.0));
    pair(20, num(0.0));
    pair(30, num(0.0));
    pair(70, "1");
    const std::size_t n = is_closed(ring) ? ring.size() - 1 : ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point2d p = to_cad(ring[i], polys.rows, px_per_unit);
      pair(0, "VERTEX");
      pair(8, layer);
      pair(10, num(p.x()));
      pair(20, num(p.y()));
      pair(30, num(0.0));
    }
    pair(0, "SEQEND");
    pair(8, layer);
  };
  for (const auto& ring : polys.outers) polyline(ring, "OUTER");
  for (const auto& hole : polys.holes) polyline(hole.ring, "HOLE");
  pair(0, "ENDSEC");
  pair(0, "EOF");
  return out.str();
}

void export_polyset(const PolySet& polys, ExportFormat format, const std::filesystem::path& out, double px_per_unit) {
  const std::string text = format == ExportFormat::svg ? to_svg(polys, px_per_unit) : to_dxf(polys, px_per_unit);
  write_file_atomic(out, text);
}

std::vector<Polygon> parse_svg_paths(const std::string& svg) {
  std::vector<Polygon> rings;
  static const std::regex path_re(R"re(<path[^>]*\sd="([^"]*)")re");
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), path_re); it != std::sregex_iterator(); ++it) {
    std::istringstream d((*it)[1].str());
    std::string token;
    Polygon ring;
    while (d >> token) {
      if (token == "M" || token == "L") {
        double x, y;
        d >> x >> y;
        if (token == "M" && !ring.empty()) throw Error(ErrorKind::validation, "unterminated SVG subpath");
        ring.emplace_back(x, y);
      } else if (token == "Z") {
        ring.push_back(ring.front());
        rings.push_back(std::move(ring));
        ring.clear();
      } else {
        throw Error(ErrorKind::validation, "unsupported SVG path token '" + token + "'");
      }
    }
  }
  return rings;
}

std::vector<Polygon> parse_dxf_polylines(const std::string& dxf) {
  std::istringstream in(dxf);
  std::vector<std::pair<int, std::string>> pairs;
  std::string code, value;
  while (std::getline(in, code) && std::getline(in, value)) pairs.emplace_back(std::stoi(code), value);

  std::vector<Polygon> rings;
  Polygon ring;
  bool in_polyline = false, in_vertex = false;
  Point2d vertex{0, 0};
  auto flush_vertex = [&] {
    if (in_vertex) ring.push_back(vertex);
    in_vertex = false;
  };
  for (const auto& [c, v] : pairs) {
    if (c == 0) {
      flush_vertex();
      if (v == "POLYLINE") {
        in_polyline = true;
        ring.clear();
      } else if (v == "VERTEX" && in_polyline) {
        in_vertex = true;
        vertex = {0, 0};
      } else if (v == "SEQEND" && in_polyline) {
        if (!ring.empty()) ring.push_back(ring.front());
        rings.push_back(ring);
        in_polyline = false;
      }
    } else if (in_vertex && c == 10) {
      vertex.x() = std::stod(v);
    } else if (in_vertex && c == 20) {
      vertex.y() = std::stod(v);
    }
  }
  return rings;
}

}  // namespace rf
