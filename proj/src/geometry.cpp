#include "remnantflow/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace rf {
namespace {

double cross(const Point2d& a, const Point2d& b, const Point2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

bool on_segment(const Point2d& a, const Point2d& b, const Point2d& p) {
  return cross(a, b, p) == 0.0 && p.x() >= std::min(a.x(), b.x()) && p.x() <= std::max(a.x(), b.x()) &&
         p.y() >= std::min(a.y(), b.y()) && p.y() <= std::max(a.y(), b.y());
}

template <typename Fn>
void for_each_edge(const Polygon& ring, Fn&& fn) {
  const std::size_t n = ring.size();
  if (n < 2) return;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) fn(ring[j], ring[i]);
}

}  // namespace

double signed_area(const Polygon& ring) {
  double twice = 0.0;
  for_each_edge(ring, [&](const Point2d& a, const Point2d& b) { twice += a.x() * b.y() - b.x() * a.y(); });
  return -0.5 * twice;
}

BinaryMask rasterize(const std::vector<Polygon>& rings, Index rows, Index cols) {
  BinaryMask mask = BinaryMask::Constant(rows, cols, false);
  std::vector<double> crossings;
  for (Index r = 0; r < rows; ++r) {
    const double y = static_cast<double>(r);
    crossings.clear();
    for (const auto& ring : rings)
      for_each_edge(ring, [&](const Point2d& a, const Point2d& b) {
        if ((a.y() > y) != (b.y() > y))
          crossings.push_back((b.x() - a.x()) * (y - a.y()) / (b.y() - a.y()) + a.x());
      });
    std::sort(crossings.begin(), crossings.end());
    // Pixel x is inside when an odd number of crossings lie strictly to its right,
    // i.e. x in [x[k-2], x[k-1]) counting pairs from the right.
    for (std::size_t k = crossings.size(); k >= 2; k -= 2) {
      const Index c0 = std::max<Index>(0, static_cast<Index>(std::ceil(crossings[k - 2])));
      const Index c1 = std::min<Index>(cols - 1, static_cast<Index>(std::ceil(crossings[k - 1])) - 1);
      for (Index c = c0; c <= c1; ++c) mask(r, c) = true;
    }
  }
  // Boundary pass: pixel centers exactly on an edge.
  for (const auto& ring : rings)
    for_each_edge(ring, [&](const Point2d& a, const Point2d& b) {
      const Index r0 = std::max<Index>(0, static_cast<Index>(std::ceil(std::min(a.y(), b.y()))));
      const Index r1 = std::min<Index>(rows - 1, static_cast<Index>(std::floor(std::max(a.y(), b.y()))));
      for (Index r = r0; r <= r1; ++r) {
        const double y = static_cast<double>(r);
        if (a.y() == b.y()) {
          const Index c0 = std::max<Index>(0, static_cast<Index>(std::ceil(std::min(a.x(), b.x()))));
          const Index c1 = std::min<Index>(cols - 1, static_cast<Index>(std::floor(std::max(a.x(), b.x()))));
          for (Index c = c0; c <= c1; ++c) mask(r, c) = true;
        } else {
          const double x = (b.x() - a.x()) * (y - a.y()) / (b.y() - a.y()) + a.x();
          if (x == std::floor(x) && x >= 0 && x < static_cast<double>(cols) &&
              on_segment(a, b, Point2d(x, y)))
            mask(r, static_cast<Index>(x)) = true;
        }
      }
    });
  return mask;
}

double point_segment_distance(const Point2d& p, const Point2d& a, const Point2d& b) {
  const Point2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool segments_intersect(const Point2d& a, const Point2d& b, const Point2d& c, const Point2d& d) {
  const double d1 = cross(c, d, a), d2 = cross(c, d, b), d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d);
}

bool contains(const Polygon& ring, const Point2d& p) {
  bool inside = false;
  bool boundary = false;
  for_each_edge(ring, [&](const Point2d& a, const Point2d& b) {
    if (on_segment(a, b, p)) boundary = true;
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  });
  return inside || boundary;
}

}  // namespace rf
