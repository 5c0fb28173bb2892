#pragma once

#include <Eigen/Core>

#include <vector>

#include "remnantflow/image.hpp"

namespace rf {

/// (x, y) in pixel units; pixel (row r, col c) has its center at (c, r).
using Point2d = Eigen::Vector2d;
using Polygon = std::vector<Point2d, Eigen::aligned_allocator<Point2d>>;

/// Shoelace area in the y-up frame: positive means counter-clockwise as the
/// image is displayed. Accepts open or closed (first == last) rings.
double signed_area(const Polygon& ring);

/// Even-odd scanline fill of all rings at pixel centers. Pixel centers that lie
/// exactly on an edge are foreground.
BinaryMask rasterize(const std::vector<Polygon>& rings, Index rows, Index cols);

/// Distance from `p` to the closed segment [a, b].
double point_segment_distance(const Point2d& p, const Point2d& a, const Point2d& b);

bool segments_intersect(const Point2d& a, const Point2d& b, const Point2d& c, const Point2d& d);

/// Even-odd containment of a single point (boundary counts as inside).
bool contains(const Polygon& ring, const Point2d& p);

}  // namespace rf
