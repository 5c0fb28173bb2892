#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "remnantflow/geometry.hpp"
#include "remnantflow/image.hpp"

namespace rf {

struct Hole {
  Polygon ring;
  std::size_t parent = 0;  // index into PolySet::outers
};

/// Closed polylines (first point == last) through foreground pixel centers.
/// Outers are counter-clockwise and holes clockwise as displayed; rings of
/// zero-area components (single pixels, 1-px lines) have zero signed area.
struct PolySet {
  std::vector<Polygon> outers;
  std::vector<Hole> holes;
  Index rows = 0;
  Index cols = 0;

  /// Throws validation on an open ring, a ring under 4 points, a wrong
  /// orientation or a dangling parent index.
  void validate() const;
  bool empty() const { return outers.empty(); }
  std::size_t vertex_count() const;
};

/// Border following over 8-connected foreground and 4-connected background:
/// one outer ring per foreground component, one hole ring per enclosed
/// background component. An empty mask yields an empty set.
PolySet trace_contours(const BinaryMask& mask);

/// Even-odd fill of every ring at the set's raster size.
BinaryMask rasterize(const PolySet& polys);

inline constexpr double kDefaultSimplifyEpsilon = 1.0;

/// Douglas-Peucker. A closed polyline is split at its first point and the
/// vertex farthest from it; both anchors survive. epsilon == 0 returns the
/// input unchanged.
Polygon simplify(const Polygon& polyline, double epsilon);

/// Simplifies every ring; a ring that would drop below 4 points or change
/// orientation is kept as traced.
PolySet simplify(const PolySet& polys, double epsilon);

enum class ExportFormat { svg, dxf };

std::string to_string(ExportFormat format);
ExportFormat export_format_from_string(const std::string& text);

/// SVG 1.1: one evenodd path per outer with its holes as subpaths. Points are
/// written in CAD coordinates (x = col / ppu, y = (rows - 1 - row) / ppu)
/// under a group transform that flips them back for display.
std::string to_svg(const PolySet& polys, double px_per_unit);

/// ASCII DXF R12: one closed POLYLINE (70 = 1) per ring on layer OUTER or
/// HOLE, VERTEX per point without repeating the first, SEQEND. Same CAD
/// coordinates as the SVG.
std::string to_dxf(const PolySet& polys, double px_per_unit);

void export_polyset(const PolySet& polys, ExportFormat format, const std::filesystem::path& out, double px_per_unit);

/// Read-back of our own exports, in file (CAD) coordinates. Every returned
/// ring is closed.
std::vector<Polygon> parse_svg_paths(const std::string& svg);
std::vector<Polygon> parse_dxf_polylines(const std::string& dxf);

}  // namespace rf
