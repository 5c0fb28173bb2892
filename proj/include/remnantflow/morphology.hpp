#pragma once

#include <vector>

#include "remnantflow/image.hpp"

namespace rf {

enum class Connectivity { four = 4, eight = 8 };

struct ComponentStats {
  Index area = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  bool touches_border = false;
};

/// Labels pixels equal to `value`; label 0 marks other pixels, components
/// are numbered 1..n in raster order of their first pixel.
struct Components {
  Plane<int> labels;
  std::vector<ComponentStats> stats;  // stats[k] describes label k + 1

  std::size_t count() const { return stats.size(); }
};

Components label_components(const BinaryMask& mask, Connectivity connectivity, bool value = true);
std::size_t count_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::eight);

/// Disk of integer offsets with dx^2 + dy^2 <= radius^2. Pixels outside the
/// image are ignored by both operators, which keeps closing idempotent.
BinaryMask dilate(const BinaryMask& mask, int radius);
BinaryMask erode(const BinaryMask& mask, int radius);
BinaryMask close(const BinaryMask& mask, int radius);

/// Drops 8-connected foreground components with area < min_area.
BinaryMask remove_small_components(const BinaryMask& mask, Index min_area);

/// Foreground pixels with a 4-neighbour that is background or off-image.
BinaryMask boundary_pixels(const BinaryMask& mask);

/// Background components (4-connected) that do not touch the image border.
Components interior_holes(const BinaryMask& mask);

}  // namespace rf
