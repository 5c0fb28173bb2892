#include "remnantflow/morphology.hpp"

#include <array>
#include <utility>

namespace rf {
namespace {

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dy, dx);
  return offsets;
}

}  // namespace

Components label_components(const BinaryMask& mask, Connectivity connectivity, bool value) {
  static constexpr std::array<std::pair<int, int>, 8> kNeighbours{
      {{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};
  const int neighbours = connectivity == Connectivity::eight ? 8 : 4;
  const Index rows = mask.rows(), cols = mask.cols();
  Components out;
  out.labels = Plane<int>::Zero(rows, cols);
  std::vector<std::pair<Index, Index>> stack;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      if (mask(r, c) != value || out.labels(r, c) != 0) continue;
      const int label = static_cast<int>(out.stats.size()) + 1;
      ComponentStats stats;
      double sx = 0.0, sy = 0.0;
      stack.assign(1, {r, c});
      out.labels(r, c) = label;
      while (!stack.empty()) {
        const auto [y, x] = stack.back();
        stack.pop_back();
        ++stats.area;
        sx += static_cast<double>(x);
        sy += static_cast<double>(y);
        if (y == 0 || x == 0 || y == rows - 1 || x == cols - 1) stats.touches_border = true;
        for (int k = 0; k < neighbours; ++k) {
          const Index ny = y + kNeighbours[k].first, nx = x + kNeighbours[k].second;
          if (ny < 0 || nx < 0 || ny >= rows || nx >= cols) continue;
          if (mask(ny, nx) != value || out.labels(ny, nx) != 0) continue;
          out.labels(ny, nx) = label;
          stack.emplace_back(ny, nx);
        }
      }
      stats.centroid_x = sx / static_cast<double>(stats.area);
      stats.centroid_y = sy / static_cast<double>(stats.area);
      out.stats.push_back(stats);
    }
  return out;
}

std::size_t count_components(const BinaryMask& mask, Connectivity connectivity) {
  return label_components(mask, connectivity).count();
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const auto offsets = disk_offsets(radius);
  const Index rows = mask.rows(), cols = mask.cols();
  BinaryMask out = BinaryMask::Constant(rows, cols, false);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      if (!mask(r, c)) continue;
      for (const auto& [dy, dx] : offsets) {
        const Index y = r + dy, x = c + dx;
        if (y >= 0 && x >= 0 && y < rows && x < cols) out(y, x) = true;
      }
    }
  return out;
}

BinaryMask erode(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  // Erosion of X is the complement of the dilation of the complement.
  return !dilate(!mask, radius);
}

BinaryMask close(const BinaryMask& mask, int radius) { return erode(dilate(mask, radius), radius); }

BinaryMask remove_small_components(const BinaryMask& mask, Index min_area) {
  if (min_area <= 1) return mask;
  const Components comps = label_components(mask, Connectivity::eight);
  BinaryMask out = mask;
  for (Index r = 0; r < mask.rows(); ++r)
    for (Index c = 0; c < mask.cols(); ++c) {
      const int label = comps.labels(r, c);
      if (label > 0 && comps.stats[static_cast<std::size_t>(label - 1)].area < min_area) out(r, c) = false;
    }
  return out;
}

BinaryMask boundary_pixels(const BinaryMask& mask) {
  const Index rows = mask.rows(), cols = mask.cols();
  BinaryMask out = BinaryMask::Constant(rows, cols, false);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      if (!mask(r, c)) continue;
      const bool edge = r == 0 || c == 0 || r == rows - 1 || c == cols - 1;
      out(r, c) = edge || !mask(r - 1, c) || !mask(r + 1, c) || !mask(r, c - 1) || !mask(r, c + 1);
    }
  return out;
}

Components interior_holes(const BinaryMask& mask) {
  Components background = label_components(mask, Connectivity::four, false);
  Components holes;
  holes.labels = Plane<int>::Zero(mask.rows(), mask.cols());
  std::vector<int> remap(background.count() + 1, 0);
  for (std::size_t k = 0; k < background.count(); ++k) {
    if (background.stats[k].touches_border) continue;
    holes.stats.push_back(background.stats[k]);
    remap[k + 1] = static_cast<int>(holes.stats.size());
  }
  for (Index i = 0; i < holes.labels.size(); ++i) holes.labels.data()[i] = remap[background.labels.data()[i]];
  return holes;
}

}  // namespace rf
