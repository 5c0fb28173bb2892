#pragma once
// Brute-force reference implementations, written independently of the
// library code they check.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "remnantflow/geometry.hpp"
#include "remnantflow/image.hpp"

namespace oracle {

using rf::BinaryMask;
using rf::Index;
using rf::Plane;

/// Direct per-window SSIM with 2-D Gaussian weights and centered moments.
inline double ssim(const Plane<double>& a, const Plane<double>& b, int window = 11, double sigma = 1.5,
                   double k1 = 0.01, double k2 = 0.03, double L = 1.0) {
  window = static_cast<int>(std::min<Index>(window, std::min(a.rows(), a.cols())));
  if (window % 2 == 0) --window;
  const int half = window / 2;
  std::vector<std::vector<double>> w(window, std::vector<double>(window));
  double total = 0.0;
  for (int i = 0; i < window; ++i)
    for (int j = 0; j < window; ++j) {
      const double di = i - half, dj = j - half;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2 * sigma * sigma));
      total += w[i][j];
    }
  const double c1 = (k1 * L) * (k1 * L), c2 = (k2 * L) * (k2 * L);
  double sum = 0.0;
  int count = 0;
  for (Index r = 0; r + window <= a.rows(); ++r)
    for (Index c = 0; c + window <= a.cols(); ++c) {
      double ma = 0, mb = 0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
          ma += w[i][j] / total * a(r + i, c + j);
          mb += w[i][j] / total * b(r + i, c + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
          const double da = a(r + i, c + j) - ma, db = b(r + i, c + j) - mb;
          va += w[i][j] / total * da * da;
          vb += w[i][j] / total * db * db;
          cov += w[i][j] / total * da * db;
        }
      sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return sum / count;
}

inline double iou(const BinaryMask& a, const BinaryMask& b) {
  long inter = 0, uni = 0;
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = 0; c < a.cols(); ++c) {
      inter += a(r, c) && b(r, c);
      uni += a(r, c) || b(r, c);
    }
  return uni == 0 ? 1.0 : double(inter) / double(uni);
}

/// All-pairs Hausdorff; `mean` selects the average-of-directed-means variant.
inline double hausdorff(const BinaryMask& a, const BinaryMask& b, bool mean) {
  std::vector<std::pair<Index, Index>> pa, pb;
  for (Index r = 0; r < a.rows(); ++r)
    for (Index c = 0; c < a.cols(); ++c) {
      if (a(r, c)) pa.emplace_back(r, c);
      if (b(r, c)) pb.emplace_back(r, c);
    }
  auto directed = [&](const auto& from, const auto& to) {
    double worst = 0.0, sum = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) best = std::min(best, std::hypot(double(p.first - q.first), double(p.second - q.second)));
      worst = std::max(worst, best);
      sum += best;
    }
    return mean ? sum / double(from.size()) : worst;
  };
  const double ab = directed(pa, pb), ba = directed(pb, pa);
  return mean ? 0.5 * (ab + ba) : std::max(ab, ba);
}

inline bool on_segment(double px, double py, const rf::Point2d& a, const rf::Point2d& b) {
  const double cross = (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
  if (std::abs(cross) > 1e-9) return false;
  return px >= std::min(a.x(), b.x()) - 1e-9 && px <= std::max(a.x(), b.x()) + 1e-9 &&
         py >= std::min(a.y(), b.y()) - 1e-9 && py <= std::max(a.y(), b.y()) + 1e-9;
}

/// Per-pixel even-odd point-in-polygon; centers on any edge are foreground.
inline BinaryMask rasterize(const std::vector<rf::Polygon>& rings, Index rows, Index cols) {
  BinaryMask out = BinaryMask::Constant(rows, cols, false);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const double x = double(c), y = double(r);
      bool inside = false, edge = false;
      for (const auto& ring : rings) {
        const std::size_t n = ring.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
          const auto &pi = ring[i], &pj = ring[j];
          if (on_segment(x, y, pj, pi)) edge = true;
          if ((pi.y() > y) != (pj.y() > y) && x < (pj.x() - pi.x()) * (y - pi.y()) / (pj.y() - pi.y()) + pi.x())
            inside = !inside;
        }
      }
      out(r, c) = inside || edge;
    }
  return out;
}

/// Flood-fill component count.
inline int components(const BinaryMask& m, bool value, bool eight) {
  std::vector<char> seen(static_cast<std::size_t>(m.size()), 0);
  int count = 0;
  for (Index r0 = 0; r0 < m.rows(); ++r0)
    for (Index c0 = 0; c0 < m.cols(); ++c0) {
      if (m(r0, c0) != value || seen[r0 * m.cols() + c0]) continue;
      ++count;
      std::queue<std::pair<Index, Index>> q;
      q.push({r0, c0});
      seen[r0 * m.cols() + c0] = 1;
      while (!q.empty()) {
        auto [r, c] = q.front();
        q.pop();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if ((dr == 0 && dc == 0) || (!eight && dr != 0 && dc != 0)) continue;
            const Index rr = r + dr, cc = c + dc;
            if (rr < 0 || cc < 0 || rr >= m.rows() || cc >= m.cols()) continue;
            if (m(rr, cc) != value || seen[rr * m.cols() + cc]) continue;
            seen[rr * m.cols() + cc] = 1;
            q.push({rr, cc});
          }
      }
    }
  return count;
}

/// Dilation/erosion by the disk dx^2 + dy^2 <= r^2, ignoring off-image pixels.
inline BinaryMask dilate(const BinaryMask& m, int radius) {
  BinaryMask out = BinaryMask::Constant(m.rows(), m.cols(), false);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c)
      for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
          if (dr * dr + dc * dc > radius * radius) continue;
          const Index rr = r + dr, cc = c + dc;
          if (rr >= 0 && cc >= 0 && rr < m.rows() && cc < m.cols() && m(rr, cc)) out(r, c) = true;
        }
  return out;
}

inline BinaryMask erode(const BinaryMask& m, int radius) {
  BinaryMask out = BinaryMask::Constant(m.rows(), m.cols(), false);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      bool all = true;
      for (int dr = -radius; dr <= radius && all; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
          if (dr * dr + dc * dc > radius * radius) continue;
          const Index rr = r + dr, cc = c + dc;
          if (rr >= 0 && cc >= 0 && rr < m.rows() && cc < m.cols() && !m(rr, cc)) {
            all = false;
            break;
          }
        }
      out(r, c) = all;
    }
  return out;
}

inline BinaryMask random_mask(std::mt19937_64& rng, Index rows, Index cols, double p) {
  std::bernoulli_distribution bit(p);
  BinaryMask m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = bit(rng);
  return m;
}

inline Plane<double> random_plane(std::mt19937_64& rng, Index rows, Index cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Plane<double> p(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) p(r, c) = u(rng);
  return p;
}

inline BinaryMask box(Index rows, Index cols, Index r0, Index c0, Index h, Index w) {
  BinaryMask m = BinaryMask::Constant(rows, cols, false);
  m.block(r0, c0, h, w).setConstant(true);
  return m;
}

}  // namespace oracle
