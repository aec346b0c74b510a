#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

namespace vosteer::detail {

// Uniform-grid index over 2D points answering bounded nearest-neighbour
// queries. Ties on distance resolve to the lowest point index, matching a
// linear scan with strict comparison.
class NearestIndex {
 public:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  NearestIndex(std::vector<double> xs, std::vector<double> ys, double cell = 1.0)
      : xs_(std::move(xs)), ys_(std::move(ys)), cell_(cell) {
    for (std::size_t i = 0; i < xs_.size(); ++i) cells_[key(cell_of(xs_[i]), cell_of(ys_[i]))].push_back(i);
  }

  struct Hit {
    std::size_t index = kNone;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  // Nearest point within max_radius (kNone when there is none).
  Hit nearest(double x, double y, double max_radius) const {
    Hit best;
    const std::int64_t cx = cell_of(x);
    const std::int64_t cy = cell_of(y);
    const auto max_ring = static_cast<std::int64_t>(std::ceil(max_radius / cell_)) + 1;
    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
      // Every point in ring r+1 or beyond is at least r*cell away.
      if (best.index != kNone) {
        const double reach = static_cast<double>(ring - 1) * cell_;
        if (ring > 0 && reach * reach > best.dist2) break;
      }
      for (std::int64_t gx = cx - ring; gx <= cx + ring; ++gx) {
        for (std::int64_t gy = cy - ring; gy <= cy + ring; ++gy) {
          if (std::max(std::abs(gx - cx), std::abs(gy - cy)) != ring) continue;
          auto it = cells_.find(key(gx, gy));
          if (it == cells_.end()) continue;
          for (std::size_t i : it->second) {
            const double dx = xs_[i] - x;
            const double dy = ys_[i] - y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < best.dist2 || (d2 == best.dist2 && i < best.index)) best = {i, d2};
          }
        }
      }
    }
    if (best.index != kNone && best.dist2 > max_radius * max_radius) return {};
    return best;
  }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::int64_t key(std::int64_t gx, std::int64_t gy) { return gx * 73856093LL ^ gy * 19349663LL; }

  std::vector<double> xs_;
  std::vector<double> ys_;
  double cell_;
  // Distinct cells may share a hashed key; buckets simply hold both.
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

}  // namespace vosteer::detail
