#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "slicedim/point_set.hpp"

namespace slicedim {

/// Uniform-grid bucket index over a point set in R^n, n <= 4, for radius
/// queries. Points are stored bucket by bucket; queries visit the buckets
/// overlapping the query ball's bounding box.
class GridHash {
 public:
  static constexpr int kMaxDim = 4;
  using Key = std::array<std::int64_t, kMaxDim>;

  GridHash(const PointSet& points, double cell);

  int dim() const { return points_->dim(); }
  double cell() const { return cell_; }

  /// Calls fn(index) for every point p with |p - q| <= radius, in storage
  /// order of the visited buckets.
  template <class F>
  void for_each_within(std::span<const double> q, double radius, F&& fn) const {
    const int n = dim();
    Key lo{}, hi{}, k{};
    for (int d = 0; d < n; ++d) {
      lo[d] = static_cast<std::int64_t>(std::floor((q[d] - radius) / cell_));
      hi[d] = static_cast<std::int64_t>(std::floor((q[d] + radius) / cell_));
      k[d] = lo[d];
    }
    const double r2 = radius * radius;
    for (;;) {
      auto it = buckets_.find(k);
      if (it != buckets_.end()) {
        for (std::uint32_t j = it->second.first; j < it->second.second; ++j) {
          const std::size_t idx = order_[j];
          if (squared_distance((*points_)[idx], q) <= r2) fn(idx);
        }
      }
      int d = 0;
      for (; d < n; ++d) {
        if (k[d] < hi[d]) {
          ++k[d];
          break;
        }
        k[d] = lo[d];
      }
      if (d == n) return;
    }
  }

  /// Whether any point lies within `radius` of q.
  bool any_within(std::span<const double> q, double radius) const;

 private:
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  const PointSet* points_;
  double cell_;
  std::vector<std::uint32_t> order_;
  std::unordered_map<Key, std::pair<std::uint32_t, std::uint32_t>, KeyHash> buckets_;
};

}  // namespace slicedim
