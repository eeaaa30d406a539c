#include "slicedim/grid_hash.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "slicedim/rng.hpp"

namespace slicedim {

std::size_t GridHash::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto c : k) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  return static_cast<std::size_t>(h);
}

GridHash::GridHash(const PointSet& points, double cell) : points_(&points), cell_(cell) {
  if (points.dim() < 1 || points.dim() > kMaxDim) {
    throw std::invalid_argument("GridHash: dimension must be between 1 and 4");
  }
  if (!(cell > 0.0)) throw std::invalid_argument("GridHash: cell must be positive");
  const std::size_t count = points.size();
  std::vector<Key> keys(count);
  for (std::size_t i = 0; i < count; ++i) {
    Key k{};
    auto p = points[i];
    for (int d = 0; d < points.dim(); ++d) k[d] = static_cast<std::int64_t>(std::floor(p[d] / cell));
    keys[i] = k;
  }
  order_.resize(count);
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
  buckets_.reserve(count);
  std::uint32_t begin = 0;
  for (std::uint32_t j = 1; j <= count; ++j) {
    if (j == count || keys[order_[j]] != keys[order_[begin]]) {
      buckets_.emplace(keys[order_[begin]], std::make_pair(begin, j));
      begin = j;
    }
  }
}

bool GridHash::any_within(std::span<const double> q, double radius) const {
  bool found = false;
  for_each_within(q, radius, [&](std::size_t) { found = true; });
  return found;
}

}  // namespace slicedim
