#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace slicedim {

/// Flat, row-major list of points in R^dim.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int dim) : dim_(dim) {}
  PointSet(int dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    assert(dim_ > 0 && coords_.size() % static_cast<std::size_t>(dim_) == 0);
  }

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ == 0 ? 0 : coords_.size() / static_cast<std::size_t>(dim_); }
  bool empty() const { return coords_.empty(); }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }
  std::span<double> mutable_point(std::size_t i) {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  void push_back(std::span<const double> p) {
    assert(static_cast<int>(p.size()) == dim_);
    coords_.insert(coords_.end(), p.begin(), p.end());
  }
  void reserve(std::size_t n) { coords_.reserve(n * static_cast<std::size_t>(dim_)); }

  const std::vector<double>& coords() const { return coords_; }

 private:
  int dim_ = 0;
  std::vector<double> coords_;
};

/// Axis-aligned box [lo, hi].
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double diagonal() const;
  bool contains(std::span<const double> p) const;
  Box expanded(double margin) const;
};

Box bounding_box(const PointSet& points);

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    d2 += d * d;
  }
  return d2;
}

}  // namespace slicedim
