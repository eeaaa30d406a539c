#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "slicedim/fit.hpp"
#include "slicedim/geometry.hpp"
#include "slicedim/grid_hash.hpp"
#include "slicedim/measure.hpp"

namespace slicedim {

/// Cubes of side base^-generation covering a set, stored by their centres.
/// Covers not produced by an IFS use generation 1 and base 1/cube_side.
struct DyadicCover {
  int ambient_dim = 0;
  int generation = 0;
  double base = 2.0;
  double cube_side = 1.0;
  PointSet centers;

  std::size_t size() const { return centers.size(); }
  bool empty() const { return centers.empty(); }
  /// Lattice coordinates round(center / cube_side - 1/2), row-major.
  std::vector<std::int64_t> keys() const;
};

/// The N^k generation-k cells of the IFS.
DyadicCover cover_from_ifs(const IfsSpec& ifs, int generation, std::size_t budget = kDefaultAtomBudget);
/// Grid cubes of the given side meeting the points.
DyadicCover cover_from_points(const PointSet& points, double side);
/// All pairs of cubes; side is the larger of the two.
DyadicCover product_cover(const DyadicCover& a, const DyadicCover& b, std::size_t budget = kDefaultAtomBudget);

/// Number of grid cubes [k side, (k+1) side) containing at least one point.
std::size_t box_count(const PointSet& points, double side);
/// As above on the cover's centres. Sides below cube_side are rejected.
std::size_t box_count(const DyadicCover& cover, double side);

struct ScaleCount {
  double side = 0.0;
  std::size_t count = 0;
};

std::vector<ScaleCount> count_sweep(const PointSet& points, std::span<const double> sides);

/// top, top/2, ... down to no less than `bottom`.
std::vector<double> dyadic_sides(double top, double bottom);

/// Slope of log count against log(1/side). Needs four scales and positive counts.
DimFit dim_fit(std::span<const ScaleCount> counts);

/// Centres x of the cover with |P x - u| <= delta. Requires delta >= cube_side.
PointSet slice_set(const DyadicCover& cover, const Projection& p, std::span<const double> u, double delta);

/// Coordinates of the points in an orthonormal basis of ker P.
PointSet fiber_coordinates(const PointSet& points, const Projection& p);

/// A-side of repeated intersection queries: a grid hash over A's centres with
/// cell delta, built once.
class IntersectionIndex {
 public:
  IntersectionIndex(const DyadicCover& a, double delta);

  double delta() const { return delta_; }
  /// Centres of A within delta of some g b + z, b a centre of B, in A's order.
  PointSet intersect(const DyadicCover& b, const Rotation& g, std::span<const double> z) const;
  /// Only the number of surviving centres.
  std::size_t count(const DyadicCover& b, const Rotation& g, std::span<const double> z) const;

 private:
  std::vector<char> marks(const DyadicCover& b, const Rotation& g, std::span<const double> z) const;

  const DyadicCover* a_;
  double delta_;
  std::unique_ptr<GridHash> hash_;
};

/// A intersected with (g B + z) at resolution delta. Cube sides must agree
/// within a factor of 4 and delta must be at least the larger side.
PointSet intersect_sets(const DyadicCover& a, const DyadicCover& b, const Rotation& g, std::span<const double> z,
                        double delta);

/// Box-counting estimate for a finite-resolution set.
struct SetDimension {
  bool estimated = false;
  std::string reason;
  std::size_t points = 0;
  std::vector<ScaleCount> counts;
  DimFit fit;
};

/// Counts over dyadic_sides(top, bottom) and fits when at least `min_scales`
/// sides are available and the set is nonempty.
SetDimension estimate_dimension(const PointSet& points, double top, double bottom, int min_scales = 4);

/// One row per cube: lattice keys then centre coordinates.
void write_cover_csv(std::ostream& out, const DyadicCover& cover);
void write_counts_csv(std::ostream& out, std::span<const ScaleCount> counts);

}  // namespace slicedim
