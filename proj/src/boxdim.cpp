#include "slicedim/boxdim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "slicedim/error.hpp"

namespace slicedim {

namespace {

constexpr double kSideTol = 1e-9;

std::size_t count_distinct_cells(const PointSet& points, double side) {
  const auto n = static_cast<std::size_t>(points.dim());
  if (points.empty()) return 0;
  if (n > 4) throw std::invalid_argument("box_count: dimension above 4");
  std::vector<std::array<std::int64_t, 4>> keys(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points[i];
    std::array<std::int64_t, 4> k{};
    for (std::size_t d = 0; d < n; ++d) k[d] = static_cast<std::int64_t>(std::floor(p[d] / side));
    keys[i] = k;
  }
  std::sort(keys.begin(), keys.end());
  return static_cast<std::size_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

}  // namespace

std::vector<std::int64_t> DyadicCover::keys() const {
  std::vector<std::int64_t> out(centers.coords().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::llround(centers.coords()[i] / cube_side - 0.5);
  }
  return out;
}

DyadicCover cover_from_ifs(const IfsSpec& ifs, int generation, std::size_t budget) {
  PointSet corners = generation_corners(ifs, generation, budget);
  const double side = std::pow(ifs.ratio, generation);
  std::vector<double> coords = corners.coords();
  for (double& c : coords) c += 0.5 * side;
  return DyadicCover{ifs.ambient_dim, generation, 1.0 / ifs.ratio, side, PointSet(ifs.ambient_dim, std::move(coords))};
}

DyadicCover cover_from_points(const PointSet& points, double side) {
  if (!(side > 0.0)) throw std::invalid_argument("cover_from_points: side must be positive");
  const auto n = static_cast<std::size_t>(points.dim());
  std::vector<std::vector<std::int64_t>> keys;
  keys.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<std::int64_t> k(n);
    for (std::size_t d = 0; d < n; ++d) k[d] = static_cast<std::int64_t>(std::floor(points[i][d] / side));
    keys.push_back(std::move(k));
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  PointSet centers(points.dim());
  centers.reserve(keys.size());
  std::vector<double> c(n);
  for (const auto& k : keys) {
    for (std::size_t d = 0; d < n; ++d) c[d] = (static_cast<double>(k[d]) + 0.5) * side;
    centers.push_back(c);
  }
  return DyadicCover{points.dim(), 1, 1.0 / side, side, std::move(centers)};
}

DyadicCover product_cover(const DyadicCover& a, const DyadicCover& b, std::size_t budget) {
  if (b.size() != 0 && a.size() > budget / b.size()) {
    std::ostringstream msg;
    msg << "product_cover: " << a.size() << " x " << b.size() << " cubes exceed the atom budget of " << budget
        << " (raise --budget-atoms or lower the generations)";
    throw BudgetError(msg.str());
  }
  const int n = a.ambient_dim + b.ambient_dim;
  PointSet centers(n);
  centers.reserve(a.size() * b.size());
  std::vector<double> p(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::copy(a.centers[i].begin(), a.centers[i].end(), p.begin());
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::copy(b.centers[j].begin(), b.centers[j].end(), p.begin() + a.ambient_dim);
      centers.push_back(p);
    }
  }
  const double side = std::max(a.cube_side, b.cube_side);
  return DyadicCover{n, 1, 1.0 / side, side, std::move(centers)};
}

std::size_t box_count(const PointSet& points, double side) {
  if (!(side > 0.0)) throw std::invalid_argument("box_count: side must be positive");
  return count_distinct_cells(points, side);
}

std::size_t box_count(const DyadicCover& cover, double side) {
  if (side < cover.cube_side * (1.0 - kSideTol)) {
    std::ostringstream msg;
    msg << "box_count: side " << side << " is finer than the cover resolution " << cover.cube_side;
    throw ResolutionError(msg.str());
  }
  return box_count(cover.centers, side);
}

std::vector<ScaleCount> count_sweep(const PointSet& points, std::span<const double> sides) {
  std::vector<ScaleCount> out(sides.size());
  for (std::size_t i = 0; i < sides.size(); ++i) out[i] = {sides[i], box_count(points, sides[i])};
  return out;
}

std::vector<double> dyadic_sides(double top, double bottom) {
  if (!(top > 0.0) || !(bottom > 0.0)) throw std::invalid_argument("dyadic_sides: sides must be positive");
  std::vector<double> sides;
  for (double s = top; s >= bottom * (1.0 - kSideTol); s *= 0.5) sides.push_back(s);
  return sides;
}

DimFit dim_fit(std::span<const ScaleCount> counts) {
  if (counts.size() < 4) throw std::invalid_argument("dim_fit: fewer than 4 scales");
  std::vector<double> x, y;
  double lo = counts.front().side, hi = counts.front().side;
  for (const auto& c : counts) {
    if (c.count == 0) throw std::invalid_argument("dim_fit: counts must be positive");
    if (!(c.side > 0.0)) throw std::invalid_argument("dim_fit: sides must be positive");
    x.push_back(-std::log(c.side));
    y.push_back(std::log(static_cast<double>(c.count)));
    lo = std::min(lo, c.side);
    hi = std::max(hi, c.side);
  }
  return fit_line(x, y, {lo, hi});
}

PointSet slice_set(const DyadicCover& cover, const Projection& p, std::span<const double> u, double delta) {
  if (p.source_dim() != cover.ambient_dim) throw std::invalid_argument("slice_set: dimension mismatch");
  if (delta < cover.cube_side * (1.0 - kSideTol)) {
    std::ostringstream msg;
    msg << "slice_set: delta " << delta << " is below the cube side " << cover.cube_side;
    throw ResolutionError(msg.str());
  }
  const auto m = static_cast<std::size_t>(p.target_dim());
  std::vector<double> pu(m);
  PointSet out(cover.ambient_dim);
  const double d2 = delta * delta;
  for (std::size_t i = 0; i < cover.size(); ++i) {
    p.apply(cover.centers[i], pu);
    double dist2 = 0.0;
    for (std::size_t d = 0; d < m; ++d) dist2 += (pu[d] - u[d]) * (pu[d] - u[d]);
    if (dist2 <= d2) out.push_back(cover.centers[i]);
  }
  return out;
}

PointSet fiber_coordinates(const PointSet& points, const Projection& p) {
  const Eigen::MatrixXd basis = p.kernel_basis();
  const auto k = static_cast<std::size_t>(basis.rows());
  if (k == 0) throw std::invalid_argument("fiber_coordinates: projection has trivial kernel");
  PointSet out(static_cast<int>(k), std::vector<double>(points.size() * k));
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto x = points[i];
    auto y = out.mutable_point(i);
    for (std::size_t r = 0; r < k; ++r) {
      double v = 0.0;
      for (std::size_t d = 0; d < x.size(); ++d) v += basis(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(d)) * x[d];
      y[r] = v;
    }
  }
  return out;
}

IntersectionIndex::IntersectionIndex(const DyadicCover& a, double delta)
    : a_(&a), delta_(delta), hash_(std::make_unique<GridHash>(a.centers, delta)) {
  if (delta < a.cube_side * (1.0 - kSideTol)) {
    std::ostringstream msg;
    msg << "intersect_sets: delta " << delta << " is below the cube side " << a.cube_side;
    throw ResolutionError(msg.str());
  }
}

std::vector<char> IntersectionIndex::marks(const DyadicCover& b, const Rotation& g, std::span<const double> z) const {
  const auto n = static_cast<std::size_t>(a_->ambient_dim);
  if (b.ambient_dim != a_->ambient_dim || g.dim() != a_->ambient_dim || z.size() != n) {
    throw std::invalid_argument("intersect_sets: dimension mismatch");
  }
  const double ratio = a_->cube_side / b.cube_side;
  if (ratio > 4.0 || ratio < 0.25) throw std::invalid_argument("intersect_sets: cube sides differ by more than 4x");
  if (delta_ < b.cube_side * (1.0 - kSideTol)) {
    std::ostringstream msg;
    msg << "intersect_sets: delta " << delta_ << " is below the cube side " << b.cube_side;
    throw ResolutionError(msg.str());
  }
  std::vector<char> hit(a_->size(), 0);
  std::vector<double> y(n);
  for (std::size_t j = 0; j < b.size(); ++j) {
    g.apply(b.centers[j], y);
    for (std::size_t d = 0; d < n; ++d) y[d] += z[d];
    hash_->for_each_within(y, delta_, [&](std::size_t i) { hit[i] = 1; });
  }
  return hit;
}

PointSet IntersectionIndex::intersect(const DyadicCover& b, const Rotation& g, std::span<const double> z) const {
  const auto hit = marks(b, g, z);
  PointSet out(a_->ambient_dim);
  for (std::size_t i = 0; i < hit.size(); ++i) {
    if (hit[i]) out.push_back(a_->centers[i]);
  }
  return out;
}

std::size_t IntersectionIndex::count(const DyadicCover& b, const Rotation& g, std::span<const double> z) const {
  const auto hit = marks(b, g, z);
  return static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
}

PointSet intersect_sets(const DyadicCover& a, const DyadicCover& b, const Rotation& g, std::span<const double> z,
                        double delta) {
  return IntersectionIndex(a, delta).intersect(b, g, z);
}

SetDimension estimate_dimension(const PointSet& points, double top, double bottom, int min_scales) {
  SetDimension out;
  out.points = points.size();
  if (points.empty()) {
    out.reason = "empty";
    return out;
  }
  const auto sides = dyadic_sides(top, bottom);
  if (static_cast<int>(sides.size()) < min_scales) {
    std::ostringstream msg;
    msg << "only " << sides.size() << " scales between " << bottom << " and " << top;
    out.reason = msg.str();
    return out;
  }
  out.counts = count_sweep(points, sides);
  out.fit = dim_fit(out.counts);
  out.estimated = true;
  return out;
}

void write_cover_csv(std::ostream& out, const DyadicCover& cover) {
  const auto n = static_cast<std::size_t>(cover.ambient_dim);
  for (std::size_t d = 0; d < n; ++d) out << "k" << d << ",";
  for (std::size_t d = 0; d < n; ++d) out << "x" << d << (d + 1 < n ? "," : "\n");
  const auto keys = cover.keys();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cover.size(); ++i) {
    for (std::size_t d = 0; d < n; ++d) out << keys[i * n + d] << ",";
    for (std::size_t d = 0; d < n; ++d) out << cover.centers[i][d] << (d + 1 < n ? "," : "\n");
  }
}

void write_counts_csv(std::ostream& out, std::span<const ScaleCount> counts) {
  out << "side,count\n" << std::setprecision(17);
  for (const auto& c : counts) out << c.side << "," << c.count << "\n";
}

}  // namespace slicedim
