#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slicedim/measure.hpp"

namespace slicedim {

/// Orthogonal n x n matrix; a sample from O(n).
class Rotation {
 public:
  explicit Rotation(Eigen::MatrixXd matrix);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  double determinant() const { return matrix_.determinant(); }
  Rotation inverse() const { return Rotation(matrix_.transpose()); }

  void apply(std::span<const double> x, std::span<double> out) const;
  PointSet apply(const PointSet& points) const;

 private:
  Eigen::MatrixXd matrix_;
};

/// Haar sample from O(n): QR of a Gaussian matrix with the signs of R's
/// diagonal folded into Q. Deterministic in (seed, index).
Rotation random_rotation(int n, std::uint64_t seed, std::uint64_t index);

/// Linear map R^n -> R^m with orthonormal rows.
class Projection {
 public:
  explicit Projection(Eigen::MatrixXd rows);

  int source_dim() const { return static_cast<int>(rows_.cols()); }
  int target_dim() const { return static_cast<int>(rows_.rows()); }
  const Eigen::MatrixXd& rows() const { return rows_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  /// Orthonormal basis of the kernel, one row per vector ((n-m) x n).
  Eigen::MatrixXd kernel_basis() const;

 private:
  Eigen::MatrixXd rows_;
};

enum class FamilyKind {
  grassmannian,       ///< Haar-random m-frame in R^n
  difference,         ///< (x, y) -> (x - g y)/sqrt(2), g Haar in O(n)
  scaled_difference,  ///< (x, y) -> (x - t y)/sqrt(1 + t^2), t uniform
  fixed,              ///< a single projection with a point-mass parameter measure
};

/// A projection family together with its parameter measure.
struct ProjectionFamily {
  FamilyKind kind = FamilyKind::grassmannian;
  int source_dim = 2;
  int target_dim = 1;
  std::uint64_t seed = 0;
  double t_lo = 0.5;
  double t_hi = 2.0;
  std::optional<Projection> fixed_projection;

  static ProjectionFamily grassmannian(int n, int m, std::uint64_t seed);
  static ProjectionFamily difference(int n, std::uint64_t seed);
  static ProjectionFamily scaled_difference(int n, std::uint64_t seed, double t_lo = 0.5, double t_hi = 2.0);
  static ProjectionFamily fixed(Projection p);
};

struct ProjectionSample {
  Projection projection;
  /// Factor mapping the orthonormal projection back to the family's raw map,
  /// e.g. sqrt(2) for x - g(y).
  double scale = 1.0;
  /// Angle (grassmannian, n = 2), t (scaled difference) or the row-major
  /// rotation entries (difference).
  std::vector<double> parameters;
};

ProjectionSample sample_projection(const ProjectionFamily& family, std::uint64_t index);

Projection difference_projection(const Rotation& g);
Projection scaled_difference_projection(int n, double t);
/// Unit vector (cos angle, sin angle) as a projection R^2 -> R.
Projection line_projection(double angle);

/// Volume of the unit ball in R^m.
double unit_ball_volume(int m);

DiscreteMeasure project_pushforward(const Projection& p, const DiscreteMeasure& mu);

/// alpha(m)^-1 delta^-m nu(B(u, delta)). Requires delta >= 2 cell_size.
double density_at(const DiscreteMeasure& nu, std::span<const double> u, double delta);

struct L2Estimate {
  double value = 0.0;
  std::vector<double> per_sample;
};

/// Monte Carlo over the family of the u-grid sum of D(P#mu, u)^2 times the
/// grid cell volume: an estimate of the double integral of the squared
/// projected density.
L2Estimate l2_density_functional(const ProjectionFamily& family, const DiscreteMeasure& mu,
                                 int lambda_samples, double delta, double u_spacing);

struct L2Sweep {
  std::vector<double> deltas;
  std::vector<double> values;
  double max_relative_change = 0.0;
  bool stable(double tolerance) const { return max_relative_change <= tolerance; }
};

/// The functional at delta, delta/2, ... (`halvings` halvings) with the
/// u-spacing tied to delta.
L2Sweep l2_delta_sweep(const ProjectionFamily& family, const DiscreteMeasure& mu, int lambda_samples,
                       double delta, int halvings);

/// Grid measure with cell weights alpha(n)^-1 delta^-n mu(B(c, delta)) |cell|.
/// Cells are [k h, (k+1) h]^n; `region` (default: support + delta) clips the grid.
DiscreteMeasure mollify(const DiscreteMeasure& mu, double delta, double spacing,
                        const std::optional<Box>& region = std::nullopt,
                        std::size_t budget = kDefaultAtomBudget);

/// r^-s T_{a,r}#(mu restricted to B(a, r)) with T_{a,r}(x) = (x - a)/r.
DiscreteMeasure rescale(const DiscreteMeasure& mu, std::span<const double> a, double r, double s);

/// mu({y in B(x, r) : |P(y - x)| <= delta}). Requires delta >= 2 cell_size.
double tube_mass(const DiscreteMeasure& mu, const Projection& p, std::span<const double> x, double r,
                 double delta);

/// r^-t delta^-m tube_mass with m the projection's target dimension.
double tube_ratio(const DiscreteMeasure& mu, const Projection& p, std::span<const double> x, double r,
                  double delta, double t);

struct TubeSample {
  double r = 0.0;
  double delta = 0.0;
  double mass = 0.0;
  double ratio = 0.0;
};

/// tube_ratio over every (r, delta) pair.
std::vector<TubeSample> tube_sweep(const DiscreteMeasure& mu, const Projection& p, std::span<const double> x,
                                   std::span<const double> radii, std::span<const double> deltas, double t);

}  // namespace slicedim
