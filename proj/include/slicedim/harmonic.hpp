#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "slicedim/fit.hpp"
#include "slicedim/measure.hpp"

namespace slicedim {

/// mu^(x) = sum_j w_j exp(-2 pi i x . y_j), evaluated atom by atom.
std::complex<double> fourier_transform(const DiscreteMeasure& mu, std::span<const double> x);

/// Repeated evaluation of a measure's Fourier transform. Natural self-similar
/// measures use the finite product over generations (k N terms instead of
/// N^k); anything else sums atoms. Holds a reference: `mu` must outlive it.
class FourierTransform {
 public:
  explicit FourierTransform(const DiscreteMeasure& mu, bool use_structure = true);

  std::complex<double> operator()(std::span<const double> x) const;
  /// |mu^(x)|^2
  double power(std::span<const double> x) const;

  int dim() const { return mu_->ambient_dim(); }
  const DiscreteMeasure& measure() const { return *mu_; }

 private:
  const DiscreteMeasure* mu_;
  bool product_form_;
  /// Corner layout: each level factors into prod_d e^(-pi i a_d) cos(pi a_d).
  bool corner_form_ = false;
  double corner_step_ = 0.0;
};

/// prod_d sinc^2(pi h x_d): the squared transform of the uniform probability
/// on a cube of side h. Converts an atom quadrature into its cell measure.
double cell_form_factor(std::span<const double> x, double h);

/// c(n, s) with I_s(mu) = c(n, s) * integral |mu^(x)|^2 |x|^(s-n) dx,
/// i.e. pi^(s - n/2) Gamma((n-s)/2) / Gamma(s/2). Requires 0 < s < n.
double riesz_constant(int n, double s);

/// s-energy of the cell measure represented by mu (each atom spread
/// uniformly over its cell):
///   - pairs of cells closer than three cell widths use the exact mean kernel
///     between the two cubes (a tensor quadrature);
///   - other pairs use |y_j - y_l|^-s;
///   - each cell's self-interaction is w_j^2 h^-s E|U - V|^-s with U, V
///     uniform on the unit cube (exact radial integral, tensor rule in angle).
/// Throws for cell_size = 0 (atoms have infinite energy) and for s >= n.
double energy_spatial(const DiscreteMeasure& mu, double s);

/// Truncation domain for frequency integrals: nodes k * spacing with
/// |k spacing| <= cutoff.
struct FrequencyGrid {
  int ambient_dim = 1;
  double cutoff = 1.0;
  double spacing = 0.1;

  /// Rounds the spacing down so cutoff / spacing is a power of two.
  static FrequencyGrid make(int n, double cutoff, double max_spacing);
  /// Default spacing 1/(8 diameter) for a support of the given diameter.
  static FrequencyGrid for_support(int n, double cutoff, double diameter);

  long half_width() const;
};

/// Nodes allowed on a single frequency grid.
inline constexpr std::size_t kFrequencyNodeBudget = std::size_t{1} << 27;

/// c(n, s) sum over the grid of |mu^(x)|^2 F(x) w(x), where F is the cell form
/// factor and w(x) integrates |x|^(s-n) over the node's grid cell: exactly for
/// the origin cell, by tensor quadrature within three cells of it, and by the
/// midpoint rule elsewhere. Throws ResolutionError when
/// spacing > 1/(4 diameter).
double energy_fourier(const DiscreteMeasure& mu, double s, const FrequencyGrid& grid);

/// Sphere nodes needed to resolve |nu^|^2 on the sphere of radius r for a
/// support of the given diameter: 2 pi r D + 8 on the circle, (2 pi r D)^2 + 16
/// Fibonacci nodes on S^2.
int required_sphere_nodes(int n, double r, double diameter);
int default_sphere_nodes(int n, double r, double diameter);

/// Integral of F(r v) |nu^(r v)|^2 over the unit sphere with unnormalised
/// surface measure. Equal angles on S^1, a Fibonacci lattice on S^2. No
/// guards; F is the cell form factor when `cell` > 0.
double sphere_integral(const FourierTransform& ft, double r, int nodes, double cell = 0.0);

/// sigma(nu)(r) for n in {2, 3}, r > 1. `nodes` = 0 picks the default;
/// fewer than required_sphere_nodes is rejected.
double spherical_average(const DiscreteMeasure& nu, double r, int nodes = 0);

struct SphericalSample {
  double r = 0.0;
  double value = 0.0;
  int nodes = 0;
};

std::vector<SphericalSample> spherical_sweep(const DiscreteMeasure& nu, std::span<const double> r_values,
                                             int nodes = 0);

/// Least-squares slope of log sigma(nu)(r) against log r. Requires at least
/// four radii and max r <= 1/(4 cell_size).
DimFit decay_exponent_fit(const DiscreteMeasure& nu, std::span<const double> r_values, int nodes = 0);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_error = 0.0;
  std::size_t grid_nodes = 0;
  int rotation_samples = 0;
};

/// Compares the Haar average over g of  sum_x |mu^(x)|^2 |nu^(-g^-1 x)|^2  with
/// sum_x |mu^(x)|^2 sigma(nu)(|x|) / |S^(n-1)|  on the same grid (cell volume
/// spacing^n, ball of radius cutoff).
IdentityCheck rotation_average_identity_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              int rotation_samples, const FrequencyGrid& grid,
                                              std::uint64_t seed);

/// Integral over r_lo < |x| < r_hi of |mu^(x)|^2 F(x) |x|^-beta, by radial
/// Gauss-Legendre panels (width 1/diameter) of sphere integrals.
double radial_weighted_integral(const DiscreteMeasure& mu, double beta, double r_lo, double r_hi);

/// Surface measure of the unit sphere S^(n-1).
double sphere_area(int n);

}  // namespace slicedim
