#pragma once

// Internal quadrature rules and kernel integrals shared by the energy code.

#include <span>
#include <vector>

namespace slicedim::detail {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule with `order` nodes on [a, b].
Rule gauss_legendre(int order, double a, double b);

/// E|U - V|^-s for U, V independent and uniform on the unit cube [0,1]^n.
double same_cell_kernel(int n, double s);

/// Integral of |x|^(s-n) over the centred unit cube [-1/2, 1/2]^n.
double origin_cell_integral(int n, double s);

/// Integral of |x|^(s-n) over the unit cube centred at the integer point k != 0.
double offset_cell_integral(std::span<const int> k, double s);

/// E|d + h (U - V)|^-s for U, V uniform on the unit cube: the mean Riesz
/// kernel between two cells of side h whose centres differ by d.
double cell_pair_kernel(std::span<const double> d, double h, double s);

}  // namespace slicedim::detail
