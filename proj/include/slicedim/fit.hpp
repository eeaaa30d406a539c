#pragma once

#include <span>
#include <utility>

namespace slicedim {

/// Least-squares line through log-log data: the numeric carrier of every
/// dimension estimate and decay exponent.
struct DimFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> scale_range{0.0, 0.0};
  int point_count = 0;
  /// All ordinates equal: slope is 0 and r_squared carries no information.
  bool degenerate = false;

  /// Fits below this r^2 are reported as unreliable.
  static constexpr double kReliableRSquared = 0.95;
  bool reliable() const { return !degenerate && r_squared >= kReliableRSquared; }
};

/// Unweighted least squares of y against x. `scale_range` is recorded as given.
/// Requires at least two points with distinct abscissae.
DimFit fit_line(std::span<const double> x, std::span<const double> y,
                std::pair<double, double> scale_range);

}  // namespace slicedim
