#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "slicedim/fit.hpp"
#include "slicedim/parallel.hpp"
#include "slicedim/point_set.hpp"
#include "slicedim/rng.hpp"

namespace slicedim {

double Box::diagonal() const {
  double d2 = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) d2 += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(d2);
}

bool Box::contains(std::span<const double> p) const {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  }
  return true;
}

Box Box::expanded(double margin) const {
  Box b = *this;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    b.lo[i] -= margin;
    b.hi[i] += margin;
  }
  return b;
}

Box bounding_box(const PointSet& points) {
  Box box;
  if (points.empty()) {
    box.lo.assign(static_cast<std::size_t>(points.dim()), 0.0);
    box.hi = box.lo;
    return box;
  }
  box.lo.assign(static_cast<std::size_t>(points.dim()), std::numeric_limits<double>::infinity());
  box.hi.assign(static_cast<std::size_t>(points.dim()), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points[i];
    for (std::size_t d = 0; d < p.size(); ++d) {
      box.lo[d] = std::min(box.lo[d], p[d]);
      box.hi[d] = std::max(box.hi[d], p[d]);
    }
  }
  return box;
}

// rng ------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ index);
}

double Rng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  // Rejection keeps the draw exactly uniform.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

// parallel -------------------------------------------------------------------

namespace {
std::atomic<int> g_workers{1};
}

int default_workers() { return g_workers.load(); }
void set_default_workers(int workers) { g_workers.store(std::max(1, workers)); }

// fit ------------------------------------------------------------------------

DimFit fit_line(std::span<const double> x, std::span<const double> y,
                std::pair<double, double> scale_range) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("fit_line: need at least two (x, y) pairs");
  }
  auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: abscissae are all equal");

  DimFit fit;
  fit.point_count = static_cast<int>(x.size());
  fit.scale_range = {std::min(scale_range.first, scale_range.second),
                     std::max(scale_range.first, scale_range.second)};
  if (syy <= 1e-24 * std::max(1.0, my * my)) {
    fit.slope = 0.0;
    fit.intercept = my;
    fit.r_squared = 0.0;
    fit.degenerate = true;
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

}  // namespace slicedim
