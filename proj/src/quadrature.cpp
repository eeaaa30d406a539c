#include "quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>

namespace slicedim::detail {

namespace {

template <class F>
void for_each_tensor_node(int dims, const Rule& rule, F&& f) {
  if (dims == 0) {
    f(std::vector<double>{}, 1.0);
    return;
  }
  const std::size_t m = rule.nodes.size();
  std::size_t total = 1;
  for (int d = 0; d < dims; ++d) total *= m;
  std::vector<double> point(static_cast<std::size_t>(dims));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double w = 1.0;
    for (int d = 0; d < dims; ++d) {
      const std::size_t j = rem % m;
      rem /= m;
      point[static_cast<std::size_t>(d)] = rule.nodes[j];
      w *= rule.weights[j];
    }
    f(point, w);
  }
}

// Integral over a in [0,1]^(n-1) of (1 + |a|^2)^(-p/2) * g(a), split into
// two panels per axis so the rule stays accurate on the smooth integrand.
template <class G>
double pyramid_integral(int n, double p, G&& g) {
  const Rule left = gauss_legendre(12, 0.0, 0.5);
  const Rule right = gauss_legendre(12, 0.5, 1.0);
  Rule rule;
  rule.nodes = left.nodes;
  rule.weights = left.weights;
  rule.nodes.insert(rule.nodes.end(), right.nodes.begin(), right.nodes.end());
  rule.weights.insert(rule.weights.end(), right.weights.begin(), right.weights.end());
  double total = 0.0;
  for_each_tensor_node(n - 1, rule, [&](const std::vector<double>& a, double w) {
    double a2 = 0.0;
    for (double x : a) a2 += x * x;
    total += w * std::pow(1.0 + a2, -0.5 * p) * g(a);
  });
  return total;
}

}  // namespace

Rule gauss_legendre(int order, double a, double b) {
  if (order != 20 && order != 12 && order != 10 && order != 8 && order != 6) {
    throw std::invalid_argument("gauss_legendre: unsupported order");
  }
  Rule unit;
  auto expand = [&](const auto& x, const auto& w) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      unit.nodes.push_back(x[i]);
      unit.weights.push_back(w[i]);
      if (x[i] != 0.0) {
        unit.nodes.push_back(-x[i]);
        unit.weights.push_back(w[i]);
      }
    }
  };
  using boost::math::quadrature::gauss;
  switch (order) {
    case 20: expand(gauss<double, 20>::abscissa(), gauss<double, 20>::weights()); break;
    case 12: expand(gauss<double, 12>::abscissa(), gauss<double, 12>::weights()); break;
    case 10: expand(gauss<double, 10>::abscissa(), gauss<double, 10>::weights()); break;
    case 8: expand(gauss<double, 8>::abscissa(), gauss<double, 8>::weights()); break;
    default: expand(gauss<double, 6>::abscissa(), gauss<double, 6>::weights()); break;
  }
  Rule out;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < unit.nodes.size(); ++i) {
    out.nodes.push_back(mid + half * unit.nodes[i]);
    out.weights.push_back(half * unit.weights[i]);
  }
  return out;
}

double same_cell_kernel(int n, double s) {
  if (n < 1 || !(s > 0.0) || s >= n) throw std::invalid_argument("same_cell_kernel: need 0 < s < n");
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find({n, s}); it != cache.end()) return it->second;
  }
  // The difference U - V has density prod(1 - |t_i|) on [-1,1]^n. Fold to
  // the positive orthant, split it into n pyramids by the largest coordinate
  // and write d = rho (1, a): the radial integral of a polynomial times
  // rho^(n-1-s) is exact.
  const double value = std::pow(2.0, n) * n * pyramid_integral(n, s, [&](const std::vector<double>& a) {
    // Coefficients of (1 - rho) * prod_i (1 - rho a_i) in powers of rho.
    std::vector<double> poly{1.0, -1.0};
    for (double ai : a) {
      std::vector<double> next(poly.size() + 1, 0.0);
      for (std::size_t k = 0; k < poly.size(); ++k) {
        next[k] += poly[k];
        next[k + 1] -= ai * poly[k];
      }
      poly = std::move(next);
    }
    double radial = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) radial += poly[k] / (n - s + static_cast<double>(k));
    return radial;
  });
  std::lock_guard lock(mutex);
  cache[{n, s}] = value;
  return value;
}

double origin_cell_integral(int n, double s) {
  if (n < 1 || !(s > 0.0)) throw std::invalid_argument("origin_cell_integral: need s > 0");
  const double radial = std::pow(0.5, s) / s;
  return std::pow(2.0, n) * n * radial * pyramid_integral(n, n - s, [](const std::vector<double>&) { return 1.0; });
}

double offset_cell_integral(std::span<const int> k, double s) {
  const int n = static_cast<int>(k.size());
  // The cell stays at distance >= 1/2 from the origin, so the integrand is
  // smooth; two panels per axis are plenty.
  Rule rule;
  for (double lo : {-0.5, 0.0}) {
    Rule part = gauss_legendre(10, lo, lo + 0.5);
    rule.nodes.insert(rule.nodes.end(), part.nodes.begin(), part.nodes.end());
    rule.weights.insert(rule.weights.end(), part.weights.begin(), part.weights.end());
  }
  double total = 0.0;
  for_each_tensor_node(n, rule, [&](const std::vector<double>& t, double w) {
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) {
      const double x = k[static_cast<std::size_t>(d)] + t[static_cast<std::size_t>(d)];
      r2 += x * x;
    }
    total += w * std::pow(r2, 0.5 * (s - n));
  });
  return total;
}

double cell_pair_kernel(std::span<const double> d, double h, double s) {
  // Per axis the offset t = (U - V)_i has density 1 - |t| on [-1, 1]. On each
  // half, t = +-(1 - v^2) turns the density into 2 v^3 dv and flattens the
  // endpoint singularity that appears for touching cells.
  static const Rule half = [] {
    Rule g = gauss_legendre(10, 0.0, 1.0);
    Rule r;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double v = g.nodes[i];
      r.nodes.push_back(1.0 - v * v);
      r.weights.push_back(g.weights[i] * 2.0 * v * v * v);
    }
    return r;
  }();
  static const Rule full = [] {
    Rule r;
    for (double sign : {-1.0, 1.0}) {
      for (std::size_t i = 0; i < half.nodes.size(); ++i) {
        r.nodes.push_back(sign * half.nodes[i]);
        r.weights.push_back(half.weights[i]);
      }
    }
    return r;
  }();
  const int n = static_cast<int>(d.size());
  double total = 0.0;
  for_each_tensor_node(n, full, [&](const std::vector<double>& t, double w) {
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = d[static_cast<std::size_t>(i)] + h * t[static_cast<std::size_t>(i)];
      r2 += x * x;
    }
    total += w * std::pow(r2, -0.5 * s);
  });
  return total;
}

}  // namespace slicedim::detail
