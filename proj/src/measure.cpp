#include "slicedim/measure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "slicedim/error.hpp"
#include "slicedim/parallel.hpp"

namespace slicedim {

namespace {

constexpr double kEps = 1e-12;

std::size_t checked_power(std::size_t base, int exponent, std::size_t budget, const char* what) {
  std::size_t count = 1;
  for (int i = 0; i < exponent; ++i) {
    if (count > budget / base) {
      std::ostringstream msg;
      msg << what << ": " << base << "^" << exponent << " atoms exceed the atom budget of " << budget
          << " (raise --budget-atoms or lower the generation)";
      throw BudgetError(msg.str());
    }
    count *= base;
  }
  return count;
}

void check_radii(std::span<const double> radii, double cell_size) {
  if (radii.empty()) throw std::invalid_argument("radii list is empty");
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("radii must be positive");
    if (r < cell_size * (1.0 - kEps)) {
      std::ostringstream msg;
      msg << "radius " << r << " is below the quadrature cell size " << cell_size;
      throw ResolutionError(msg.str());
    }
  }
}

}  // namespace

// IFS ------------------------------------------------------------------------

IfsSpec make_ifs(double ratio, std::vector<std::vector<double>> offsets) {
  if (!(ratio > 0.0) || ratio > 0.5 + kEps) {
    std::ostringstream msg;
    msg << "IFS ratio " << ratio << " outside (0, 1/2]: branches would overlap";
    throw std::invalid_argument(msg.str());
  }
  if (offsets.size() < 2) throw std::invalid_argument("IFS needs at least two branches");
  const auto n = offsets.front().size();
  if (n == 0) throw std::invalid_argument("IFS offsets must have positive dimension");
  for (const auto& o : offsets) {
    if (o.size() != n) throw std::invalid_argument("IFS offsets have mixed dimensions");
    for (double c : o) {
      if (c < -kEps || c > 1.0 - ratio + kEps) {
        throw std::invalid_argument("IFS offset places a branch outside the unit cube");
      }
    }
  }
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    for (std::size_t j = i + 1; j < offsets.size(); ++j) {
      bool interiors_meet = true;
      for (std::size_t d = 0; d < n; ++d) {
        if (std::abs(offsets[i][d] - offsets[j][d]) >= ratio - kEps) {
          interiors_meet = false;
          break;
        }
      }
      if (interiors_meet) {
        std::ostringstream msg;
        msg << "IFS branches " << i << " and " << j << " overlap at generation 1";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  IfsSpec ifs;
  ifs.ambient_dim = static_cast<int>(n);
  ifs.ratio = std::min(ratio, 0.5);
  ifs.offsets = std::move(offsets);
  ifs.similarity_dim = std::log(static_cast<double>(ifs.offsets.size())) / std::log(1.0 / ifs.ratio);
  return ifs;
}

IfsSpec build_cantor_ifs(int n, double target_dim, BranchLayout layout) {
  if (n < 1) throw std::invalid_argument("ambient dimension must be positive");
  if (!(target_dim > 0.0) || target_dim > n) {
    std::ostringstream msg;
    msg << "target dimension " << target_dim << " outside (0, " << n << "]";
    throw std::invalid_argument(msg.str());
  }
  const std::size_t branches = layout == BranchLayout::corner ? (std::size_t{1} << n)
                                                              : static_cast<std::size_t>(n) + 1;
  const double ratio = std::pow(static_cast<double>(branches), -1.0 / target_dim);
  if (ratio > 0.5 + kEps) {
    std::ostringstream msg;
    msg << "dimension " << target_dim << " needs ratio " << ratio << " > 1/2 with "
        << branches << " branches; the "
        << (layout == BranchLayout::corner ? "corner" : "axis") << " layout in R^" << n
        << " reaches at most dimension " << std::log2(static_cast<double>(branches));
    throw std::invalid_argument(msg.str());
  }
  const double far = 1.0 - std::min(ratio, 0.5);
  std::vector<std::vector<double>> offsets;
  if (layout == BranchLayout::corner) {
    for (std::size_t b = 0; b < branches; ++b) {
      std::vector<double> o(static_cast<std::size_t>(n));
      for (int d = 0; d < n; ++d) o[static_cast<std::size_t>(d)] = ((b >> d) & 1U) ? far : 0.0;
      offsets.push_back(std::move(o));
    }
  } else {
    offsets.emplace_back(static_cast<std::size_t>(n), 0.0);
    for (int d = 0; d < n; ++d) {
      std::vector<double> o(static_cast<std::size_t>(n), 0.0);
      o[static_cast<std::size_t>(d)] = far;
      offsets.push_back(std::move(o));
    }
  }
  IfsSpec ifs = make_ifs(ratio, std::move(offsets));
  // Keep the requested value exactly; it agrees with log N / log(1/r) to rounding.
  ifs.similarity_dim = target_dim;
  return ifs;
}

// DiscreteMeasure ------------------------------------------------------------

DiscreteMeasure::DiscreteMeasure(PointSet atoms, std::vector<double> weights, double cell_size)
    : cell_size_(cell_size) {
  if (atoms.size() != weights.size()) {
    throw std::invalid_argument("DiscreteMeasure: atom and weight counts differ");
  }
  if (cell_size < 0.0) throw std::invalid_argument("DiscreteMeasure: negative cell size");
  bool has_zero = false;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("DiscreteMeasure: invalid weight");
    has_zero = has_zero || w == 0.0;
  }
  if (has_zero) {
    PointSet kept(atoms.dim());
    std::vector<double> kept_weights;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) {
        kept.push_back(atoms[i]);
        kept_weights.push_back(weights[i]);
      }
    }
    atoms = std::move(kept);
    weights = std::move(kept_weights);
  }
  atoms_ = std::move(atoms);
  weights_ = std::move(weights);
  for (double w : weights_) total_mass_ += w;
  bounds_ = bounding_box(atoms_);
}

double DiscreteMeasure::diameter() const {
  if (empty()) return 0.0;
  return bounds_.expanded(0.5 * cell_size_).diagonal();
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("scale factor must be positive");
  std::vector<double> w = weights_;
  for (double& x : w) x *= factor;
  DiscreteMeasure out(atoms_, std::move(w), cell_size_);
  if (structure_) {
    auto s = *structure_;
    s.mass *= factor;
    out.set_structure(std::move(s));
  }
  return out;
}

PointSet generation_corners(const IfsSpec& ifs, int generation, std::size_t budget) {
  if (generation < 0) throw std::invalid_argument("generation must be non-negative");
  const auto n = static_cast<std::size_t>(ifs.ambient_dim);
  const auto branches = static_cast<std::size_t>(ifs.branch_count());
  const std::size_t count = checked_power(branches, generation, budget, "natural measure");

  std::vector<double> current(n, 0.0);
  current.reserve(count * n);
  double scale = 1.0;
  for (int level = 0; level < generation; ++level) {
    const std::size_t parents = current.size() / n;
    std::vector<double> next;
    next.reserve(parents * branches * n);
    for (std::size_t p = 0; p < parents; ++p) {
      for (const auto& o : ifs.offsets) {
        for (std::size_t d = 0; d < n; ++d) next.push_back(current[p * n + d] + scale * o[d]);
      }
    }
    current = std::move(next);
    scale *= ifs.ratio;
  }
  return PointSet(ifs.ambient_dim, std::move(current));
}

DiscreteMeasure natural_measure(const IfsSpec& ifs, int generation, std::size_t budget) {
  PointSet corners = generation_corners(ifs, generation, budget);
  const double cell = std::pow(ifs.ratio, generation);
  std::vector<double> coords = corners.coords();
  for (double& c : coords) c += 0.5 * cell;
  const std::size_t count = corners.size();
  std::vector<double> weights(count, std::pow(static_cast<double>(ifs.branch_count()), -generation));
  DiscreteMeasure mu(PointSet(ifs.ambient_dim, std::move(coords)), std::move(weights), cell);
  mu.set_structure(SelfSimilarStructure{ifs, generation, 1.0});
  return mu;
}

DiscreteMeasure uniform_measure(int n, int cells, double lo, double hi) {
  if (n < 1 || cells < 1 || !(hi > lo)) throw std::invalid_argument("uniform_measure: bad arguments");
  const auto per_axis = static_cast<std::size_t>(cells);
  std::size_t count = 1;
  for (int d = 0; d < n; ++d) {
    if (count > kDefaultAtomBudget * 16 / per_axis) throw BudgetError("uniform_measure: too many cells");
    count *= per_axis;
  }
  const double h = (hi - lo) / cells;
  std::vector<double> coords(count * static_cast<std::size_t>(n));
  std::vector<std::size_t> index(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t rem = i;
    for (int d = n - 1; d >= 0; --d) {
      coords[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(d)] =
          lo + (static_cast<double>(rem % per_axis) + 0.5) * h;
      rem /= per_axis;
    }
  }
  const double w = std::pow(hi - lo, n) / static_cast<double>(count);
  return DiscreteMeasure(PointSet(n, std::move(coords)), std::vector<double>(count, w), h);
}

DiscreteMeasure point_mass(std::vector<double> at, double weight) {
  const int n = static_cast<int>(at.size());
  return DiscreteMeasure(PointSet(n, std::move(at)), {weight}, 0.0);
}

// Restriction and products ---------------------------------------------------

bool region_contains(const Region& region, std::span<const double> p) {
  if (const auto* ball = std::get_if<Ball>(&region)) {
    return squared_distance(p, ball->center) <= ball->radius * ball->radius;
  }
  return std::get<Box>(region).contains(p);
}

DiscreteMeasure restrict(const DiscreteMeasure& mu, const Region& region) {
  PointSet atoms(mu.ambient_dim());
  std::vector<double> weights;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (region_contains(region, mu.atom(i))) {
      atoms.push_back(mu.atom(i));
      weights.push_back(mu.weight(i));
    }
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights), mu.cell_size());
}

DiscreteMeasure product_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu, std::size_t budget) {
  if (!mu.empty() && nu.size() > budget / mu.size()) {
    std::ostringstream msg;
    msg << "product measure needs " << mu.size() << " x " << nu.size()
        << " atoms, exceeding the atom budget of " << budget;
    throw BudgetError(msg.str());
  }
  const int n = mu.ambient_dim() + nu.ambient_dim();
  std::vector<double> coords;
  coords.reserve(mu.size() * nu.size() * static_cast<std::size_t>(n));
  std::vector<double> weights;
  weights.reserve(mu.size() * nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      auto a = mu.atom(i);
      auto b = nu.atom(j);
      coords.insert(coords.end(), a.begin(), a.end());
      coords.insert(coords.end(), b.begin(), b.end());
      weights.push_back(mu.weight(i) * nu.weight(j));
    }
  }
  return DiscreteMeasure(PointSet(n, std::move(coords)), std::move(weights),
                         std::max(mu.cell_size(), nu.cell_size()));
}

// Ball-mass audits -----------------------------------------------------------

std::vector<std::size_t> spread_indices(std::size_t size, std::size_t count) {
  std::vector<std::size_t> out;
  if (size == 0 || count == 0) return out;
  if (count >= size) {
    out.resize(size);
    for (std::size_t i = 0; i < size; ++i) out[i] = i;
    return out;
  }
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back((2 * i + 1) * size / (2 * count));
  return out;
}

std::vector<double> ball_masses(const DiscreteMeasure& mu, std::span<const double> center,
                                std::span<const double> sorted_radii) {
  std::vector<double> buckets(sorted_radii.size() + 1, 0.0);
  std::vector<double> sq(sorted_radii.size());
  for (std::size_t r = 0; r < sq.size(); ++r) sq[r] = sorted_radii[r] * sorted_radii[r];
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double d2 = squared_distance(mu.atom(i), center);
    auto it = std::lower_bound(sq.begin(), sq.end(), d2);
    buckets[static_cast<std::size_t>(it - sq.begin())] += mu.weight(i);
  }
  std::vector<double> masses(sorted_radii.size());
  double cumulative = 0.0;
  for (std::size_t r = 0; r < masses.size(); ++r) {
    cumulative += buckets[r];
    masses[r] = cumulative;
  }
  return masses;
}

double frostman_constant(const DiscreteMeasure& mu, double s, std::size_t sample_centers,
                         std::span<const double> radii) {
  check_radii(radii, mu.cell_size());
  std::vector<double> sorted(radii.begin(), radii.end());
  std::sort(sorted.begin(), sorted.end());
  auto centers = spread_indices(mu.size(), sample_centers);
  std::vector<double> best(centers.size(), 0.0);
  parallel_for(centers.size(), [&](std::size_t c) {
    auto masses = ball_masses(mu, mu.atom(centers[c]), sorted);
    double b = 0.0;
    for (std::size_t r = 0; r < sorted.size(); ++r) b = std::max(b, masses[r] / std::pow(sorted[r], s));
    best[c] = b;
  });
  double result = 0.0;
  for (double b : best) result = std::max(result, b);
  return result;
}

double frostman_sup(const DiscreteMeasure& mu, double s, double r_min, double r_max,
                    std::span<const std::size_t> centers) {
  if (!(r_min > 0.0) || r_max < r_min) throw std::invalid_argument("frostman_sup: bad radius range");
  if (r_min < mu.cell_size() * (1.0 - kEps)) throw ResolutionError("frostman_sup: r_min below cell size");
  std::vector<double> best(centers.size(), 0.0);
  parallel_for(centers.size(), [&](std::size_t c) {
    auto x = mu.atom(centers[c]);
    std::vector<std::pair<double, double>> dist;
    dist.reserve(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      dist.emplace_back(std::sqrt(squared_distance(mu.atom(i), x)), mu.weight(i));
    }
    std::sort(dist.begin(), dist.end());
    double cumulative = 0.0;
    double b = 0.0;
    std::size_t i = 0;
    while (i < dist.size() && dist[i].first <= r_min) cumulative += dist[i++].second;
    b = cumulative / std::pow(r_min, s);
    while (i < dist.size() && dist[i].first <= r_max) {
      const double d = dist[i].first;
      while (i < dist.size() && dist[i].first == d) cumulative += dist[i++].second;
      b = std::max(b, cumulative / std::pow(d, s));
    }
    best[c] = b;
  });
  double result = 0.0;
  for (double b : best) result = std::max(result, b);
  return result;
}

double lower_density_estimate(const DiscreteMeasure& mu, double s, std::span<const double> radii,
                              const PointSet& centers) {
  check_radii(radii, mu.cell_size());
  std::vector<double> sorted(radii.begin(), radii.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> worst(centers.size(), std::numeric_limits<double>::infinity());
  parallel_for(centers.size(), [&](std::size_t c) {
    auto masses = ball_masses(mu, centers[c], sorted);
    double w = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < sorted.size(); ++r) w = std::min(w, masses[r] / std::pow(2.0 * sorted[r], s));
    worst[c] = w;
  });
  double result = std::numeric_limits<double>::infinity();
  for (double w : worst) result = std::min(result, w);
  return result;
}

double lower_density_estimate(const DiscreteMeasure& mu, double s, std::span<const double> radii,
                              std::size_t max_centers) {
  PointSet centers(mu.ambient_dim());
  for (std::size_t i : spread_indices(mu.size(), max_centers)) centers.push_back(mu.atom(i));
  return lower_density_estimate(mu, s, radii, centers);
}

DimFit frostman_exponent(const DiscreteMeasure& mu, std::span<const double> radii,
                         std::size_t sample_centers) {
  check_radii(radii, mu.cell_size());
  std::vector<double> sorted(radii.begin(), radii.end());
  std::sort(sorted.begin(), sorted.end());
  auto centers = spread_indices(mu.size(), sample_centers);
  std::vector<std::vector<double>> per_center(centers.size());
  parallel_for(centers.size(), [&](std::size_t c) { per_center[c] = ball_masses(mu, mu.atom(centers[c]), sorted); });
  std::vector<double> x(sorted.size()), y(sorted.size());
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    double m = 0.0;
    for (const auto& masses : per_center) m = std::max(m, masses[r]);
    x[r] = std::log(sorted[r]);
    y[r] = std::log(m);
  }
  return fit_line(x, y, {sorted.front(), sorted.back()});
}

void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu) {
  for (int d = 0; d < mu.ambient_dim(); ++d) out << 'x' << d << ',';
  out << "weight\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (double c : mu.atom(i)) out << c << ',';
    out << mu.weight(i) << '\n';
  }
}

}  // namespace slicedim
