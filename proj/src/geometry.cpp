#include "slicedim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "slicedim/error.hpp"
#include "slicedim/grid_hash.hpp"
#include "slicedim/parallel.hpp"
#include "slicedim/rng.hpp"

namespace slicedim {

namespace {

constexpr double kOrthoTol = 1e-8;

void check_resolution(double delta, double cell_size, const char* what) {
  if (!(delta > 0.0)) throw std::invalid_argument(std::string(what) + ": delta must be positive");
  if (delta < 2.0 * cell_size * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << what << ": delta " << delta << " is below twice the cell size " << cell_size;
    throw ResolutionError(msg.str());
  }
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.normal();
  }
  return m;
}

/// Q factor of a Gaussian n x k matrix with R's diagonal signs folded in.
Eigen::MatrixXd haar_frame(Rng& rng, int n, int k) {
  Eigen::MatrixXd a = gaussian_matrix(rng, n, k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (int j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

}  // namespace

// Rotations and projections --------------------------------------------------

Rotation::Rotation(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() == 0) {
    throw std::invalid_argument("Rotation: matrix must be square");
  }
  const auto n = matrix_.rows();
  if ((matrix_.transpose() * matrix_ - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > kOrthoTol) {
    throw std::invalid_argument("Rotation: matrix is not orthogonal");
  }
}

void Rotation::apply(std::span<const double> x, std::span<double> out) const {
  const auto n = static_cast<std::size_t>(dim());
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      v += matrix_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
    }
    out[i] = v;
  }
}

PointSet Rotation::apply(const PointSet& points) const {
  if (points.dim() != dim()) throw std::invalid_argument("Rotation::apply: dimension mismatch");
  PointSet out(points.dim(), std::vector<double>(points.coords().size()));
  for (std::size_t i = 0; i < points.size(); ++i) apply(points[i], out.mutable_point(i));
  return out;
}

Rotation random_rotation(int n, std::uint64_t seed, std::uint64_t index) {
  if (n < 1) throw std::invalid_argument("random_rotation: dimension must be positive");
  Rng rng(seed, Stream::rotation, index);
  return Rotation(haar_frame(rng, n, n));
}

Projection::Projection(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  const auto m = rows_.rows();
  if (m == 0 || m > rows_.cols()) throw std::invalid_argument("Projection: need 1 <= m <= n rows");
  if ((rows_ * rows_.transpose() - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() > kOrthoTol) {
    throw std::invalid_argument("Projection: rows are not orthonormal");
  }
}

void Projection::apply(std::span<const double> x, std::span<double> out) const {
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    double v = 0.0;
    for (Eigen::Index j = 0; j < rows_.cols(); ++j) v += rows_(i, j) * x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = v;
  }
}

Eigen::MatrixXd Projection::kernel_basis() const {
  const auto n = rows_.cols();
  const auto m = rows_.rows();
  if (m == n) return Eigen::MatrixXd(0, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows_.transpose());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - m).transpose();
}

Projection difference_projection(const Rotation& g) {
  const int n = g.dim();
  Eigen::MatrixXd rows(n, 2 * n);
  rows.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
  rows.rightCols(n) = -g.matrix();
  return Projection(rows / std::numbers::sqrt2);
}

Projection scaled_difference_projection(int n, double t) {
  Eigen::MatrixXd rows(n, 2 * n);
  rows.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
  rows.rightCols(n) = -t * Eigen::MatrixXd::Identity(n, n);
  return Projection(rows / std::sqrt(1.0 + t * t));
}

Projection line_projection(double angle) {
  Eigen::MatrixXd rows(1, 2);
  rows << std::cos(angle), std::sin(angle);
  return Projection(rows);
}

ProjectionFamily ProjectionFamily::grassmannian(int n, int m, std::uint64_t seed) {
  if (m < 1 || m > n) throw std::invalid_argument("grassmannian family: need 1 <= m <= n");
  ProjectionFamily f;
  f.kind = FamilyKind::grassmannian;
  f.source_dim = n;
  f.target_dim = m;
  f.seed = seed;
  return f;
}

ProjectionFamily ProjectionFamily::difference(int n, std::uint64_t seed) {
  ProjectionFamily f;
  f.kind = FamilyKind::difference;
  f.source_dim = 2 * n;
  f.target_dim = n;
  f.seed = seed;
  return f;
}

ProjectionFamily ProjectionFamily::scaled_difference(int n, std::uint64_t seed, double t_lo, double t_hi) {
  if (!(t_lo <= t_hi)) throw std::invalid_argument("scaled_difference family: empty t interval");
  ProjectionFamily f;
  f.kind = FamilyKind::scaled_difference;
  f.source_dim = 2 * n;
  f.target_dim = n;
  f.seed = seed;
  f.t_lo = t_lo;
  f.t_hi = t_hi;
  return f;
}

ProjectionFamily ProjectionFamily::fixed(Projection p) {
  ProjectionFamily f;
  f.kind = FamilyKind::fixed;
  f.source_dim = p.source_dim();
  f.target_dim = p.target_dim();
  f.fixed_projection = std::move(p);
  return f;
}

ProjectionSample sample_projection(const ProjectionFamily& family, std::uint64_t index) {
  switch (family.kind) {
    case FamilyKind::grassmannian: {
      Rng rng(family.seed, Stream::projection, index);
      if (family.source_dim == 2 && family.target_dim == 1) {
        const double angle = rng.uniform(0.0, std::numbers::pi);
        return {line_projection(angle), 1.0, {angle}};
      }
      Eigen::MatrixXd frame = haar_frame(rng, family.source_dim, family.target_dim);
      return {Projection(frame.transpose()), 1.0, {}};
    }
    case FamilyKind::difference: {
      const int n = family.target_dim;
      Rotation g = random_rotation(n, family.seed, index);
      std::vector<double> params;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) params.push_back(g.matrix()(i, j));
      }
      return {difference_projection(g), std::numbers::sqrt2, std::move(params)};
    }
    case FamilyKind::scaled_difference: {
      Rng rng(family.seed, Stream::projection, index);
      const double t = rng.uniform(family.t_lo, family.t_hi);
      return {scaled_difference_projection(family.target_dim, t), std::sqrt(1.0 + t * t), {t}};
    }
    case FamilyKind::fixed:
      if (!family.fixed_projection) throw std::invalid_argument("fixed family without a projection");
      return {*family.fixed_projection, 1.0, {}};
  }
  throw std::logic_error("sample_projection: unknown family kind");
}

// Pushforwards and densities -------------------------------------------------

double unit_ball_volume(int m) {
  return std::pow(std::numbers::pi, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

DiscreteMeasure project_pushforward(const Projection& p, const DiscreteMeasure& mu) {
  if (p.source_dim() != mu.ambient_dim()) throw std::invalid_argument("project_pushforward: dimension mismatch");
  const auto m = static_cast<std::size_t>(p.target_dim());
  PointSet out(p.target_dim(), std::vector<double>(mu.size() * m));
  for (std::size_t i = 0; i < mu.size(); ++i) p.apply(mu.atom(i), out.mutable_point(i));
  return DiscreteMeasure(std::move(out), mu.weights(), mu.cell_size());
}

double density_at(const DiscreteMeasure& nu, std::span<const double> u, double delta) {
  check_resolution(delta, nu.cell_size(), "density_at");
  const double r2 = delta * delta;
  double mass = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (squared_distance(nu.atom(i), u) <= r2) mass += nu.weight(i);
  }
  return mass / (unit_ball_volume(nu.ambient_dim()) * std::pow(delta, nu.ambient_dim()));
}

namespace {

/// Grid sum of D(nu, u)^2 times the cell volume over nodes (k + 1/2) spacing
/// covering the support expanded by delta.
double squared_density_sum(const DiscreteMeasure& nu, double delta, double spacing) {
  const int m = nu.ambient_dim();
  if (nu.empty()) return 0.0;
  const double norm = 1.0 / (unit_ball_volume(m) * std::pow(delta, m));
  const Box region = nu.bounds().expanded(delta);
  std::vector<std::int64_t> lo(static_cast<std::size_t>(m)), count(static_cast<std::size_t>(m));
  std::size_t total = 1;
  for (int d = 0; d < m; ++d) {
    lo[d] = static_cast<std::int64_t>(std::floor(region.lo[d] / spacing));
    count[d] = static_cast<std::int64_t>(std::ceil(region.hi[d] / spacing)) - lo[d];
    if (total > kDefaultAtomBudget * 16 / static_cast<std::size_t>(count[d])) {
      throw BudgetError("l2_density_functional: u-grid exceeds the node budget; raise delta or the spacing");
    }
    total *= static_cast<std::size_t>(count[d]);
  }
  if (m == 1) {
    std::vector<std::pair<double, double>> sorted(nu.size());
    for (std::size_t i = 0; i < nu.size(); ++i) sorted[i] = {nu.atom(i)[0], nu.weight(i)};
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> xs(sorted.size()), prefix(sorted.size() + 1, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      xs[i] = sorted[i].first;
      prefix[i + 1] = prefix[i] + sorted[i].second;
    }
    double sum = 0.0;
    for (std::int64_t k = 0; k < count[0]; ++k) {
      const double u = (static_cast<double>(lo[0] + k) + 0.5) * spacing;
      const auto a = std::lower_bound(xs.begin(), xs.end(), u - delta) - xs.begin();
      const auto b = std::upper_bound(xs.begin(), xs.end(), u + delta) - xs.begin();
      const double density = (prefix[static_cast<std::size_t>(b)] - prefix[static_cast<std::size_t>(a)]) * norm;
      sum += density * density;
    }
    return sum * spacing;
  }
  const GridHash hash(nu.atoms(), delta);
  std::vector<double> u(static_cast<std::size_t>(m));
  double sum = 0.0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (int d = 0; d < m; ++d) {
      u[d] = (static_cast<double>(lo[d] + static_cast<std::int64_t>(rest % count[d])) + 0.5) * spacing;
      rest /= static_cast<std::size_t>(count[d]);
    }
    double mass = 0.0;
    hash.for_each_within(u, delta, [&](std::size_t i) { mass += nu.weight(i); });
    const double density = mass * norm;
    sum += density * density;
  }
  return sum * std::pow(spacing, m);
}

}  // namespace

L2Estimate l2_density_functional(const ProjectionFamily& family, const DiscreteMeasure& mu, int lambda_samples,
                                 double delta, double u_spacing) {
  if (lambda_samples < 1) throw std::invalid_argument("l2_density_functional: need at least one sample");
  if (!(u_spacing > 0.0)) throw std::invalid_argument("l2_density_functional: spacing must be positive");
  check_resolution(delta, mu.cell_size(), "l2_density_functional");
  L2Estimate out;
  out.per_sample.assign(static_cast<std::size_t>(lambda_samples), 0.0);
  parallel_for(out.per_sample.size(), [&](std::size_t i) {
    const auto sample = sample_projection(family, i);
    out.per_sample[i] = squared_density_sum(project_pushforward(sample.projection, mu), delta, u_spacing);
  });
  for (double v : out.per_sample) out.value += v;
  out.value /= lambda_samples;
  return out;
}

L2Sweep l2_delta_sweep(const ProjectionFamily& family, const DiscreteMeasure& mu, int lambda_samples,
                       double delta, int halvings) {
  L2Sweep sweep;
  for (int j = 0; j <= halvings; ++j) {
    const double d = delta * std::ldexp(1.0, -j);
    sweep.deltas.push_back(d);
    sweep.values.push_back(l2_density_functional(family, mu, lambda_samples, d, d / 4.0).value);
  }
  for (std::size_t j = 1; j < sweep.values.size(); ++j) {
    const double prev = sweep.values[j - 1];
    const double change = prev > 0.0 ? std::abs(sweep.values[j] - prev) / prev : 0.0;
    sweep.max_relative_change = std::max(sweep.max_relative_change, change);
  }
  return sweep;
}

// Mollification and rescaling ------------------------------------------------

DiscreteMeasure mollify(const DiscreteMeasure& mu, double delta, double spacing, const std::optional<Box>& region,
                        std::size_t budget) {
  const int n = mu.ambient_dim();
  if (!(delta > 0.0) || !(spacing > 0.0)) throw std::invalid_argument("mollify: delta and spacing must be positive");
  if (spacing > delta / 4.0 * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "mollify: grid spacing " << spacing << " is coarser than delta/4 = " << delta / 4.0;
    throw ResolutionError(msg.str());
  }
  if (mu.empty()) return DiscreteMeasure(PointSet(n), {}, spacing);
  const Box box = region ? *region : mu.bounds().expanded(delta + 0.5 * mu.cell_size());
  std::vector<std::int64_t> lo(static_cast<std::size_t>(n)), count(static_cast<std::size_t>(n));
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) {
    lo[d] = static_cast<std::int64_t>(std::floor(box.lo[d] / spacing));
    count[d] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(box.hi[d] / spacing)) - lo[d]);
    if (total > budget / static_cast<std::size_t>(count[d])) {
      std::ostringstream msg;
      msg << "mollify: grid exceeds the atom budget of " << budget << " (raise --budget-atoms or the spacing)";
      throw BudgetError(msg.str());
    }
    total *= static_cast<std::size_t>(count[d]);
  }
  const double factor = std::pow(spacing, n) / (unit_ball_volume(n) * std::pow(delta, n));
  const GridHash hash(mu.atoms(), delta);
  std::vector<double> weights(total, 0.0);
  constexpr std::size_t kChunk = 1024;
  parallel_for((total + kChunk - 1) / kChunk, [&](std::size_t c) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (std::size_t idx = c * kChunk; idx < std::min(total, (c + 1) * kChunk); ++idx) {
      std::size_t rest = idx;
      for (int d = 0; d < n; ++d) {
        x[d] = (static_cast<double>(lo[d] + static_cast<std::int64_t>(rest % count[d])) + 0.5) * spacing;
        rest /= static_cast<std::size_t>(count[d]);
      }
      double mass = 0.0;
      hash.for_each_within(x, delta, [&](std::size_t i) { mass += mu.weight(i); });
      weights[idx] = mass * factor;
    }
  });
  PointSet atoms(n);
  std::vector<double> kept;
  std::vector<double> x(static_cast<std::size_t>(n));
  for (std::size_t idx = 0; idx < total; ++idx) {
    if (weights[idx] == 0.0) continue;
    std::size_t rest = idx;
    for (int d = 0; d < n; ++d) {
      x[d] = (static_cast<double>(lo[d] + static_cast<std::int64_t>(rest % count[d])) + 0.5) * spacing;
      rest /= static_cast<std::size_t>(count[d]);
    }
    atoms.push_back(x);
    kept.push_back(weights[idx]);
  }
  return DiscreteMeasure(std::move(atoms), std::move(kept), spacing);
}

DiscreteMeasure rescale(const DiscreteMeasure& mu, std::span<const double> a, double r, double s) {
  if (!(r > 0.0)) throw std::invalid_argument("rescale: r must be positive");
  const int n = mu.ambient_dim();
  const double factor = std::pow(r, -s);
  const double r2 = r * r;
  PointSet atoms(n);
  std::vector<double> weights;
  std::vector<double> y(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto x = mu.atom(i);
    if (squared_distance(x, a) > r2) continue;
    for (int d = 0; d < n; ++d) y[d] = (x[d] - a[d]) / r;
    atoms.push_back(y);
    weights.push_back(mu.weight(i) * factor);
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights), mu.cell_size() / r);
}

// Tubes ----------------------------------------------------------------------

double tube_mass(const DiscreteMeasure& mu, const Projection& p, std::span<const double> x, double r, double delta) {
  check_resolution(delta, mu.cell_size(), "tube_mass");
  if (p.source_dim() != mu.ambient_dim()) throw std::invalid_argument("tube_mass: dimension mismatch");
  const auto n = static_cast<std::size_t>(mu.ambient_dim());
  const auto m = static_cast<std::size_t>(p.target_dim());
  const double r2 = r * r;
  const double d2 = delta * delta;
  std::vector<double> diff(n), proj(m);
  double mass = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto y = mu.atom(i);
    double dist2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      diff[d] = y[d] - x[d];
      dist2 += diff[d] * diff[d];
    }
    if (dist2 > r2) continue;
    p.apply(diff, proj);
    double pd2 = 0.0;
    for (double v : proj) pd2 += v * v;
    if (pd2 <= d2) mass += mu.weight(i);
  }
  return mass;
}

double tube_ratio(const DiscreteMeasure& mu, const Projection& p, std::span<const double> x, double r, double delta,
                  double t) {
  return tube_mass(mu, p, x, r, delta) * std::pow(r, -t) * std::pow(delta, -p.target_dim());
}

std::vector<TubeSample> tube_sweep(const DiscreteMeasure& mu, const Projection& p, std::span<const double> x,
                                   std::span<const double> radii, std::span<const double> deltas, double t) {
  std::vector<TubeSample> out(radii.size() * deltas.size());
  parallel_for(out.size(), [&](std::size_t k) {
    const double r = radii[k / deltas.size()];
    const double delta = deltas[k % deltas.size()];
    const double mass = tube_mass(mu, p, x, r, delta);
    out[k] = {r, delta, mass, mass * std::pow(r, -t) * std::pow(delta, -p.target_dim())};
  });
  return out;
}

}  // namespace slicedim
