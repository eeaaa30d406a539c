#include "slicedim/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "quadrature.hpp"
#include "slicedim/error.hpp"
#include "slicedim/geometry.hpp"
#include "slicedim/parallel.hpp"

namespace slicedim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Decodes linear index `idx` of the cube [-K, K]^n into integer coordinates.
void decode(std::size_t idx, long half_width, std::span<long> k) {
  const auto side = static_cast<std::size_t>(2 * half_width + 1);
  for (auto& c : k) {
    c = static_cast<long>(idx % side) - half_width;
    idx /= side;
  }
}

/// First non-zero coordinate positive: one representative of each +-k pair.
bool in_upper_half(std::span<const long> k) {
  for (long c : k) {
    if (c != 0) return c > 0;
  }
  return false;
}

std::size_t grid_cube_size(int n, long half_width) {
  const auto side = static_cast<std::size_t>(2 * half_width + 1);
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) {
    if (total > kFrequencyNodeBudget / side) {
      std::ostringstream msg;
      msg << "frequency grid with " << side << "^" << n << " nodes exceeds the node budget of "
          << kFrequencyNodeBudget;
      throw BudgetError(msg.str());
    }
    total *= side;
  }
  return total;
}

}  // namespace

// Fourier transforms ---------------------------------------------------------

std::complex<double> fourier_transform(const DiscreteMeasure& mu, std::span<const double> x) {
  double re = 0.0, im = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    double phase = 0.0;
    auto y = mu.atom(j);
    for (std::size_t d = 0; d < y.size(); ++d) phase += x[d] * y[d];
    phase *= -kTwoPi;
    re += mu.weight(j) * std::cos(phase);
    im += mu.weight(j) * std::sin(phase);
  }
  return {re, im};
}

FourierTransform::FourierTransform(const DiscreteMeasure& mu, bool use_structure)
    : mu_(&mu), product_form_(use_structure && mu.structure().has_value()) {
  if (!product_form_) return;
  const auto& ifs = mu.structure()->ifs;
  const auto n = static_cast<std::size_t>(ifs.ambient_dim);
  if (n >= 20 || ifs.offsets.size() != (std::size_t{1} << n)) return;
  const double far = 1.0 - ifs.ratio;
  for (std::size_t b = 0; b < ifs.offsets.size(); ++b) {
    for (std::size_t d = 0; d < n; ++d) {
      const double expected = (b >> d) & 1U ? far : 0.0;
      if (ifs.offsets[b][d] != expected) return;
    }
  }
  corner_form_ = true;
  corner_step_ = far;
}

std::complex<double> FourierTransform::operator()(std::span<const double> x) const {
  if (!product_form_) return fourier_transform(*mu_, x);
  const auto& st = *mu_->structure();
  const auto n = static_cast<std::size_t>(st.ifs.ambient_dim);
  const double inv_branches = 1.0 / st.ifs.branch_count();
  std::complex<double> value(st.mass, 0.0);
  double scale = 1.0;
  if (corner_form_) {
    double amplitude = st.mass, phase = 0.0;
    for (int level = 0; level < st.generation; ++level) {
      for (std::size_t d = 0; d < n; ++d) {
        const double a = std::numbers::pi * scale * corner_step_ * x[d];
        amplitude *= std::cos(a);
        phase -= a;
      }
      scale *= st.ifs.ratio;
    }
    value = std::polar(1.0, phase) * amplitude;
  }
  for (int level = 0; !corner_form_ && level < st.generation; ++level) {
    std::complex<double> factor(0.0, 0.0);
    for (const auto& o : st.ifs.offsets) {
      double phase = 0.0;
      for (std::size_t d = 0; d < n; ++d) phase += x[d] * o[d];
      phase *= -kTwoPi * scale;
      factor += std::complex<double>(std::cos(phase), std::sin(phase));
    }
    value *= factor * inv_branches;
    scale *= st.ifs.ratio;
  }
  // Atoms sit at cell centres: shift by half the final cell on every axis.
  double shift = 0.0;
  for (std::size_t d = 0; d < n; ++d) shift += x[d];
  shift *= -kTwoPi * 0.5 * scale;
  return value * std::complex<double>(std::cos(shift), std::sin(shift));
}

double FourierTransform::power(std::span<const double> x) const {
  if (!product_form_) return std::norm(fourier_transform(*mu_, x));
  const auto& st = *mu_->structure();
  const auto n = static_cast<std::size_t>(st.ifs.ambient_dim);
  const double inv_branches = 1.0 / st.ifs.branch_count();
  double p = st.mass * st.mass;
  double scale = 1.0;
  if (corner_form_) {
    const double step = std::numbers::pi * corner_step_;
    double amplitude = st.mass;
    for (int level = 0; level < st.generation; ++level) {
      for (std::size_t d = 0; d < n; ++d) amplitude *= std::cos(step * scale * x[d]);
      scale *= st.ifs.ratio;
    }
    return amplitude * amplitude;
  }
  for (int level = 0; level < st.generation; ++level) {
    double re = 0.0, im = 0.0;
    for (const auto& o : st.ifs.offsets) {
      double phase = 0.0;
      for (std::size_t d = 0; d < n; ++d) phase += x[d] * o[d];
      phase *= -kTwoPi * scale;
      re += std::cos(phase);
      im += std::sin(phase);
    }
    p *= (re * re + im * im) * inv_branches * inv_branches;
    scale *= st.ifs.ratio;
  }
  return p;
}

double cell_form_factor(std::span<const double> x, double h) {
  if (h <= 0.0) return 1.0;
  double f = 1.0;
  for (double xd : x) {
    const double t = std::numbers::pi * h * xd;
    if (std::abs(t) < 1e-8) continue;
    const double sinc = std::sin(t) / t;
    f *= sinc * sinc;
  }
  return f;
}

// Energies -------------------------------------------------------------------

double riesz_constant(int n, double s) {
  if (n < 1 || !(s > 0.0) || !(s < n)) {
    std::ostringstream msg;
    msg << "riesz_constant: need 0 < s < n, got s = " << s << ", n = " << n;
    throw std::invalid_argument(msg.str());
  }
  return std::pow(std::numbers::pi, s - 0.5 * n) * std::tgamma(0.5 * (n - s)) / std::tgamma(0.5 * s);
}

double energy_spatial(const DiscreteMeasure& mu, double s) {
  const int n = mu.ambient_dim();
  if (mu.cell_size() <= 0.0) throw Error("energy_spatial: atomic measure has infinite s-energy");
  if (!(s > 0.0)) throw std::invalid_argument("energy_spatial: s must be positive");
  if (s >= n) {
    std::ostringstream msg;
    msg << "energy_spatial: the s-energy of a cell quadrature diverges for s = " << s << " >= n = " << n;
    throw Error(msg.str());
  }
  const double h = mu.cell_size();
  const double near = 3.0 * h;
  const double self_kernel = detail::same_cell_kernel(n, s) * std::pow(h, -s);
  const auto& coords = mu.atoms().coords();
  const auto& w = mu.weights();
  const auto dim = static_cast<std::size_t>(n);

  const double off_diagonal = chunked_sum(mu.size(), 64, [&](std::size_t begin, std::size_t end) {
    double sum = 0.0;
    std::vector<double> diff(dim);
    for (std::size_t i = begin; i < end; ++i) {
      const double* yi = coords.data() + i * dim;
      double row = 0.0;
      for (std::size_t j = i + 1; j < mu.size(); ++j) {
        const double* yj = coords.data() + j * dim;
        double d2 = 0.0;
        bool close = true;
        for (std::size_t k = 0; k < dim; ++k) {
          diff[k] = yj[k] - yi[k];
          d2 += diff[k] * diff[k];
          close = close && std::abs(diff[k]) < near;
        }
        double kernel;
        if (d2 == 0.0) {
          kernel = self_kernel;
        } else if (close) {
          kernel = detail::cell_pair_kernel(diff, h, s);
        } else {
          kernel = std::pow(d2, -0.5 * s);
        }
        row += w[j] * kernel;
      }
      sum += w[i] * row;
    }
    return sum;
  });
  double diagonal = 0.0;
  for (double wi : w) diagonal += wi * wi;
  return 2.0 * off_diagonal + diagonal * self_kernel;
}

FrequencyGrid FrequencyGrid::make(int n, double cutoff, double max_spacing) {
  if (n < 1 || !(cutoff > 0.0) || !(max_spacing > 0.0)) {
    throw std::invalid_argument("FrequencyGrid: need positive cutoff and spacing");
  }
  if (!(max_spacing < cutoff)) throw std::invalid_argument("FrequencyGrid: spacing must be below the cutoff");
  const double ratio = cutoff / max_spacing;
  const double nodes = std::exp2(std::ceil(std::log2(ratio) - 1e-12));
  return FrequencyGrid{n, cutoff, cutoff / nodes};
}

FrequencyGrid FrequencyGrid::for_support(int n, double cutoff, double diameter) {
  return make(n, cutoff, 1.0 / (8.0 * std::max(diameter, 1e-12)));
}

long FrequencyGrid::half_width() const { return std::lround(cutoff / spacing); }

double energy_fourier(const DiscreteMeasure& mu, double s, const FrequencyGrid& grid) {
  const int n = mu.ambient_dim();
  const double c = riesz_constant(n, s);
  if (grid.ambient_dim != n) throw std::invalid_argument("energy_fourier: grid dimension mismatch");
  const double diameter = mu.diameter();
  if (grid.spacing > 1.0 / (4.0 * diameter)) {
    std::ostringstream msg;
    msg << "energy_fourier: spacing " << grid.spacing << " is coarser than 1/(4 diameter) = "
        << 1.0 / (4.0 * diameter) << " (aliasing guard)";
    throw ResolutionError(msg.str());
  }
  const long K = grid.half_width();
  const std::size_t total = grid_cube_size(n, K);
  const double h = grid.spacing;
  const double cutoff2 = grid.cutoff * grid.cutoff * (1.0 + 1e-12);
  const double cell = mu.cell_size();
  const FourierTransform ft(mu);

  // |x|^(s-n) integrated over the grid cells near the singularity, in units
  // of the spacing: weight(k) = h^s * table(k).
  constexpr long kNear = 3;
  const long near_side = 2 * kNear + 1;
  std::size_t near_count = 1;
  for (int d = 0; d < n; ++d) near_count *= static_cast<std::size_t>(near_side);
  std::vector<double> near_table(near_count, 0.0);
  parallel_for(near_count, [&](std::size_t idx) {
    std::vector<long> k(static_cast<std::size_t>(n));
    decode(idx, kNear, k);
    if (std::all_of(k.begin(), k.end(), [](long v) { return v == 0; })) return;
    std::vector<int> ki(k.begin(), k.end());
    near_table[idx] = detail::offset_cell_integral(ki, s);
  });
  const double near_scale = std::pow(h, s);

  const double sum = chunked_sum(total, 4096, [&](std::size_t begin, std::size_t end) {
    std::vector<long> k(static_cast<std::size_t>(n));
    std::vector<double> x(static_cast<std::size_t>(n));
    double partial = 0.0;
    for (std::size_t idx = begin; idx < end; ++idx) {
      decode(idx, K, k);
      if (!in_upper_half(k)) continue;
      double r2 = 0.0;
      bool near = true;
      for (std::size_t d = 0; d < k.size(); ++d) {
        x[d] = static_cast<double>(k[d]) * h;
        r2 += x[d] * x[d];
        near = near && std::abs(k[d]) <= kNear;
      }
      if (r2 > cutoff2) continue;
      double weight;
      if (near) {
        std::size_t near_idx = 0, stride = 1;
        for (std::size_t d = 0; d < k.size(); ++d) {
          near_idx += static_cast<std::size_t>(k[d] + kNear) * stride;
          stride *= static_cast<std::size_t>(near_side);
        }
        weight = near_scale * near_table[near_idx];
      } else {
        weight = std::pow(h, n) * std::pow(r2, 0.5 * (s - n));
      }
      partial += ft.power(x) * cell_form_factor(x, cell) * weight;
    }
    return partial;
  });
  const double mass = mu.total_mass();
  const double origin = mass * mass * detail::origin_cell_integral(n, s) * near_scale;
  return c * (2.0 * sum + origin);
}

// Spherical averages ---------------------------------------------------------

double sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

int required_sphere_nodes(int n, double r, double diameter) {
  const double band = kTwoPi * r * diameter;
  if (n == 2) return static_cast<int>(std::ceil(band)) + 8;
  if (n == 3) return static_cast<int>(std::ceil(band * band)) + 16;
  return 2;
}

int default_sphere_nodes(int n, double r, double diameter) {
  const int req = required_sphere_nodes(n, r, diameter);
  return req + req / 4;
}

double sphere_integral(const FourierTransform& ft, double r, int nodes, double cell) {
  const int n = ft.dim();
  if (n == 1) {
    const double plus[1] = {r};
    const double minus[1] = {-r};
    return ft.power(plus) * cell_form_factor(plus, cell) + ft.power(minus) * cell_form_factor(minus, cell);
  }
  if (n == 2) {
    double sum = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double theta = kTwoPi * (k + 0.5) / nodes;
      const double x[2] = {r * std::cos(theta), r * std::sin(theta)};
      sum += ft.power(x) * cell_form_factor(x, cell);
    }
    return sum * kTwoPi / nodes;
  }
  if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    double sum = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / nodes;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * k;
      const double x[3] = {r * rho * std::cos(phi), r * rho * std::sin(phi), r * z};
      sum += ft.power(x) * cell_form_factor(x, cell);
    }
    return sum * 4.0 * std::numbers::pi / nodes;
  }
  throw std::invalid_argument("sphere_integral: only dimensions 1, 2 and 3 are supported");
}

double spherical_average(const DiscreteMeasure& nu, double r, int nodes) {
  const int n = nu.ambient_dim();
  if (n != 2 && n != 3) throw std::invalid_argument("spherical_average: ambient dimension must be 2 or 3");
  if (!(r > 1.0)) throw std::invalid_argument("spherical_average: radius must exceed 1");
  const double diameter = nu.diameter();
  const int required = required_sphere_nodes(n, r, diameter);
  if (nodes == 0) nodes = default_sphere_nodes(n, r, diameter);
  if (nodes < required) {
    std::ostringstream msg;
    msg << "spherical_average: " << nodes << " nodes cannot resolve radius " << r << " (need " << required
        << ")";
    throw ResolutionError(msg.str());
  }
  return sphere_integral(FourierTransform(nu), r, nodes);
}

std::vector<SphericalSample> spherical_sweep(const DiscreteMeasure& nu, std::span<const double> r_values,
                                             int nodes) {
  std::vector<SphericalSample> out(r_values.size());
  parallel_for(r_values.size(), [&](std::size_t i) {
    const double r = r_values[i];
    const int used = nodes > 0 ? nodes : default_sphere_nodes(nu.ambient_dim(), r, nu.diameter());
    out[i] = SphericalSample{r, spherical_average(nu, r, used), used};
  });
  return out;
}

DimFit decay_exponent_fit(const DiscreteMeasure& nu, std::span<const double> r_values, int nodes) {
  if (r_values.size() < 4) throw std::invalid_argument("decay_exponent_fit: fewer than 4 scales");
  const double r_max = *std::max_element(r_values.begin(), r_values.end());
  const double r_min = *std::min_element(r_values.begin(), r_values.end());
  if (nu.cell_size() > 0.0 && r_max > (1.0 + 1e-9) / (4.0 * nu.cell_size())) {
    std::ostringstream msg;
    msg << "decay_exponent_fit: radius " << r_max << " exceeds the resolution band 1/(4 cell_size) = "
        << 1.0 / (4.0 * nu.cell_size());
    throw ResolutionError(msg.str());
  }
  auto samples = spherical_sweep(nu, r_values, nodes);
  std::vector<double> x, y;
  for (const auto& sample : samples) {
    if (!(sample.value > 0.0)) throw Error("decay_exponent_fit: spherical average vanished");
    x.push_back(std::log(sample.r));
    y.push_back(std::log(sample.value));
  }
  return fit_line(x, y, {r_min, r_max});
}

// Rotation-average identity --------------------------------------------------

IdentityCheck rotation_average_identity_check(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                              int rotation_samples, const FrequencyGrid& grid,
                                              std::uint64_t seed) {
  const int n = mu.ambient_dim();
  if (nu.ambient_dim() != n || grid.ambient_dim != n) {
    throw std::invalid_argument("rotation_average_identity_check: dimension mismatch");
  }
  if (n < 2) throw std::invalid_argument("rotation_average_identity_check: need n >= 2");
  if (rotation_samples < 1) throw std::invalid_argument("rotation_average_identity_check: need rotations");
  const auto dim = static_cast<std::size_t>(n);

  // Row-major g^-1 = g^T for every sampled rotation.
  std::vector<double> inverses(static_cast<std::size_t>(rotation_samples) * dim * dim);
  for (int g = 0; g < rotation_samples; ++g) {
    const Rotation rot = random_rotation(n, seed, static_cast<std::uint64_t>(g));
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        inverses[(static_cast<std::size_t>(g) * dim + i) * dim + j] =
            rot.matrix()(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
      }
    }
  }

  const long K = grid.half_width();
  const std::size_t total = grid_cube_size(n, K);
  const double h = grid.spacing;
  const double cutoff2 = grid.cutoff * grid.cutoff * (1.0 + 1e-12);
  const long max_key = static_cast<long>(n) * K * K;
  const FourierTransform ft_mu(mu);
  const FourierTransform ft_nu(nu);
  const double nu_diameter = nu.diameter();

  // sigma(nu)(|x|) depends on |k|^2 only.
  std::vector<char> used(static_cast<std::size_t>(max_key) + 1, 0);
  std::size_t node_count = 0;
  {
    std::vector<long> k(dim);
    for (std::size_t idx = 0; idx < total; ++idx) {
      decode(idx, K, k);
      long key = 0;
      for (long c : k) key += c * c;
      if (static_cast<double>(key) * h * h > cutoff2) continue;
      ++node_count;
      used[static_cast<std::size_t>(key)] = 1;
    }
  }
  std::vector<long> keys;
  for (long q = 0; q <= max_key; ++q) {
    if (used[static_cast<std::size_t>(q)]) keys.push_back(q);
  }
  std::vector<double> sigma(static_cast<std::size_t>(max_key) + 1, 0.0);
  parallel_for(keys.size(), [&](std::size_t i) {
    const double r = std::sqrt(static_cast<double>(keys[i])) * h;
    const double value = r == 0.0 ? std::pow(nu.total_mass(), 2) * sphere_area(n)
                                   : sphere_integral(ft_nu, r, default_sphere_nodes(n, r, nu_diameter));
    sigma[static_cast<std::size_t>(keys[i])] = value;
  });

  const double inv_area = 1.0 / sphere_area(n);
  const double inv_rot = 1.0 / rotation_samples;
  std::size_t chunks = (total + 1023) / 1024;
  std::vector<double> lhs_parts(chunks, 0.0), rhs_parts(chunks, 0.0);
  parallel_for(chunks, [&](std::size_t c) {
    std::vector<long> k(dim);
    std::vector<double> x(dim), gx(dim);
    double lhs = 0.0, rhs = 0.0;
    const std::size_t end = std::min(total, (c + 1) * 1024);
    for (std::size_t idx = c * 1024; idx < end; ++idx) {
      decode(idx, K, k);
      long key = 0;
      for (std::size_t d = 0; d < dim; ++d) {
        x[d] = static_cast<double>(k[d]) * h;
        key += k[d] * k[d];
      }
      if (static_cast<double>(key) * h * h > cutoff2) continue;
      const double pm = ft_mu.power(x);
      if (pm == 0.0) continue;
      double avg = 0.0;
      for (int g = 0; g < rotation_samples; ++g) {
        const double* m = inverses.data() + static_cast<std::size_t>(g) * dim * dim;
        for (std::size_t i = 0; i < dim; ++i) {
          double v = 0.0;
          for (std::size_t j = 0; j < dim; ++j) v -= m[i * dim + j] * x[j];
          gx[i] = v;
        }
        avg += ft_nu.power(gx);
      }
      lhs += pm * avg * inv_rot;
      rhs += pm * sigma[static_cast<std::size_t>(key)] * inv_area;
    }
    lhs_parts[c] = lhs;
    rhs_parts[c] = rhs;
  });
  IdentityCheck out;
  for (std::size_t c = 0; c < chunks; ++c) {
    out.lhs += lhs_parts[c];
    out.rhs += rhs_parts[c];
  }
  const double volume = std::pow(h, n);
  out.lhs *= volume;
  out.rhs *= volume;
  out.grid_nodes = node_count;
  out.rotation_samples = rotation_samples;
  if (!(out.rhs > 0.0)) throw Error("rotation_average_identity_check: right-hand side vanishes (degenerate nu)");
  out.relative_error = std::abs(out.lhs - out.rhs) / out.rhs;
  return out;
}

double radial_weighted_integral(const DiscreteMeasure& mu, double beta, double r_lo, double r_hi) {
  if (!(r_hi > r_lo) || r_lo < 0.0) throw std::invalid_argument("radial_weighted_integral: bad radius range");
  const int n = mu.ambient_dim();
  const double diameter = mu.diameter();
  const double width = diameter > 0.0 ? 1.0 / diameter : r_hi - r_lo;
  const auto panels = static_cast<std::size_t>(std::ceil((r_hi - r_lo) / width));
  const double step = (r_hi - r_lo) / static_cast<double>(panels);
  const FourierTransform ft(mu);
  const double cell = mu.cell_size();
  std::vector<double> parts(panels, 0.0);
  parallel_for(panels, [&](std::size_t p) {
    const double a = r_lo + step * static_cast<double>(p);
    const auto rule = detail::gauss_legendre(8, a, a + step);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double r = rule.nodes[i];
      const int nodes = default_sphere_nodes(n, r, diameter);
      sum += rule.weights[i] * sphere_integral(ft, r, nodes, cell) * std::pow(r, n - 1 - beta);
    }
    parts[p] = sum;
  });
  double total = 0.0;
  for (double part : parts) total += part;
  return total;
}

}  // namespace slicedim
