#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "slicedim/fit.hpp"
#include "slicedim/point_set.hpp"

namespace slicedim {

/// Default cap on atoms (and grid cells) a single construction may allocate.
inline constexpr std::size_t kDefaultAtomBudget = std::size_t{1} << 22;

enum class BranchLayout {
  corner,  ///< offsets at the 2^n cube corners
  axis,    ///< origin plus one branch per coordinate axis (n+1 branches)
};

/// Self-similar IFS x -> ratio * x + offset_i with a uniform contraction ratio.
/// Construct through make_ifs / build_cantor_ifs, which enforce separation.
struct IfsSpec {
  int ambient_dim = 0;
  double ratio = 0.0;
  std::vector<std::vector<double>> offsets;
  double similarity_dim = 0.0;

  int branch_count() const { return static_cast<int>(offsets.size()); }
};

/// Validates the ratio (0 < ratio <= 1/2), offsets inside [0, 1 - ratio]^n,
/// and that first-generation images of the unit cube meet at most on their
/// boundaries.
IfsSpec make_ifs(double ratio, std::vector<std::vector<double>> offsets);

/// IFS of the given layout whose similarity dimension is `target_dim`.
/// Throws std::invalid_argument when the layout cannot reach the dimension
/// with ratio <= 1/2; the message states the maximum achievable dimension.
IfsSpec build_cantor_ifs(int n, double target_dim, BranchLayout layout);

/// Structure of a natural self-similar measure, retained so Fourier
/// transforms can use the finite product formula instead of an atom sum.
struct SelfSimilarStructure {
  IfsSpec ifs;
  int generation = 0;
  double mass = 1.0;
};

/// Weighted atoms standing in for a compactly supported Borel measure.
/// A positive cell_size means each atom represents the uniform measure on a
/// cube of that side centred at the atom; 0 means a genuinely atomic measure.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// Drops zero-weight atoms. Negative weights are rejected.
  DiscreteMeasure(PointSet atoms, std::vector<double> weights, double cell_size);

  int ambient_dim() const { return atoms_.dim(); }
  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }

  std::span<const double> atom(std::size_t i) const { return atoms_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const PointSet& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }

  double cell_size() const { return cell_size_; }
  double total_mass() const { return total_mass_; }
  /// Bounding box of the atoms (not inflated by the cells).
  const Box& bounds() const { return bounds_; }
  /// Diagonal of the support box including half a cell on every side.
  double diameter() const;

  const std::optional<SelfSimilarStructure>& structure() const { return structure_; }
  void set_structure(SelfSimilarStructure s) { structure_ = std::move(s); }

  /// Same atoms with every weight multiplied by `factor`.
  DiscreteMeasure scaled(double factor) const;

 private:
  PointSet atoms_;
  std::vector<double> weights_;
  double cell_size_ = 0.0;
  double total_mass_ = 0.0;
  Box bounds_;
  std::optional<SelfSimilarStructure> structure_;
};

/// Generation-k natural measure: N^k atoms at cell centres, weight N^-k each,
/// cell_size = ratio^k. Atom i*N + c at generation k+1 is child c of atom i
/// at generation k.
DiscreteMeasure natural_measure(const IfsSpec& ifs, int generation,
                                std::size_t budget = kDefaultAtomBudget);

/// Lower-left corners of the generation-k cells, in natural_measure order.
PointSet generation_corners(const IfsSpec& ifs, int generation, std::size_t budget);

/// Lebesgue quadrature of the box [lo, hi]^n with `cells` cells per axis.
DiscreteMeasure uniform_measure(int n, int cells, double lo = 0.0, double hi = 1.0);

DiscreteMeasure point_mass(std::vector<double> at, double weight = 1.0);

struct Ball {
  std::vector<double> center;
  double radius = 0.0;
};
using Region = std::variant<Ball, Box>;

bool region_contains(const Region& region, std::span<const double> p);

/// mu restricted to a closed ball or box; the result may be empty.
DiscreteMeasure restrict(const DiscreteMeasure& mu, const Region& region);

DiscreteMeasure product_measure(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                std::size_t budget = kDefaultAtomBudget);

/// Indices of at most `count` centres spread evenly through the atom list.
std::vector<std::size_t> spread_indices(std::size_t size, std::size_t count);

/// max over sampled atoms x and radii r of mu(B(x,r)) / r^s.
/// Radii below cell_size are rejected.
double frostman_constant(const DiscreteMeasure& mu, double s, std::size_t sample_centers,
                         std::span<const double> radii);

/// sup over r in [r_min, r_max] (continuous) and the given atom centres of
/// mu(B(x,r)) / r^s.
double frostman_sup(const DiscreteMeasure& mu, double s, double r_min, double r_max,
                    std::span<const std::size_t> centers);

/// min over centres x and radii r of (2r)^-s mu(B(x,r)). Defaults to at most
/// `max_centers` evenly spread atoms.
double lower_density_estimate(const DiscreteMeasure& mu, double s, std::span<const double> radii,
                              std::size_t max_centers = 512);
double lower_density_estimate(const DiscreteMeasure& mu, double s, std::span<const double> radii,
                              const PointSet& centers);

/// Slope of log(max_x mu(B(x,r))) against log r: the finite-scale Frostman
/// exponent.
DimFit frostman_exponent(const DiscreteMeasure& mu, std::span<const double> radii,
                         std::size_t sample_centers = 256);

/// Masses of the closed balls B(center, r) for ascending radii.
std::vector<double> ball_masses(const DiscreteMeasure& mu, std::span<const double> center,
                                std::span<const double> sorted_radii);

/// One row per atom: coordinates then weight.
void write_measure_csv(std::ostream& out, const DiscreteMeasure& mu);

}  // namespace slicedim
