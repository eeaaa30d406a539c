#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicedim/boxdim.hpp"
#include "slicedim/geometry.hpp"
#include "slicedim/measure.hpp"

namespace slicedim {

enum class Scenario {
  construct,
  energy,
  spherical,
  slice,
  product_slice,
  intersection,
  identity_check,
  assumption_audit,
};

std::string to_string(Scenario s);
std::optional<Scenario> scenario_from_string(const std::string& name);

/// Seed used when neither the config nor the command line provides one.
inline constexpr std::uint64_t kDefaultSeed = 20240901;

enum class SetKind { cantor, ifs, lebesgue, point_mass };

/// One of the input sets A, B, together with its measure.
struct SetSpec {
  SetKind kind = SetKind::cantor;
  int ambient_dim = 1;
  double dim = 1.0;  ///< target dimension (cantor)
  BranchLayout layout = BranchLayout::corner;
  double ratio = 0.0;  ///< ifs
  std::vector<std::vector<double>> offsets;
  int generation = 6;
  int cells = 256;  ///< lebesgue: cells per axis
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> at;  ///< point_mass
  double weight = 1.0;

  /// Exact dimension of the underlying set.
  double dimension() const;
  /// The IFS behind cantor and ifs sets.
  std::optional<IfsSpec> ifs_spec() const;
  DiscreteMeasure measure(std::size_t budget) const;
  DiscreteMeasure measure_at(int generation_override, std::size_t budget) const;
  DyadicCover cover(std::size_t budget) const;
  /// Generation whose atom count stays within `max_atoms` (never above `generation`).
  int generation_within(std::size_t max_atoms) const;
};

struct FamilySpec {
  FamilyKind kind = FamilyKind::grassmannian;
  int target_dim = 1;
  double t_lo = 0.5;
  double t_hi = 2.0;
  std::vector<std::vector<double>> rows;  ///< fixed

  ProjectionFamily build(int source_dim, std::uint64_t seed) const;
};

struct SampleCounts {
  int parameters = 100;    ///< lambda or g samples
  int offsets = 50;        ///< pushforward-sampled u or z per parameter
  int grid_offsets = 50;   ///< uniform-grid u or z per parameter
};

struct DeltaPolicy {
  double factor = 1.0;             ///< delta = factor * cube side
  double fit_bottom_factor = 1.0;  ///< smallest fitted side = factor * delta
  double fit_top_fraction = 0.25;  ///< largest fitted side = fraction * diameter
};

struct Tolerances {
  double band = 0.12;
  double upper_slack = 0.15;
  double max_upper_violation = 0.10;
  double min_good_fraction = 0.05;
};

struct AuditSettings {
  bool enabled = true;
  std::size_t max_atoms = 65536;
  std::size_t centers = 256;
  double frostman_max = 4.0;
  double lower_density_min = 0.1;
  int l2_samples = 16;
  double l2_delta = 1.0 / 32.0;
  int l2_halvings = 2;
  double l2_tolerance = 0.15;
};

struct IdentitySettings {
  int rotations = 200;
  double cutoff = 64.0;
  double spacing = 0.5;
  std::optional<double> t_prime;
  int growth_generation = 9;
  std::vector<double> growth_cutoffs{256.0, 512.0, 1024.0, 2048.0};
  double max_error = 0.05;
  double max_growth = 1.1;
};

struct EnergySettings {
  std::vector<double> s{0.5};
  std::vector<double> cutoffs{32.0, 64.0, 128.0};
  std::optional<double> reference;  ///< closed-form value, when known
  double max_reference_gap = 0.02;
  double max_fourier_gap = 0.05;
};

struct SphericalSettings {
  double r_min = 4.0;
  double r_max = 256.0;
  int points = 7;
  int nodes = 0;
  std::optional<double> t_prime;
  double slack = 0.15;
};

struct ConstructSettings {
  double tolerance = 0.03;
  bool write_atoms = true;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::slice;
  std::optional<std::uint64_t> seed;
  std::size_t budget_atoms = kDefaultAtomBudget;
  std::optional<SetSpec> a;
  std::optional<SetSpec> b;
  FamilySpec family;
  SampleCounts samples;
  DeltaPolicy delta;
  Tolerances tolerance;
  std::optional<double> target_dim;
  AuditSettings audit;
  IdentitySettings identity;
  EnergySettings energy;
  SphericalSettings spherical;
  ConstructSettings construct;

  std::uint64_t effective_seed() const { return seed.value_or(kDefaultSeed); }
};

struct Diagnostic {
  enum class Level { error, warning, note };
  Level level = Level::error;
  std::string path;
  std::string message;
};

std::string to_string(const Diagnostic& d);

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return config.has_value(); }
};

/// Schema check with one diagnostic per offending field. Unknown keys are
/// warnings. `scenario_hint` fills in a missing "scenario" field.
ParseResult parse_config(const nlohmann::json& doc, std::optional<Scenario> scenario_hint = std::nullopt);

/// Hypothesis inequalities for the scenario (s > m, s + t > m,
/// s + (n-1) t / n > n), reported as warnings.
std::vector<Diagnostic> hypothesis_warnings(const ExperimentConfig& config);

/// 64-bit FNV-1a over the sorted-key serialization; key order does not matter.
std::uint64_t config_hash(const nlohmann::json& doc);
std::string hash_hex(std::uint64_t h);

nlohmann::json to_json(const IfsSpec& ifs);
IfsSpec ifs_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Projection& p);
Projection projection_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Rotation& g);
Rotation rotation_from_json(const nlohmann::json& doc);

}  // namespace slicedim
