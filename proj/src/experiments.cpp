#include "slicedim/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "slicedim/error.hpp"
#include "slicedim/harmonic.hpp"
#include "slicedim/parallel.hpp"
#include "slicedim/rng.hpp"

namespace slicedim {

using nlohmann::json;

// Reporting primitives ---------------------------------------------------------

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

Verdict make_verdict(std::string name, double value, std::optional<double> lo, std::optional<double> hi,
                     bool strict) {
  Verdict v{std::move(name), value, lo, hi, strict, true, {}};
  if (std::isnan(value)) {
    v.passed = false;
    v.note = "no data";
    return v;
  }
  if (lo) v.passed = v.passed && (strict ? value > *lo : value >= *lo);
  if (hi) v.passed = v.passed && (strict ? value < *hi : value <= *hi);
  return v;
}

void Table::write_csv(std::ostream& out) const {
  for (std::size_t i = 0; i < columns.size(); ++i) out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << row[i] << (i + 1 < row.size() ? "," : "\n");
  }
}

bool ExperimentReport::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json verdict_json(const Verdict& v) {
  json j{{"name", v.name}, {"value", number_or_null(v.value)}, {"passed", v.passed}, {"strict", v.strict}};
  j["lo"] = v.lo ? json(*v.lo) : json(nullptr);
  j["hi"] = v.hi ? json(*v.hi) : json(nullptr);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

}  // namespace

json ExperimentReport::to_json() const {
  json j;
  j["scenario"] = to_string(scenario);
  j["summary"] = summary;
  j["audit"] = audit;
  json vs = json::array();
  for (const auto& v : verdicts) vs.push_back(verdict_json(v));
  j["verdicts"] = vs;
  j["passed"] = passed();
  j["warnings"] = warnings;
  return j;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + frac * (values[i + 1] - values[i]);
}

namespace {

std::string join_numbers(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ";";
    out += format_number(xs[i]);
  }
  return out;
}

void note(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::vector<std::string> warning_strings(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& d : hypothesis_warnings(cfg)) out.push_back(to_string(d));
  return out;
}

double cover_diameter(const DyadicCover& cover) {
  return bounding_box(cover.centers).diagonal() + cover.cube_side * std::sqrt(static_cast<double>(cover.ambient_dim));
}

// Audit ------------------------------------------------------------------------

std::vector<double> audit_radii(const SetSpec& set, const DiscreteMeasure& mu, int generation) {
  std::vector<double> radii;
  if (auto ifs = set.ifs_spec()) {
    for (int j = 0; j <= generation; ++j) radii.push_back(std::pow(ifs->ratio, j));
    return radii;
  }
  const double floor_radius = mu.cell_size() > 0.0 ? mu.cell_size() : std::ldexp(1.0, -10);
  for (double r = 1.0; r >= floor_radius * (1.0 - 1e-12); r *= 0.5) radii.push_back(r);
  return radii;
}

json audit_set(const SetSpec& set, const AuditSettings& a, std::size_t budget, bool& certified) {
  const double s = set.dimension();
  const int generation = set.generation_within(a.max_atoms);
  const auto mu = set.measure_at(generation, budget);
  const auto radii = audit_radii(set, mu, generation);
  json j;
  j["exponent"] = s;
  j["generation"] = generation;
  j["atoms"] = mu.size();
  j["radii"] = radii;
  if (s > 0.0) {
    const double frostman = frostman_constant(mu, s, a.centers, radii);
    j["frostman_constant"] = frostman;
    j["frostman_pass"] = frostman <= a.frostman_max;
  } else {
    const double frostman = frostman_constant(mu, 1.0, a.centers, radii);
    j["frostman_constant"] = frostman;
    j["frostman_exponent_used"] = 1.0;
    j["frostman_pass"] = frostman <= a.frostman_max;
  }
  const double lower = lower_density_estimate(mu, s, radii, a.centers);
  j["lower_density"] = lower;
  j["lower_density_pass"] = lower >= a.lower_density_min;
  certified = certified && j["frostman_pass"].get<bool>() && j["lower_density_pass"].get<bool>();
  return j;
}

json audit_l2(const ProjectionFamily& family, const DiscreteMeasure& mu, const AuditSettings& a, bool& certified) {
  const double delta = std::max(a.l2_delta, std::ldexp(2.0 * mu.cell_size(), a.l2_halvings));
  const auto sweep = l2_delta_sweep(family, mu, a.l2_samples, delta, a.l2_halvings);
  json j;
  j["atoms"] = mu.size();
  j["lambda_samples"] = a.l2_samples;
  j["deltas"] = sweep.deltas;
  j["values"] = sweep.values;
  j["max_relative_change"] = sweep.max_relative_change;
  j["tolerance"] = a.l2_tolerance;
  j["stable"] = sweep.stable(a.l2_tolerance);
  certified = certified && sweep.stable(a.l2_tolerance);
  return j;
}

/// Factor generations for a product of at most `max_atoms` atoms.
std::pair<int, int> product_generations(const SetSpec& a, const SetSpec& b, std::size_t max_atoms) {
  const auto per_factor = static_cast<std::size_t>(std::sqrt(static_cast<double>(max_atoms)));
  return {a.generation_within(per_factor), b.generation_within(per_factor)};
}

}  // namespace

json assumption_audit(const ExperimentConfig& cfg, const ProgressFn& progress) {
  const auto& a = cfg.audit;
  const auto seed = cfg.effective_seed();
  json out;
  bool certified = true;
  json sets = json::object();
  note(progress, "audit: Frostman and lower-density checks");
  if (cfg.a) sets["A"] = audit_set(*cfg.a, a, cfg.budget_atoms, certified);
  if (cfg.b && cfg.scenario != Scenario::slice) sets["B"] = audit_set(*cfg.b, a, cfg.budget_atoms, certified);
  out["sets"] = sets;
  out["frostman_max"] = a.frostman_max;
  out["lower_density_min"] = a.lower_density_min;

  out["l2"] = nullptr;
  switch (cfg.scenario) {
    case Scenario::slice:
    case Scenario::assumption_audit: {
      const auto& set = *cfg.a;
      if (cfg.family.kind == FamilyKind::grassmannian && cfg.family.target_dim >= set.ambient_dim) break;
      note(progress, "audit: L2 density functional");
      const auto mu = set.measure_at(set.generation_within(a.max_atoms), cfg.budget_atoms);
      out["l2"] = audit_l2(cfg.family.build(set.ambient_dim, seed), mu, a, certified);
      break;
    }
    case Scenario::product_slice: {
      note(progress, "audit: L2 density functional of the product");
      const auto [ga, gb] = product_generations(*cfg.a, *cfg.b, a.max_atoms);
      const auto mu = product_measure(cfg.a->measure_at(ga, cfg.budget_atoms), cfg.b->measure_at(gb, cfg.budget_atoms),
                                      cfg.budget_atoms);
      out["l2"] = audit_l2(cfg.family.build(mu.ambient_dim(), seed), mu, a, certified);
      break;
    }
    case Scenario::intersection: {
      note(progress, "audit: L2 density functional of the difference map");
      const auto [ga, gb] = product_generations(*cfg.a, *cfg.b, a.max_atoms);
      const auto mu = product_measure(cfg.a->measure_at(ga, cfg.budget_atoms), cfg.b->measure_at(gb, cfg.budget_atoms),
                                      cfg.budget_atoms);
      out["l2"] = audit_l2(ProjectionFamily::difference(cfg.a->ambient_dim, seed), mu, a, certified);
      break;
    }
    default:
      break;
  }
  out["certified"] = certified;
  return out;
}

namespace {

// Dimension sampling -----------------------------------------------------------

struct DimSample {
  std::size_t group = 0;
  bool grid = false;
  std::size_t offset_index = 0;
  std::vector<double> offset;
  std::vector<double> parameters;
  SetDimension est;
};

/// Grid nodes (k + 1/2) (hi - lo) / count per axis over a box, row-major.
std::vector<std::vector<double>> grid_offsets(const Box& box, int total) {
  const auto m = box.lo.size();
  const int per_axis = std::max(1, static_cast<int>(std::ceil(std::pow(total, 1.0 / static_cast<double>(m)) - 1e-9)));
  std::size_t count = 1;
  for (std::size_t d = 0; d < m; ++d) count *= static_cast<std::size_t>(per_axis);
  std::vector<std::vector<double>> out(count, std::vector<double>(m));
  for (std::size_t idx = 0; idx < count; ++idx) {
    std::size_t rest = idx;
    for (std::size_t d = 0; d < m; ++d) {
      const auto k = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
      out[idx][d] = box.lo[d] + (k + 0.5) * (box.hi[d] - box.lo[d]) / per_axis;
    }
  }
  return out;
}

double box_volume(const Box& box) {
  double v = 1.0;
  for (std::size_t d = 0; d < box.lo.size(); ++d) v *= box.hi[d] - box.lo[d];
  return v;
}

struct Window {
  double delta = 0.0;
  double top = 0.0;
  double bottom = 0.0;
};

Window fit_window(const ExperimentConfig& cfg, double cube_side, double diameter) {
  Window w;
  w.delta = cfg.delta.factor * cube_side;
  w.top = cfg.delta.fit_top_fraction * diameter;
  w.bottom = cfg.delta.fit_bottom_factor * w.delta;
  return w;
}

/// Slices of `cover` by the fibres of family members. Pushforward offsets are
/// images of uniformly drawn cube centres (every cube carries equal mass).
std::vector<DimSample> run_slices(const DyadicCover& cover, const ProjectionFamily& family, const ExperimentConfig& cfg,
                                  const Window& w, std::vector<double>& grid_measure) {
  const auto seed = cfg.effective_seed();
  const auto groups = static_cast<std::size_t>(cfg.samples.parameters);
  const auto n_offsets = static_cast<std::size_t>(cfg.samples.offsets);
  const std::size_t count = cover.size();
  std::vector<std::vector<DimSample>> per_group(groups);
  grid_measure.assign(groups, 0.0);

  parallel_for(groups, [&](std::size_t g) {
    const auto sample = sample_projection(family, g);
    const auto& p = sample.projection;
    const auto m = static_cast<std::size_t>(p.target_dim());
    PointSet projected(p.target_dim(), std::vector<double>(count * m));
    for (std::size_t i = 0; i < count; ++i) p.apply(cover.centers[i], projected.mutable_point(i));

    std::vector<std::pair<double, std::uint32_t>> sorted;
    std::unique_ptr<GridHash> hash;
    if (m == 1) {
      sorted.resize(count);
      for (std::size_t i = 0; i < count; ++i) sorted[i] = {projected[i][0], static_cast<std::uint32_t>(i)};
      std::sort(sorted.begin(), sorted.end());
    } else {
      hash = std::make_unique<GridHash>(projected, w.delta);
    }
    auto slab = [&](std::span<const double> u) {
      std::vector<std::uint32_t> members;
      if (m == 1) {
        auto lo = std::lower_bound(sorted.begin(), sorted.end(), std::make_pair(u[0] - w.delta, std::uint32_t{0}));
        for (auto it = lo; it != sorted.end() && it->first <= u[0] + w.delta; ++it) members.push_back(it->second);
        std::sort(members.begin(), members.end());
      } else {
        hash->for_each_within(u, w.delta, [&](std::size_t i) { members.push_back(static_cast<std::uint32_t>(i)); });
        std::sort(members.begin(), members.end());
      }
      PointSet pts(cover.ambient_dim);
      pts.reserve(members.size());
      for (auto i : members) pts.push_back(cover.centers[i]);
      return pts;
    };
    auto measure = [&](std::span<const double> u) {
      PointSet pts = slab(u);
      if (pts.empty()) return estimate_dimension(pts, w.top, w.bottom);
      return estimate_dimension(fiber_coordinates(pts, p), w.top, w.bottom);
    };

    auto& out = per_group[g];
    for (std::size_t o = 0; o < n_offsets; ++o) {
      Rng rng(seed, Stream::offsets, g * n_offsets + o);
      const auto idx = static_cast<std::size_t>(rng.below(count));
      std::vector<double> u(projected[idx].begin(), projected[idx].end());
      DimSample s{g, false, o, u, sample.parameters, measure(u)};
      out.push_back(std::move(s));
    }
    if (cfg.samples.grid_offsets > 0) {
      const Box box = bounding_box(projected).expanded(w.delta);
      grid_measure[g] = box_volume(box);
      const auto nodes = grid_offsets(box, cfg.samples.grid_offsets);
      for (std::size_t o = 0; o < nodes.size(); ++o) {
        DimSample s{g, true, o, nodes[o], sample.parameters, measure(nodes[o])};
        out.push_back(std::move(s));
      }
    }
  });
  std::vector<DimSample> all;
  for (auto& v : per_group) {
    for (auto& s : v) all.push_back(std::move(s));
  }
  return all;
}

std::vector<DimSample> run_intersections(const DyadicCover& a, const DyadicCover& b, const ExperimentConfig& cfg,
                                         const Window& w, std::vector<double>& grid_measure) {
  const auto seed = cfg.effective_seed();
  const int n = a.ambient_dim;
  const auto groups = static_cast<std::size_t>(cfg.samples.parameters);
  const auto n_offsets = static_cast<std::size_t>(cfg.samples.offsets);
  const IntersectionIndex index(a, w.delta);
  const Box a_box = bounding_box(a.centers);
  std::vector<std::vector<DimSample>> per_group(groups);
  grid_measure.assign(groups, 0.0);

  parallel_for(groups, [&](std::size_t g) {
    const Rotation rot = random_rotation(n, seed, g);
    std::vector<double> params(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) params[static_cast<std::size_t>(i * n + j)] = rot.matrix()(i, j);
    }
    auto& out = per_group[g];
    std::vector<double> gy(static_cast<std::size_t>(n));
    for (std::size_t o = 0; o < n_offsets; ++o) {
      Rng rng(seed, Stream::offsets, g * n_offsets + o);
      const auto x = a.centers[static_cast<std::size_t>(rng.below(a.size()))];
      const auto y = b.centers[static_cast<std::size_t>(rng.below(b.size()))];
      rot.apply(y, gy);
      std::vector<double> z(static_cast<std::size_t>(n));
      for (int d = 0; d < n; ++d) z[d] = x[d] - gy[d];
      out.push_back({g, false, o, z, params, estimate_dimension(index.intersect(b, rot, z), w.top, w.bottom)});
    }
    if (cfg.samples.grid_offsets > 0) {
      const Box gb = bounding_box(rot.apply(b.centers));
      Box zbox;
      for (int d = 0; d < n; ++d) {
        zbox.lo.push_back(a_box.lo[d] - gb.hi[d]);
        zbox.hi.push_back(a_box.hi[d] - gb.lo[d]);
      }
      zbox = zbox.expanded(w.delta);
      grid_measure[g] = box_volume(zbox);
      const auto nodes = grid_offsets(zbox, cfg.samples.grid_offsets);
      for (std::size_t o = 0; o < nodes.size(); ++o) {
        out.push_back({g, true, o, nodes[o], params, estimate_dimension(index.intersect(b, rot, nodes[o]), w.top, w.bottom)});
      }
    }
  });
  std::vector<DimSample> all;
  for (auto& v : per_group) {
    for (auto& s : v) all.push_back(std::move(s));
  }
  return all;
}

/// Statistics, verdicts and tables shared by the slice and intersection
/// scenarios.
void aggregate(ExperimentReport& report, const std::vector<DimSample>& samples, std::size_t groups, double predicted,
               const ExperimentConfig& cfg, const std::vector<double>& grid_measure, const char* group_name,
               const char* offset_name) {
  const auto& tol = cfg.tolerance;
  std::vector<double> pushforward;
  std::vector<std::vector<double>> by_group(groups);
  std::size_t pf_total = 0, pf_skipped = 0;
  std::size_t grid_total = 0, grid_nonempty = 0, grid_good = 0;
  std::vector<std::size_t> grid_good_by_group(groups, 0), grid_total_by_group(groups, 0);
  std::size_t estimated = 0, violations = 0;
  std::vector<double> grid_dims;

  for (const auto& s : samples) {
    if (s.est.estimated) {
      ++estimated;
      if (s.est.fit.slope > predicted + tol.upper_slack) ++violations;
    }
    if (!s.grid) {
      ++pf_total;
      if (s.est.estimated) {
        pushforward.push_back(s.est.fit.slope);
        by_group[s.group].push_back(s.est.fit.slope);
      } else {
        ++pf_skipped;
      }
    } else {
      ++grid_total;
      ++grid_total_by_group[s.group];
      if (s.est.points > 0) ++grid_nonempty;
      if (s.est.estimated) {
        grid_dims.push_back(s.est.fit.slope);
        if (std::abs(s.est.fit.slope - predicted) <= tol.band) {
          ++grid_good;
          ++grid_good_by_group[s.group];
        }
      }
    }
  }
  std::vector<double> group_medians;
  for (const auto& v : by_group) {
    if (!v.empty()) group_medians.push_back(quantile(v, 0.5));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double median = quantile(pushforward, 0.5);
  const double q25 = quantile(pushforward, 0.25);
  const double q75 = quantile(pushforward, 0.75);
  const double group_q25 = quantile(group_medians, 0.25);
  const double good_fraction = grid_total ? static_cast<double>(grid_good) / grid_total : nan;
  const double good_fraction_nonempty = grid_nonempty ? static_cast<double>(grid_good) / grid_nonempty : nan;
  double good_measure = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    if (grid_total_by_group[g]) {
      good_measure += grid_measure[g] * static_cast<double>(grid_good_by_group[g]) / grid_total_by_group[g];
    }
  }
  good_measure /= static_cast<double>(std::max<std::size_t>(1, groups));
  const double violation_rate = estimated ? static_cast<double>(violations) / estimated : nan;

  auto& j = report.summary;
  j["predicted_dim"] = predicted;
  j[std::string(group_name) + "_samples"] = groups;
  j["pushforward"] = {{"samples", pf_total},
                      {"estimated", pushforward.size()},
                      {"skipped", pf_skipped},
                      {"median_dim", number_or_null(median)},
                      {"q25_dim", number_or_null(q25)},
                      {"q75_dim", number_or_null(q75)},
                      {"iqr", number_or_null(q75 - q25)},
                      {"q25_of_" + std::string(group_name) + "_medians", number_or_null(group_q25)}};
  j["grid"] = {{"samples", grid_total},
               {"nonempty", grid_nonempty},
               {"estimated", grid_dims.size()},
               {"good", grid_good},
               {"median_dim", number_or_null(quantile(grid_dims, 0.5))},
               {"good_fraction", number_or_null(good_fraction)},
               {"good_fraction_nonempty", number_or_null(good_fraction_nonempty)},
               {"good_" + std::string(offset_name) + "_measure", good_measure}};
  j["upper_violation_rate"] = number_or_null(violation_rate);

  report.verdicts.push_back(make_verdict("median_dim", median, predicted - tol.band, predicted + tol.band));
  report.verdicts.push_back(make_verdict("q25_of_" + std::string(group_name) + "_medians", group_q25,
                                         predicted - tol.band, predicted + tol.band));
  if (grid_total > 0) {
    report.verdicts.push_back(make_verdict("good_" + std::string(offset_name) + "_fraction", good_fraction,
                                           tol.min_good_fraction, std::nullopt, true));
  }
  report.verdicts.push_back(
      make_verdict("upper_violation_rate", violation_rate, std::nullopt, tol.max_upper_violation, true));

  report.samples.columns = {"sample", group_name, "offset_kind", "offset_index", offset_name, "parameters",
                            "points", "estimated", "reason", "dim", "r_squared", "reliable", "scales"};
  report.scaling.columns = {"sample", group_name, "offset_kind", "side", "count", "log_inv_side", "log_count"};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto& e = s.est;
    report.samples.rows.push_back({std::to_string(i), std::to_string(s.group), s.grid ? "grid" : "pushforward",
                                   std::to_string(s.offset_index), join_numbers(s.offset), join_numbers(s.parameters),
                                   std::to_string(e.points), e.estimated ? "1" : "0", e.reason,
                                   e.estimated ? format_number(e.fit.slope) : "",
                                   e.estimated ? format_number(e.fit.r_squared) : "",
                                   e.estimated ? (e.fit.reliable() ? "1" : "0") : "", std::to_string(e.counts.size())});
    for (const auto& c : e.counts) {
      report.scaling.rows.push_back({std::to_string(i), std::to_string(s.group), s.grid ? "grid" : "pushforward",
                                     format_number(c.side), std::to_string(c.count), format_number(-std::log(c.side)),
                                     format_number(std::log(static_cast<double>(c.count)))});
    }
  }
}

void attach_audit(ExperimentReport& report, const ExperimentConfig& cfg, const ProgressFn& progress) {
  if (!cfg.audit.enabled) return;
  report.audit = assumption_audit(cfg, progress);
  const bool certified = report.audit["certified"].get<bool>();
  report.summary["hypothesis_certified"] = certified;
  if (!certified) {
    for (auto& v : report.verdicts) v.note = "hypothesis not certified";
  }
}

json window_json(const Window& w, double cube_side) {
  return {{"delta", w.delta}, {"cube_side", cube_side}, {"fit_top_side", w.top}, {"fit_bottom_side", w.bottom}};
}

}  // namespace

// Scenarios --------------------------------------------------------------------

ExperimentReport slice_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::slice;
  report.warnings = warning_strings(cfg);
  const auto& set = *cfg.a;
  note(progress, "slice: building the cover of A");
  const DyadicCover cover = set.cover(cfg.budget_atoms);
  const auto family = cfg.family.build(set.ambient_dim, cfg.effective_seed());
  const int m = family.target_dim;
  const double predicted = cfg.target_dim.value_or(set.dimension() - m);
  const Window w = fit_window(cfg, cover.cube_side, cover_diameter(cover));
  report.summary["set_dim"] = set.dimension();
  report.summary["target_dim_m"] = m;
  report.summary["cubes"] = cover.size();
  report.summary["window"] = window_json(w, cover.cube_side);
  note(progress, "slice: sampling " + std::to_string(cfg.samples.parameters) + " projections");
  std::vector<double> grid_measure;
  const auto samples = run_slices(cover, family, cfg, w, grid_measure);
  aggregate(report, samples, static_cast<std::size_t>(cfg.samples.parameters), predicted, cfg, grid_measure, "lambda",
            "u");
  attach_audit(report, cfg, progress);
  return report;
}

ExperimentReport product_slice_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::product_slice;
  report.warnings = warning_strings(cfg);
  note(progress, "product-slice: building the product cover");
  const DyadicCover a = cfg.a->cover(cfg.budget_atoms);
  const DyadicCover b = cfg.b->cover(cfg.budget_atoms);
  const DyadicCover cover = product_cover(a, b, cfg.budget_atoms);
  const auto family = cfg.family.build(cover.ambient_dim, cfg.effective_seed());
  const int m = family.target_dim;
  const double s = cfg.a->dimension(), t = cfg.b->dimension();
  const double predicted = cfg.target_dim.value_or(s + t - m);
  const Window w = fit_window(cfg, cover.cube_side, cover_diameter(cover));
  report.summary["set_dims"] = {s, t};
  report.summary["target_dim_m"] = m;
  report.summary["cubes"] = cover.size();
  report.summary["window"] = window_json(w, cover.cube_side);
  note(progress, "product-slice: sampling " + std::to_string(cfg.samples.parameters) + " projections");
  std::vector<double> grid_measure;
  const auto samples = run_slices(cover, family, cfg, w, grid_measure);
  aggregate(report, samples, static_cast<std::size_t>(cfg.samples.parameters), predicted, cfg, grid_measure, "lambda",
            "u");
  attach_audit(report, cfg, progress);
  return report;
}

ExperimentReport intersection_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::intersection;
  report.warnings = warning_strings(cfg);
  note(progress, "intersect: building covers");
  const DyadicCover a = cfg.a->cover(cfg.budget_atoms);
  const DyadicCover b = cfg.b->cover(cfg.budget_atoms);
  const int n = a.ambient_dim;
  const double s = cfg.a->dimension(), t = cfg.b->dimension();
  const double predicted = cfg.target_dim.value_or(s + t - n);
  const Window w = fit_window(cfg, std::max(a.cube_side, b.cube_side), cover_diameter(a));
  report.summary["set_dims"] = {s, t};
  report.summary["hypothesis_value"] = s + (n - 1) * t / n;
  report.summary["cubes"] = {a.size(), b.size()};
  report.summary["window"] = window_json(w, std::max(a.cube_side, b.cube_side));
  note(progress, "intersect: sampling " + std::to_string(cfg.samples.parameters) + " rotations");
  std::vector<double> grid_measure;
  const auto samples = run_intersections(a, b, cfg, w, grid_measure);
  aggregate(report, samples, static_cast<std::size_t>(cfg.samples.parameters), predicted, cfg, grid_measure, "g", "z");
  attach_audit(report, cfg, progress);
  return report;
}

ExperimentReport identity_check_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::identity_check;
  report.warnings = warning_strings(cfg);
  const auto& id = cfg.identity;
  const auto mu = cfg.a->measure(cfg.budget_atoms);
  const auto nu = cfg.b->measure(cfg.budget_atoms);
  const int n = mu.ambient_dim();
  note(progress, "identity-check: " + std::to_string(id.rotations) + " rotations");
  const auto grid = FrequencyGrid::make(n, id.cutoff, id.spacing);
  const auto check = rotation_average_identity_check(mu, nu, id.rotations, grid, cfg.effective_seed());
  report.summary["identity"] = {{"lhs", check.lhs},
                                {"rhs", check.rhs},
                                {"relative_error", check.relative_error},
                                {"grid_nodes", check.grid_nodes},
                                {"cutoff", grid.cutoff},
                                {"spacing", grid.spacing},
                                {"rotations", check.rotation_samples}};
  report.verdicts.push_back(make_verdict("identity_relative_error", check.relative_error, std::nullopt, id.max_error, true));

  report.samples.columns = {"quantity", "cutoff", "value", "growth"};
  report.samples.rows.push_back({"identity_lhs", format_number(grid.cutoff), format_number(check.lhs), ""});
  report.samples.rows.push_back({"identity_rhs", format_number(grid.cutoff), format_number(check.rhs), ""});
  report.scaling.columns = {"cutoff", "log_cutoff", "truncated_integral", "log_integral"};

  if (id.growth_cutoffs.size() >= 2) {
    const double s = cfg.a->dimension();
    const double tp = id.t_prime.value_or(std::max(0.0, cfg.b->dimension() - 0.1));
    const double beta = (n - 1) * tp / n;
    const int gen = cfg.a->kind == SetKind::cantor || cfg.a->kind == SetKind::ifs ? id.growth_generation
                                                                                   : cfg.a->generation;
    const auto mu_growth = cfg.a->measure_at(gen, cfg.budget_atoms);
    auto cutoffs = id.growth_cutoffs;
    std::sort(cutoffs.begin(), cutoffs.end());
    note(progress, "identity-check: truncated integrals up to cutoff " + format_number(cutoffs.back()));
    std::vector<double> integrals;
    double total = 0.0, prev = 1.0;
    for (double r : cutoffs) {
      total += radial_weighted_integral(mu_growth, beta, prev, r);
      prev = r;
      integrals.push_back(total);
    }
    std::vector<double> growth;
    for (std::size_t i = 1; i < integrals.size(); ++i) growth.push_back(integrals[i] / integrals[i - 1]);
    report.summary["growth"] = {{"t_prime", tp},
                                {"beta", beta},
                                {"exponent", n - beta},
                                {"finite_expected", n - beta < s},
                                {"generation", gen},
                                {"cutoffs", cutoffs},
                                {"integrals", integrals},
                                {"growth_factors", growth}};
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
      report.samples.rows.push_back({"truncated_integral", format_number(cutoffs[i]), format_number(integrals[i]),
                                     i ? format_number(growth[i - 1]) : ""});
      report.scaling.rows.push_back({format_number(cutoffs[i]), format_number(std::log(cutoffs[i])),
                                     format_number(integrals[i]), format_number(std::log(integrals[i]))});
    }
    report.verdicts.push_back(make_verdict("last_growth_factor", growth.back(), std::nullopt, id.max_growth));
  }
  attach_audit(report, cfg, progress);
  return report;
}

ExperimentReport audit_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::assumption_audit;
  report.warnings = warning_strings(cfg);
  report.audit = assumption_audit(cfg, progress);
  const auto& audit = report.audit;
  report.summary["certified"] = audit["certified"];
  report.samples.columns = {"set", "check", "value", "threshold", "passed"};
  for (const auto& [name, set] : audit["sets"].items()) {
    const double f = set["frostman_constant"].get<double>();
    const double l = set["lower_density"].get<double>();
    report.verdicts.push_back(make_verdict("frostman_constant_" + name, f, std::nullopt, cfg.audit.frostman_max));
    report.verdicts.push_back(make_verdict("lower_density_" + name, l, cfg.audit.lower_density_min, std::nullopt));
    report.samples.rows.push_back({name, "frostman_constant", format_number(f), format_number(cfg.audit.frostman_max),
                                   set["frostman_pass"].get<bool>() ? "1" : "0"});
    report.samples.rows.push_back({name, "lower_density", format_number(l), format_number(cfg.audit.lower_density_min),
                                   set["lower_density_pass"].get<bool>() ? "1" : "0"});
  }
  report.scaling.columns = {"delta", "l2_value"};
  if (!audit["l2"].is_null()) {
    const auto& l2 = audit["l2"];
    const double change = l2["max_relative_change"].get<double>();
    report.verdicts.push_back(make_verdict("l2_max_relative_change", change, std::nullopt, cfg.audit.l2_tolerance));
    report.samples.rows.push_back({"", "l2_max_relative_change", format_number(change),
                                   format_number(cfg.audit.l2_tolerance), l2["stable"].get<bool>() ? "1" : "0"});
    const auto deltas = l2["deltas"].get<std::vector<double>>();
    const auto values = l2["values"].get<std::vector<double>>();
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      report.scaling.rows.push_back({format_number(deltas[i]), format_number(values[i])});
    }
  }
  return report;
}

ExperimentReport construct_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::construct;
  const auto& set = *cfg.a;
  note(progress, "construct: generation " + std::to_string(set.generation));
  const auto mu = set.measure(cfg.budget_atoms);
  const auto cover = set.cover(cfg.budget_atoms);
  const double dim = set.dimension();
  auto& j = report.summary;
  j["dimension"] = dim;
  j["generation"] = set.generation;
  j["atoms"] = mu.size();
  j["total_mass"] = mu.total_mass();
  j["cell_size"] = mu.cell_size();
  j["diameter"] = mu.diameter();
  j["cubes"] = cover.size();

  std::vector<ScaleCount> exact, cloud;
  if (auto ifs = set.ifs_spec()) {
    j["ifs"] = to_json(*ifs);
    for (int k = 0; k <= set.generation; ++k) {
      exact.push_back({std::pow(ifs->ratio, k), static_cast<std::size_t>(std::llround(std::pow(ifs->branch_count(), k)))});
      cloud.push_back({std::pow(ifs->ratio, k), box_count(cover.centers, std::pow(ifs->ratio, k))});
    }
    std::ostringstream ifs_doc;
    ifs_doc << to_json(*ifs).dump(2) << "\n";
    report.artifacts.push_back({"ifs.json", ifs_doc.str()});
  } else if (mu.cell_size() > 0.0) {
    for (double side : dyadic_sides(0.5 * (set.hi - set.lo), cover.cube_side)) {
      cloud.push_back({side, box_count(cover.centers, side)});
    }
  }
  if (exact.size() >= 4) {
    const auto fit = dim_fit(exact);
    j["exact_fit"] = {{"slope", fit.slope}, {"r_squared", fit.r_squared}, {"scales", exact.size()}};
    report.verdicts.push_back(make_verdict("exact_count_dim_error", std::abs(fit.slope - dim), std::nullopt, 1e-10));
  }
  if (cloud.size() >= 4) {
    const auto fit = dim_fit(cloud);
    j["point_cloud_fit"] = {{"slope", fit.slope}, {"r_squared", fit.r_squared}, {"scales", cloud.size()}};
    report.verdicts.push_back(
        make_verdict("point_cloud_dim_error", std::abs(fit.slope - dim), std::nullopt, cfg.construct.tolerance));
  }
  report.samples.columns = {"kind", "side", "count"};
  report.scaling.columns = {"kind", "log_inv_side", "log_count"};
  for (const auto* list : {&exact, &cloud}) {
    const char* kind = list == &exact ? "exact" : "point_cloud";
    for (const auto& c : *list) {
      report.samples.rows.push_back({kind, format_number(c.side), std::to_string(c.count)});
      report.scaling.rows.push_back(
          {kind, format_number(-std::log(c.side)), format_number(std::log(static_cast<double>(c.count)))});
    }
  }
  if (cfg.construct.write_atoms) {
    std::ostringstream atoms, cubes;
    write_measure_csv(atoms, mu);
    write_cover_csv(cubes, cover);
    report.artifacts.push_back({"measure.csv", atoms.str()});
    report.artifacts.push_back({"cover.csv", cubes.str()});
  }
  return report;
}

ExperimentReport energy_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::energy;
  const auto& e = cfg.energy;
  const auto mu = cfg.a->measure(cfg.budget_atoms);
  const int n = mu.ambient_dim();
  if (e.reference && e.s.size() != 1) throw ConfigError("energy.reference needs exactly one exponent in energy.s");
  auto cutoffs = e.cutoffs;
  std::sort(cutoffs.begin(), cutoffs.end());
  report.samples.columns = {"s", "cutoff", "spacing", "spatial", "fourier", "relative_gap"};
  report.scaling.columns = {"s", "log_cutoff", "log_relative_gap"};
  json rows = json::array();
  for (double s : e.s) {
    note(progress, "energy: s = " + format_number(s));
    const double spatial = energy_spatial(mu, s);
    json entry{{"s", s}, {"spatial", spatial}, {"riesz_constant", riesz_constant(n, s)}};
    if (e.reference) {
      const double gap = std::abs(spatial / *e.reference - 1.0);
      entry["reference"] = *e.reference;
      entry["reference_gap"] = gap;
      report.verdicts.push_back(
          make_verdict("spatial_reference_gap_s" + format_number(s), gap, std::nullopt, e.max_reference_gap));
    }
    std::vector<double> gaps, values;
    for (double r : cutoffs) {
      const auto grid = FrequencyGrid::for_support(n, r, mu.diameter());
      const double fourier = energy_fourier(mu, s, grid);
      const double gap = std::abs(fourier / spatial - 1.0);
      gaps.push_back(gap);
      values.push_back(fourier);
      report.samples.rows.push_back({format_number(s), format_number(r), format_number(grid.spacing),
                                     format_number(spatial), format_number(fourier), format_number(gap)});
      report.scaling.rows.push_back({format_number(s), format_number(std::log(r)), format_number(std::log(gap))});
    }
    entry["cutoffs"] = cutoffs;
    entry["fourier"] = values;
    entry["relative_gaps"] = gaps;
    rows.push_back(entry);
    report.verdicts.push_back(
        make_verdict("fourier_gap_s" + format_number(s), gaps.back(), std::nullopt, e.max_fourier_gap));
  }
  report.summary["energies"] = rows;
  report.summary["cell_size"] = mu.cell_size();
  return report;
}

ExperimentReport spherical_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  ExperimentReport report;
  report.scenario = Scenario::spherical;
  const auto& sp = cfg.spherical;
  const SetSpec& set = cfg.b ? *cfg.b : *cfg.a;
  const auto nu = set.measure(cfg.budget_atoms);
  const int n = nu.ambient_dim();
  std::vector<double> radii;
  for (int i = 0; i < sp.points; ++i) {
    radii.push_back(sp.r_min * std::pow(sp.r_max / sp.r_min, static_cast<double>(i) / (sp.points - 1)));
  }
  note(progress, "spherical: " + std::to_string(sp.points) + " radii");
  const auto samples = spherical_sweep(nu, radii, sp.nodes);
  const auto fit = decay_exponent_fit(nu, radii, sp.nodes);
  const double tp = sp.t_prime.value_or(std::max(0.0, set.dimension() - 0.1));
  const double bound = -(n - 1) * tp / n + sp.slack;
  report.summary["t_prime"] = tp;
  report.summary["decay_slope"] = fit.slope;
  report.summary["r_squared"] = fit.r_squared;
  report.summary["slope_bound"] = bound;
  report.summary["r_range"] = {sp.r_min, sp.r_max};
  report.verdicts.push_back(make_verdict("decay_slope", fit.slope, std::nullopt, bound));
  report.samples.columns = {"r", "value", "nodes"};
  report.scaling.columns = {"log_r", "log_value"};
  for (const auto& s : samples) {
    report.samples.rows.push_back({format_number(s.r), format_number(s.value), std::to_string(s.nodes)});
    report.scaling.rows.push_back({format_number(std::log(s.r)), format_number(std::log(s.value))});
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
  switch (cfg.scenario) {
    case Scenario::construct:
      return construct_experiment(cfg, progress);
    case Scenario::energy:
      return energy_experiment(cfg, progress);
    case Scenario::spherical:
      return spherical_experiment(cfg, progress);
    case Scenario::slice:
      return slice_experiment(cfg, progress);
    case Scenario::product_slice:
      return product_slice_experiment(cfg, progress);
    case Scenario::intersection:
      return intersection_experiment(cfg, progress);
    case Scenario::identity_check:
      return identity_check_experiment(cfg, progress);
    case Scenario::assumption_audit:
      return audit_experiment(cfg, progress);
  }
  throw std::logic_error("unknown scenario");
}

}  // namespace slicedim
