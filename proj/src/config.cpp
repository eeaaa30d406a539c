#include "slicedim/config.hpp"

#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "slicedim/error.hpp"

namespace slicedim {

using nlohmann::json;

namespace {

const std::vector<std::pair<Scenario, std::string>> kScenarioNames = {
    {Scenario::construct, "construct"},
    {Scenario::energy, "energy"},
    {Scenario::spherical, "spherical"},
    {Scenario::slice, "slice"},
    {Scenario::product_slice, "product_slice"},
    {Scenario::intersection, "intersection"},
    {Scenario::identity_check, "identity_check"},
    {Scenario::assumption_audit, "assumption_audit"},
};

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

class Reader {
 public:
  explicit Reader(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void error(const std::string& path, const std::string& msg) {
    diags_.push_back({Diagnostic::Level::error, path, msg});
  }
  void warning(const std::string& path, const std::string& msg) {
    diags_.push_back({Diagnostic::Level::warning, path, msg});
  }
  bool failed() const {
    for (const auto& d : diags_) {
      if (d.level == Diagnostic::Level::error) return true;
    }
    return false;
  }

  bool object(const json& doc, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!doc.is_object()) {
      error(path, "expected an object");
      return false;
    }
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : doc.items()) {
      if (!keys.count(key)) warning(join(path, key), "unknown key (ignored)");
    }
    return true;
  }

  void number(const json& obj, const std::string& path, const char* key, double& out, double lo, double hi,
              bool lo_open = false) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const auto p = join(path, key);
    if (!v.is_number()) {
      error(p, "expected a number");
      return;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x) || x < lo || x > hi || (lo_open && x == lo)) {
      std::ostringstream msg;
      msg << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
      error(p, msg.str());
      return;
    }
    out = x;
  }

  void number(const json& obj, const std::string& path, const char* key, std::optional<double>& out, double lo,
              double hi) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    double x = 0.0;
    const auto before = diags_.size();
    number(obj, path, key, x, lo, hi);
    if (diags_.size() == before) out = x;
  }

  template <class Int>
  void integer(const json& obj, const std::string& path, const char* key, Int& out, long long lo, long long hi) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const auto p = join(path, key);
    if (!v.is_number_integer()) {
      error(p, "expected an integer");
      return;
    }
    const auto x = v.get<long long>();
    if (x < lo || x > hi) {
      std::ostringstream msg;
      msg << "value " << x << " outside [" << lo << ", " << hi << "]";
      error(p, msg.str());
      return;
    }
    out = static_cast<Int>(x);
  }

  void boolean(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) {
      error(join(path, key), "expected true or false");
      return;
    }
    out = obj.at(key).get<bool>();
  }

  void numbers(const json& obj, const std::string& path, const char* key, std::vector<double>& out, double lo,
               double hi, std::size_t min_size) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    const auto p = join(path, key);
    if (!v.is_array() || v.size() < min_size) {
      error(p, "expected an array of at least " + std::to_string(min_size) + " numbers");
      return;
    }
    std::vector<double> xs;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || v[i].get<double>() < lo || v[i].get<double>() > hi) {
        std::ostringstream msg;
        msg << "entry " << i << " must be a number in [" << lo << ", " << hi << "]";
        error(p, msg.str());
        return;
      }
      xs.push_back(v[i].get<double>());
    }
    out = std::move(xs);
  }

  bool matrix(const json& obj, const std::string& path, const char* key, std::vector<std::vector<double>>& out) {
    if (!obj.contains(key)) return false;
    const auto& v = obj.at(key);
    const auto p = join(path, key);
    if (!v.is_array() || v.empty()) {
      error(p, "expected a non-empty array of numeric rows");
      return false;
    }
    std::vector<std::vector<double>> rows;
    for (const auto& row : v) {
      if (!row.is_array() || row.empty()) {
        error(p, "every row must be a non-empty array of numbers");
        return false;
      }
      std::vector<double> r;
      for (const auto& x : row) {
        if (!x.is_number()) {
          error(p, "every entry must be a number");
          return false;
        }
        r.push_back(x.get<double>());
      }
      if (!rows.empty() && r.size() != rows.front().size()) {
        error(p, "rows have different lengths");
        return false;
      }
      rows.push_back(std::move(r));
    }
    out = std::move(rows);
    return true;
  }

 private:
  std::vector<Diagnostic>& diags_;
};

std::optional<SetSpec> parse_set(Reader& rd, const json& doc, const std::string& path) {
  if (!rd.object(doc, path,
                 {"kind", "ambient_dim", "dim", "layout", "ratio", "offsets", "generation", "cells", "lo", "hi", "at",
                  "weight"})) {
    return std::nullopt;
  }
  SetSpec s;
  const std::string kind = doc.value("kind", std::string("cantor"));
  if (kind == "cantor") {
    s.kind = SetKind::cantor;
  } else if (kind == "ifs") {
    s.kind = SetKind::ifs;
  } else if (kind == "lebesgue") {
    s.kind = SetKind::lebesgue;
  } else if (kind == "point_mass") {
    s.kind = SetKind::point_mass;
  } else {
    rd.error(join(path, "kind"), "unknown set kind '" + kind + "' (cantor, ifs, lebesgue, point_mass)");
    return std::nullopt;
  }
  rd.integer(doc, path, "ambient_dim", s.ambient_dim, 1, 3);
  rd.integer(doc, path, "generation", s.generation, 1, 40);
  switch (s.kind) {
    case SetKind::cantor: {
      if (!doc.contains("dim")) rd.error(join(path, "dim"), "required for cantor sets");
      rd.number(doc, path, "dim", s.dim, 0.0, 3.0, true);
      const std::string layout = doc.value("layout", std::string("corner"));
      if (layout == "corner") {
        s.layout = BranchLayout::corner;
      } else if (layout == "axis") {
        s.layout = BranchLayout::axis;
      } else {
        rd.error(join(path, "layout"), "expected 'corner' or 'axis'");
      }
      if (s.dim > s.ambient_dim) rd.error(join(path, "dim"), "exceeds ambient_dim");
      try {
        (void)build_cantor_ifs(s.ambient_dim, s.dim, s.layout);
      } catch (const std::exception& e) {
        rd.error(join(path, "dim"), e.what());
      }
      break;
    }
    case SetKind::ifs: {
      if (!doc.contains("ratio")) rd.error(join(path, "ratio"), "required for ifs sets");
      rd.number(doc, path, "ratio", s.ratio, 0.0, 0.5, true);
      if (!rd.matrix(doc, path, "offsets", s.offsets)) {
        if (!doc.contains("offsets")) rd.error(join(path, "offsets"), "required for ifs sets");
        break;
      }
      s.ambient_dim = static_cast<int>(s.offsets.front().size());
      try {
        (void)make_ifs(s.ratio, s.offsets);
      } catch (const std::exception& e) {
        rd.error(join(path, "offsets"), e.what());
      }
      break;
    }
    case SetKind::lebesgue:
      rd.integer(doc, path, "cells", s.cells, 1, 1 << 20);
      rd.number(doc, path, "lo", s.lo, -1e6, 1e6);
      rd.number(doc, path, "hi", s.hi, -1e6, 1e6);
      if (!(s.hi > s.lo)) rd.error(join(path, "hi"), "must exceed lo");
      break;
    case SetKind::point_mass:
      if (doc.contains("at")) {
        rd.numbers(doc, path, "at", s.at, -1e6, 1e6, 1);
        s.ambient_dim = static_cast<int>(s.at.size());
      } else {
        s.at.assign(static_cast<std::size_t>(s.ambient_dim), 0.0);
      }
      rd.number(doc, path, "weight", s.weight, 0.0, 1e12, true);
      break;
  }
  return s;
}

void parse_family(Reader& rd, const json& doc, FamilySpec& f) {
  const std::string path = "family";
  if (!rd.object(doc, path, {"kind", "target_dim", "t_range", "rows"})) return;
  const std::string kind = doc.value("kind", std::string("grassmannian"));
  if (kind == "grassmannian") {
    f.kind = FamilyKind::grassmannian;
  } else if (kind == "difference") {
    f.kind = FamilyKind::difference;
  } else if (kind == "scaled_difference") {
    f.kind = FamilyKind::scaled_difference;
  } else if (kind == "fixed") {
    f.kind = FamilyKind::fixed;
  } else {
    rd.error("family.kind", "unknown family '" + kind + "' (grassmannian, difference, scaled_difference, fixed)");
    return;
  }
  rd.integer(doc, path, "target_dim", f.target_dim, 1, 3);
  if (doc.contains("t_range")) {
    std::vector<double> range;
    rd.numbers(doc, path, "t_range", range, -1e6, 1e6, 2);
    if (range.size() == 2 && range[0] <= range[1]) {
      f.t_lo = range[0];
      f.t_hi = range[1];
    } else if (!range.empty()) {
      rd.error("family.t_range", "expected [t_lo, t_hi] with t_lo <= t_hi");
    }
  }
  if (f.kind == FamilyKind::fixed) {
    if (!rd.matrix(doc, path, "rows", f.rows)) {
      if (!doc.contains("rows")) rd.error("family.rows", "required for the fixed family");
    } else {
      try {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(f.rows.size()), static_cast<Eigen::Index>(f.rows[0].size()));
        for (std::size_t i = 0; i < f.rows.size(); ++i) {
          for (std::size_t j = 0; j < f.rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f.rows[i][j];
        }
        (void)Projection(m);
        f.target_dim = static_cast<int>(f.rows.size());
      } catch (const std::exception& e) {
        rd.error("family.rows", e.what());
      }
    }
  }
}

}  // namespace

std::string to_string(Scenario s) {
  for (const auto& [value, name] : kScenarioNames) {
    if (value == s) return name;
  }
  return "unknown";
}

std::optional<Scenario> scenario_from_string(const std::string& name) {
  for (const auto& [value, n] : kScenarioNames) {
    if (n == name) return value;
  }
  return std::nullopt;
}

std::string to_string(const Diagnostic& d) {
  const char* level = d.level == Diagnostic::Level::error     ? "error"
                      : d.level == Diagnostic::Level::warning ? "warning"
                                                              : "note";
  return std::string(level) + ": " + (d.path.empty() ? "" : d.path + ": ") + d.message;
}

// SetSpec --------------------------------------------------------------------

double SetSpec::dimension() const {
  switch (kind) {
    case SetKind::cantor:
      return dim;
    case SetKind::ifs:
      return ifs_spec()->similarity_dim;
    case SetKind::lebesgue:
      return ambient_dim;
    case SetKind::point_mass:
      return 0.0;
  }
  return 0.0;
}

std::optional<IfsSpec> SetSpec::ifs_spec() const {
  if (kind == SetKind::cantor) return build_cantor_ifs(ambient_dim, dim, layout);
  if (kind == SetKind::ifs) return make_ifs(ratio, offsets);
  return std::nullopt;
}

DiscreteMeasure SetSpec::measure_at(int gen, std::size_t budget) const {
  switch (kind) {
    case SetKind::cantor:
    case SetKind::ifs:
      return natural_measure(*ifs_spec(), gen, budget);
    case SetKind::lebesgue: {
      double total = 1.0;
      for (int d = 0; d < ambient_dim; ++d) total *= cells;
      if (total > static_cast<double>(budget)) {
        std::ostringstream msg;
        msg << "lebesgue set: " << cells << "^" << ambient_dim << " cells exceed the atom budget of " << budget
            << " (raise --budget-atoms)";
        throw BudgetError(msg.str());
      }
      return uniform_measure(ambient_dim, cells, lo, hi);
    }
    case SetKind::point_mass:
      return point_mass(at, weight);
  }
  throw std::logic_error("unknown set kind");
}

DiscreteMeasure SetSpec::measure(std::size_t budget) const { return measure_at(generation, budget); }

DyadicCover SetSpec::cover(std::size_t budget) const {
  switch (kind) {
    case SetKind::cantor:
    case SetKind::ifs:
      return cover_from_ifs(*ifs_spec(), generation, budget);
    case SetKind::lebesgue: {
      auto mu = measure(budget);
      return cover_from_points(mu.atoms(), (hi - lo) / cells);
    }
    case SetKind::point_mass: {
      PointSet p(ambient_dim);
      p.push_back(at);
      return DyadicCover{ambient_dim, 0, 2.0, 1.0, std::move(p)};
    }
  }
  throw std::logic_error("unknown set kind");
}

int SetSpec::generation_within(std::size_t max_atoms) const {
  if (kind != SetKind::cantor && kind != SetKind::ifs) return generation;
  const double n = ifs_spec()->branch_count();
  int g = 1;
  while (g < generation && std::pow(n, g + 1) <= static_cast<double>(max_atoms)) ++g;
  return g;
}

ProjectionFamily FamilySpec::build(int source_dim, std::uint64_t seed) const {
  switch (kind) {
    case FamilyKind::grassmannian:
      return ProjectionFamily::grassmannian(source_dim, target_dim, seed);
    case FamilyKind::difference:
      if (source_dim % 2 != 0) throw ConfigError("difference family needs a product of two equal dimensions");
      return ProjectionFamily::difference(source_dim / 2, seed);
    case FamilyKind::scaled_difference:
      if (source_dim % 2 != 0) throw ConfigError("scaled_difference family needs a product of two equal dimensions");
      return ProjectionFamily::scaled_difference(source_dim / 2, seed, t_lo, t_hi);
    case FamilyKind::fixed: {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
      if (m.cols() != source_dim) throw ConfigError("fixed projection does not match the set dimension");
      return ProjectionFamily::fixed(Projection(m));
    }
  }
  throw std::logic_error("unknown family kind");
}

// Parsing --------------------------------------------------------------------

ParseResult parse_config(const json& doc, std::optional<Scenario> scenario_hint) {
  ParseResult result;
  Reader rd(result.diagnostics);
  if (!rd.object(doc, "",
                 {"scenario", "seed", "budget_atoms", "sets", "family", "samples", "delta", "tolerance", "target_dim",
                  "audit", "identity", "energy", "spherical", "construct", "description"})) {
    return result;
  }
  ExperimentConfig cfg;
  if (doc.contains("scenario")) {
    const auto& v = doc.at("scenario");
    auto parsed = v.is_string() ? scenario_from_string(v.get<std::string>()) : std::nullopt;
    if (!parsed) {
      rd.error("scenario", "unknown scenario (construct, energy, spherical, slice, product_slice, intersection, "
                           "identity_check, assumption_audit)");
    } else {
      cfg.scenario = *parsed;
      if (scenario_hint && *scenario_hint != *parsed) {
        rd.error("scenario", "config is for '" + to_string(*parsed) + "' but the command runs '" +
                                 to_string(*scenario_hint) + "'");
      }
    }
  } else if (scenario_hint) {
    cfg.scenario = *scenario_hint;
  } else {
    rd.error("scenario", "missing");
  }

  if (doc.contains("seed")) {
    const auto& v = doc.at("seed");
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) {
      cfg.seed = v.get<std::uint64_t>();
    } else {
      rd.error("seed", "expected a non-negative integer");
    }
  } else {
    result.diagnostics.push_back({Diagnostic::Level::note, "seed",
                                  "missing; the default seed " + std::to_string(kDefaultSeed) +
                                      " is used (override with --seed or SLICEDIM_SEED)"});
  }
  rd.integer(doc, "", "budget_atoms", cfg.budget_atoms, 1, 1LL << 40);

  if (doc.contains("sets")) {
    const auto& sets = doc.at("sets");
    if (rd.object(sets, "sets", {"A", "B"})) {
      if (sets.contains("A")) cfg.a = parse_set(rd, sets.at("A"), "sets.A");
      if (sets.contains("B")) cfg.b = parse_set(rd, sets.at("B"), "sets.B");
    }
  }
  if (doc.contains("family")) parse_family(rd, doc.at("family"), cfg.family);

  if (doc.contains("samples") && rd.object(doc.at("samples"), "samples", {"parameters", "offsets", "grid_offsets"})) {
    const auto& s = doc.at("samples");
    rd.integer(s, "samples", "parameters", cfg.samples.parameters, 1, 1 << 20);
    rd.integer(s, "samples", "offsets", cfg.samples.offsets, 1, 1 << 20);
    rd.integer(s, "samples", "grid_offsets", cfg.samples.grid_offsets, 0, 1 << 20);
  }
  if (doc.contains("delta") && rd.object(doc.at("delta"), "delta", {"factor", "fit_bottom_factor", "fit_top_fraction"})) {
    const auto& s = doc.at("delta");
    rd.number(s, "delta", "factor", cfg.delta.factor, 1.0, 64.0);
    rd.number(s, "delta", "fit_bottom_factor", cfg.delta.fit_bottom_factor, 1.0, 1024.0);
    rd.number(s, "delta", "fit_top_fraction", cfg.delta.fit_top_fraction, 0.0, 1.0, true);
  }
  if (doc.contains("tolerance") &&
      rd.object(doc.at("tolerance"), "tolerance", {"band", "upper_slack", "max_upper_violation", "min_good_fraction"})) {
    const auto& s = doc.at("tolerance");
    rd.number(s, "tolerance", "band", cfg.tolerance.band, 0.0, 10.0, true);
    rd.number(s, "tolerance", "upper_slack", cfg.tolerance.upper_slack, 0.0, 10.0, true);
    rd.number(s, "tolerance", "max_upper_violation", cfg.tolerance.max_upper_violation, 0.0, 1.0, true);
    rd.number(s, "tolerance", "min_good_fraction", cfg.tolerance.min_good_fraction, 0.0, 1.0);
  }
  rd.number(doc, "", "target_dim", cfg.target_dim, -10.0, 10.0);

  if (doc.contains("audit") &&
      rd.object(doc.at("audit"), "audit",
                {"enabled", "max_atoms", "centers", "frostman_max", "lower_density_min", "l2_samples", "l2_delta",
                 "l2_halvings", "l2_tolerance"})) {
    const auto& s = doc.at("audit");
    rd.boolean(s, "audit", "enabled", cfg.audit.enabled);
    rd.integer(s, "audit", "max_atoms", cfg.audit.max_atoms, 2, 1LL << 32);
    rd.integer(s, "audit", "centers", cfg.audit.centers, 1, 1 << 20);
    rd.number(s, "audit", "frostman_max", cfg.audit.frostman_max, 0.0, 1e12, true);
    rd.number(s, "audit", "lower_density_min", cfg.audit.lower_density_min, 0.0, 1e12);
    rd.integer(s, "audit", "l2_samples", cfg.audit.l2_samples, 1, 1 << 16);
    rd.number(s, "audit", "l2_delta", cfg.audit.l2_delta, 0.0, 1e6, true);
    rd.integer(s, "audit", "l2_halvings", cfg.audit.l2_halvings, 0, 16);
    rd.number(s, "audit", "l2_tolerance", cfg.audit.l2_tolerance, 0.0, 1e6, true);
  }
  if (doc.contains("identity") &&
      rd.object(doc.at("identity"), "identity",
                {"rotations", "cutoff", "spacing", "t_prime", "growth_generation", "growth_cutoffs", "max_error",
                 "max_growth"})) {
    const auto& s = doc.at("identity");
    rd.integer(s, "identity", "rotations", cfg.identity.rotations, 1, 1 << 20);
    rd.number(s, "identity", "cutoff", cfg.identity.cutoff, 0.0, 1e6, true);
    rd.number(s, "identity", "spacing", cfg.identity.spacing, 0.0, 1e6, true);
    rd.number(s, "identity", "t_prime", cfg.identity.t_prime, 0.0, 3.0);
    rd.integer(s, "identity", "growth_generation", cfg.identity.growth_generation, 1, 40);
    rd.numbers(s, "identity", "growth_cutoffs", cfg.identity.growth_cutoffs, 1.0, 1e6, 0);
    if (cfg.identity.growth_cutoffs.size() == 1) rd.error("identity.growth_cutoffs", "needs two or more cutoffs (or none)");
    rd.number(s, "identity", "max_error", cfg.identity.max_error, 0.0, 1e6, true);
    rd.number(s, "identity", "max_growth", cfg.identity.max_growth, 1.0, 1e6);
    if (cfg.identity.spacing >= cfg.identity.cutoff) rd.error("identity.spacing", "must be below the cutoff");
  }
  if (doc.contains("energy") &&
      rd.object(doc.at("energy"), "energy", {"s", "cutoffs", "reference", "max_reference_gap", "max_fourier_gap"})) {
    const auto& s = doc.at("energy");
    rd.numbers(s, "energy", "s", cfg.energy.s, 0.0, 3.0, 1);
    rd.numbers(s, "energy", "cutoffs", cfg.energy.cutoffs, 1e-6, 1e6, 1);
    rd.number(s, "energy", "reference", cfg.energy.reference, 0.0, 1e300);
    rd.number(s, "energy", "max_reference_gap", cfg.energy.max_reference_gap, 0.0, 1e6, true);
    rd.number(s, "energy", "max_fourier_gap", cfg.energy.max_fourier_gap, 0.0, 1e6, true);
  }
  if (doc.contains("spherical") &&
      rd.object(doc.at("spherical"), "spherical", {"r_min", "r_max", "points", "nodes", "t_prime", "slack"})) {
    const auto& s = doc.at("spherical");
    rd.number(s, "spherical", "r_min", cfg.spherical.r_min, 1.0, 1e6, true);
    rd.number(s, "spherical", "r_max", cfg.spherical.r_max, 1.0, 1e6, true);
    rd.integer(s, "spherical", "points", cfg.spherical.points, 4, 1 << 16);
    rd.integer(s, "spherical", "nodes", cfg.spherical.nodes, 0, 1 << 30);
    rd.number(s, "spherical", "t_prime", cfg.spherical.t_prime, 0.0, 3.0);
    rd.number(s, "spherical", "slack", cfg.spherical.slack, 0.0, 10.0);
    if (cfg.spherical.r_max <= cfg.spherical.r_min) rd.error("spherical.r_max", "must exceed r_min");
  }
  if (doc.contains("construct") && rd.object(doc.at("construct"), "construct", {"tolerance", "write_atoms"})) {
    const auto& s = doc.at("construct");
    rd.number(s, "construct", "tolerance", cfg.construct.tolerance, 0.0, 10.0, true);
    rd.boolean(s, "construct", "write_atoms", cfg.construct.write_atoms);
  }

  // Sets each scenario needs.
  const bool needs_b = cfg.scenario == Scenario::product_slice || cfg.scenario == Scenario::intersection ||
                       cfg.scenario == Scenario::identity_check;
  const bool needs_a = cfg.scenario != Scenario::spherical;
  if (needs_a && !cfg.a && !rd.failed()) rd.error("sets.A", "required for scenario " + to_string(cfg.scenario));
  if (cfg.scenario == Scenario::spherical && !cfg.a && !cfg.b && !rd.failed()) {
    rd.error("sets.B", "required for scenario spherical");
  }
  if (needs_b && !cfg.b && !rd.failed()) rd.error("sets.B", "required for scenario " + to_string(cfg.scenario));
  if (!rd.failed() && cfg.a && cfg.b) {
    if ((cfg.scenario == Scenario::intersection || cfg.scenario == Scenario::identity_check) &&
        cfg.a->ambient_dim != cfg.b->ambient_dim) {
      rd.error("sets.B.ambient_dim", "A and B must live in the same space");
    }
  }
  if (!rd.failed() && cfg.scenario == Scenario::slice && cfg.family.target_dim >= cfg.a->ambient_dim &&
      cfg.family.kind == FamilyKind::grassmannian) {
    rd.error("family.target_dim", "must be below the ambient dimension of A");
  }
  if (!rd.failed() && (cfg.scenario == Scenario::identity_check || cfg.scenario == Scenario::spherical)) {
    const auto& nu = cfg.scenario == Scenario::spherical ? (cfg.b ? *cfg.b : *cfg.a) : *cfg.b;
    if (nu.ambient_dim < 2) rd.error("sets.B.ambient_dim", "spherical averages need dimension 2 or 3");
  }
  if (!rd.failed()) result.config = cfg;
  return result;
}

std::vector<Diagnostic> hypothesis_warnings(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> out;
  auto warn = [&](std::string path, std::string msg) {
    out.push_back({Diagnostic::Level::warning, std::move(path), std::move(msg)});
  };
  std::ostringstream msg;
  msg << std::setprecision(6);
  switch (cfg.scenario) {
    case Scenario::slice: {
      const double s = cfg.a->dimension();
      const int m = cfg.family.target_dim;
      if (!(s > m)) {
        msg << "slice hypothesis s > m fails (s = " << s << ", m = " << m
            << "); the run is a negative control";
        warn("sets.A.dim", msg.str());
      }
      break;
    }
    case Scenario::product_slice: {
      const double s = cfg.a->dimension(), t = cfg.b->dimension();
      const int m = cfg.family.kind == FamilyKind::grassmannian || cfg.family.kind == FamilyKind::fixed
                        ? cfg.family.target_dim
                        : cfg.a->ambient_dim;
      if (!(s + t > m)) {
        msg << "product slice hypothesis s + t > m fails (s + t = " << s + t << ", m = " << m
            << "); the run is a negative control";
        warn("sets", msg.str());
      }
      break;
    }
    case Scenario::intersection: {
      const double s = cfg.a->dimension(), t = cfg.b->dimension();
      const int n = cfg.a->ambient_dim;
      const double lhs = s + (n - 1) * t / n;
      if (!(lhs > n)) {
        msg << "intersection hypothesis s + (n-1)t/n > n fails (s + (n-1)t/n = " << lhs << ", n = " << n
            << "); the run is a negative control";
        warn("sets", msg.str());
      }
      break;
    }
    case Scenario::identity_check: {
      if (cfg.identity.growth_cutoffs.empty()) break;
      const int n = cfg.a->ambient_dim;
      const double s = cfg.a->dimension();
      const double tp = cfg.identity.t_prime.value_or(std::max(0.0, cfg.b->dimension() - 0.1));
      const double exponent = n - (n - 1) * tp / n;
      if (!(exponent < s)) {
        msg << "finiteness condition n - (n-1)t'/n < s fails (" << exponent << " >= " << s
            << "); the truncated integral is expected to diverge";
        warn("identity.t_prime", msg.str());
      }
      break;
    }
    default:
      break;
  }
  return out;
}

std::uint64_t config_hash(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// Serialization --------------------------------------------------------------

json to_json(const IfsSpec& ifs) {
  return json{{"ambient_dim", ifs.ambient_dim},
              {"ratio", ifs.ratio},
              {"offsets", ifs.offsets},
              {"branch_count", ifs.branch_count()},
              {"similarity_dim", ifs.similarity_dim}};
}

IfsSpec ifs_from_json(const json& doc) {
  try {
    IfsSpec ifs = make_ifs(doc.at("ratio").get<double>(), doc.at("offsets").get<std::vector<std::vector<double>>>());
    if (doc.contains("ambient_dim") && doc.at("ambient_dim").get<int>() != ifs.ambient_dim) {
      throw ConfigError("IFS document: ambient_dim does not match the offsets");
    }
    return ifs;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("IFS document: ") + e.what());
  }
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  try {
    auto data = rows.get<std::vector<std::vector<double>>>();
    if (data.empty() || data[0].empty()) throw ConfigError("matrix document is empty");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data[0].size()));
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].size() != data[0].size()) throw ConfigError("matrix rows have different lengths");
      for (std::size_t j = 0; j < data[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
    }
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("matrix document: ") + e.what());
  }
}

}  // namespace

json to_json(const Projection& p) {
  return json{{"source_dim", p.source_dim()}, {"target_dim", p.target_dim()}, {"rows", matrix_json(p.rows())}};
}

Projection projection_from_json(const json& doc) { return Projection(matrix_from_json(doc.at("rows"))); }

json to_json(const Rotation& g) {
  return json{{"dim", g.dim()}, {"determinant", g.determinant()}, {"rows", matrix_json(g.matrix())}};
}

Rotation rotation_from_json(const json& doc) { return Rotation(matrix_from_json(doc.at("rows"))); }

}  // namespace slicedim
