// Acceptance suite: one PASS/FAIL line per criterion. Arguments select a
// subset of criteria by number; no arguments runs all ten.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "slicedim/boxdim.hpp"
#include "slicedim/cli.hpp"
#include "slicedim/config.hpp"
#include "slicedim/experiments.hpp"
#include "slicedim/geometry.hpp"
#include "slicedim/harmonic.hpp"
#include "slicedim/measure.hpp"
#include "slicedim/parallel.hpp"
#include "slicedim/rng.hpp"

#ifndef SLICEDIM_CONFIG_DIR
#define SLICEDIM_CONFIG_DIR "configs"
#endif

using namespace slicedim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAIL]");
  }
};

std::string num(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

json load(const std::string& name) {
  std::ifstream f(fs::path(SLICEDIM_CONFIG_DIR) / name);
  if (!f) throw std::runtime_error("missing config " + name);
  return json::parse(f);
}

ExperimentConfig config(const json& doc) {
  auto parsed = parse_config(doc);
  if (!parsed.ok()) {
    std::string msg = "config rejected:";
    for (const auto& d : parsed.diagnostics) msg += " " + to_string(d);
    throw std::runtime_error(msg);
  }
  return *parsed.config;
}

const Verdict* find_verdict(const ExperimentReport& r, const std::string& name) {
  for (const auto& v : r.verdicts) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

double verdict_value(const ExperimentReport& r, const std::string& name) {
  const auto* v = find_verdict(r, name);
  return v ? v->value : std::nan("");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 -------------------------------------------------------------------------

Outcome energy_identity() {
  Outcome o;
  auto t0 = std::chrono::steady_clock::now();
  const auto leb = energy_experiment(config(load("energy_lebesgue.json")));
  const double t_leb = seconds_since(t0);
  const auto& e = leb.summary["energies"][0];
  const double spatial = e["spatial"].get<double>();
  const auto& cutoffs = e["cutoffs"];
  const double fourier = e["fourier"].back().get<double>();
  o.check(std::abs(spatial / (8.0 / 3.0) - 1.0) < 0.02, "Lebesgue spatial " + num(spatial, 6) + " vs 8/3");
  o.check(cutoffs.back().get<double>() == 128.0 && std::abs(fourier / spatial - 1.0) < 0.05,
          "Fourier gap at R=128 " + num(std::abs(fourier / spatial - 1.0), 3));
  o.check(t_leb < 60.0, "runtime " + num(t_leb, 3) + " s");

  t0 = std::chrono::steady_clock::now();
  const auto cfg = config(load("energy_middle_thirds.json"));
  const auto cantor = energy_experiment(cfg);
  const double t_cantor = seconds_since(t0);
  const auto& c = cantor.summary["energies"][0];
  const double gap = c["relative_gaps"].back().get<double>();
  o.check(cfg.a->generation == 6 && gap < 0.10, "middle-thirds gen 6 spatial/Fourier gap " + num(gap, 3));
  o.check(t_cantor < 60.0, "runtime " + num(t_cantor, 3) + " s");
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome box_dimensions() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (int gen : {6, 8}) {
    json doc = load("construct_middle_thirds.json");
    doc["sets"]["A"]["generation"] = gen;
    doc["construct"] = {{"write_atoms", false}};
    const auto r = construct_experiment(config(doc));
    const double exact = verdict_value(r, "exact_count_dim_error");
    const double cloud = verdict_value(r, "point_cloud_dim_error");
    o.check(exact <= 1e-10 && cloud <= 0.03,
            "middle-thirds gen " + std::to_string(gen) + " exact err " + num(exact, 2) + ", cloud err " + num(cloud, 3));
  }
  for (int gen : {6, 7}) {
    json doc = load("construct_four_corner.json");
    doc["sets"]["A"]["generation"] = gen;
    doc["construct"] = {{"write_atoms", false}};
    const auto r = construct_experiment(config(doc));
    const double slope = r.summary["point_cloud_fit"]["slope"].get<double>();
    o.check(std::abs(slope - 1.5) <= 0.03, "four-corner gen " + std::to_string(gen) + " dim " + num(slope, 5));
  }
  const double t = seconds_since(t0);
  o.check(t < 30.0, "runtime " + num(t, 3) + " s");
  return o;
}

// 3, 4, 5 -------------------------------------------------------------------

void check_band_report(Outcome& o, const ExperimentReport& r, const std::string& label, double predicted, double band,
                       const std::string& good_name, double good_min) {
  const double median = r.summary["pushforward"]["median_dim"].get<double>();
  o.check(std::abs(median - predicted) <= band, label + " median " + num(median) + " in " + num(predicted) + " +- " + num(band));
  const double good = verdict_value(r, good_name);
  o.check(good > good_min, label + " grid good fraction " + num(good, 3));
  const double viol = verdict_value(r, "upper_violation_rate");
  o.check(viol < 0.10, label + " upper violation rate " + num(viol, 3));
}

Outcome slice_band() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = config(load("slice_product_cantor.json"));
  o.check(cfg.samples.parameters >= 100 && cfg.samples.offsets >= 50 && cfg.a->generation >= 8,
          std::to_string(cfg.samples.parameters) + " directions x " + std::to_string(cfg.samples.offsets) +
              " offsets, generation " + std::to_string(cfg.a->generation));
  const auto r = slice_experiment(cfg);
  check_band_report(o, r, "slice", 0.4, 0.12, "good_u_fraction", 0.05);
  const double t = seconds_since(t0);
  o.check(t < 600.0, "runtime " + num(t, 3) + " s");
  return o;
}

Outcome product_slice_band() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  for (const char* name : {"product_slice_difference.json", "product_slice_scaled.json"}) {
    const auto cfg = config(load(name));
    const auto r = product_slice_experiment(cfg);
    const double median = r.summary["pushforward"]["median_dim"].get<double>();
    o.check(std::abs(median - 0.7) <= 0.12, std::string(name) + " median " + num(median));
  }
  const double t = seconds_since(t0);
  o.check(t < 1200.0, "runtime " + num(t, 3) + " s (two runs)");
  return o;
}

Outcome intersection_band() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = config(load("intersect_four_corner.json"));
  o.check(cfg.samples.parameters >= 50 && cfg.samples.offsets >= 50,
          std::to_string(cfg.samples.parameters) + " rotations x " + std::to_string(cfg.samples.offsets) + " offsets");
  const auto r = intersection_experiment(cfg);
  check_band_report(o, r, "s=1.5,t=1.2", 0.7, 0.15, "good_z_fraction", 0.02);
  const auto control = intersection_experiment(config(load("intersect_negative_control.json")));
  const double cm = control.summary["pushforward"]["median_dim"].get<double>();
  o.check(cm <= 0.15, "control s=t=0.9 median " + num(cm));
  const double t = seconds_since(t0);
  o.check(t < 1200.0, "runtime " + num(t, 3) + " s");
  return o;
}

// 6, 7 ----------------------------------------------------------------------

Outcome rotation_identity() {
  Outcome o;
  json doc = load("identity_four_corner.json");
  doc["identity"]["growth_cutoffs"] = json::array();
  doc["audit"] = {{"enabled", false}};
  auto cfg = config(doc);
  o.check(cfg.identity.rotations == 200 && cfg.identity.cutoff == 64.0, "200 rotations, cutoff 64");
  const auto r = identity_check_experiment(cfg);
  const double err = r.summary["identity"]["relative_error"].get<double>();
  o.check(err < 0.05, "s=1.5/t=1.2 relative error " + num(err, 3));
  const auto pm = identity_check_experiment(config(load("identity_point_mass.json")));
  const double pm_err = pm.summary["identity"]["relative_error"].get<double>();
  o.check(pm_err < 0.01, "point-mass relative error " + num(pm_err, 3));
  return o;
}

Outcome spherical_decay() {
  Outcome o;
  const auto cfg = config(load("spherical_four_corner.json"));
  const auto r = spherical_experiment(cfg);
  const double slope = r.summary["decay_slope"].get<double>();
  const double bound = -(1.0 * 1.1) / 2.0 + 0.15;
  o.check(cfg.spherical.r_min == 4.0 && cfg.spherical.r_max == 256.0, "r in [4, 256]");
  o.check(slope <= bound, "decay slope " + num(slope) + " <= " + num(bound));
  return o;
}

// 8 -------------------------------------------------------------------------

/// Rescaling preserves a Frostman constant of 1 at atom centres; mollifying
/// keeps it for balls of radius at least delta once the measure has constant 1
/// about every centre.
Outcome rescale_mollify_suite() {
  Outcome o;
  const double s = 1.5;
  const auto ifs = build_cantor_ifs(2, s, BranchLayout::corner);
  const auto base = natural_measure(ifs, 7);
  std::vector<std::size_t> all(base.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const double c_atoms = frostman_sup(base, s, base.cell_size(), 2.0, all);
  const auto mu = base.scaled(1.0 / c_atoms);
  // Balls centred anywhere sit inside atom-centred balls of twice the radius.
  const auto mu_any = base.scaled(1.0 / (std::pow(2.0, s) * c_atoms));

  const std::uint64_t seed = 20240901;
  double worst_rescaled = 0.0, worst_mollified = 0.0;
  int failures = 0, tested = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(seed, Stream::triples, i);
    const auto idx = static_cast<std::size_t>(rng.below(mu.size()));
    std::vector<double> a(mu.atom(idx).begin(), mu.atom(idx).end());
    for (auto& v : a) v += mu.cell_size() * rng.uniform(-0.5, 0.5);
    const double r = 0.05 * std::pow(10.0, rng.uniform());
    const double delta = r * rng.uniform(1.0 / 16.0, 1.0 / 4.0);

    const auto nu = rescale(mu, a, r, s);
    std::vector<double> radii;
    for (double rho = 2.0; rho >= nu.cell_size(); rho *= 0.5) radii.push_back(rho);
    const double fr = frostman_constant(nu, s, nu.size(), radii);
    worst_rescaled = std::max(worst_rescaled, fr);

    const auto nu_any = rescale(mu_any, a, r, s);
    const double d = delta / r;
    const Box region{{-1.0 - d, -1.0 - d}, {1.0 + d, 1.0 + d}};
    const auto m = mollify(nu_any, d, d / 8.0, region);
    std::vector<double> mradii;
    for (double rho = 2.0; rho >= d; rho *= 0.5) mradii.push_back(rho);
    const double fm = frostman_constant(m, s, 256, mradii);
    worst_mollified = std::max(worst_mollified, fm);
    ++tested;
    if (fr > 1.05 || fm > 1.05) ++failures;
  }
  o.check(tested == 100 && failures == 0, std::to_string(tested) + " triples, worst rescaled ratio " +
                                              num(worst_rescaled, 3) + ", worst mollified ratio " +
                                              num(worst_mollified, 3) + " (bound 1.05)");
  return o;
}

// 9 -------------------------------------------------------------------------

Outcome tube_oracle() {
  Outcome o;
  {
    const auto leb = uniform_measure(2, 2000);
    const std::vector<double> x{0.5, 0.5};
    double worst = 0.0;
    for (auto [r, delta, angle] : {std::tuple{0.25, 0.01, 0.3}, std::tuple{0.2, 0.005, 1.1}, std::tuple{0.3, 0.02, 2.5}}) {
      const double mass = tube_mass(leb, line_projection(angle), x, r, delta);
      worst = std::max(worst, std::abs(mass / (4.0 * r * delta) - 1.0));
    }
    o.check(worst < 0.02, "Lebesgue slab mass vs 4 r delta, worst gap " + num(worst, 3));
  }
  const double s = 1.5;
  const int m = 1;
  const auto ifs = build_cantor_ifs(2, s, BranchLayout::corner);
  const auto mu = natural_measure(ifs, 10);
  const auto p = line_projection(1.0);
  std::vector<double> radii;
  for (int j = 1; j <= 6; ++j) radii.push_back(std::pow(ifs.ratio, j));
  const auto bases = spread_indices(mu.size(), 5);
  for (double t : {s - m - 0.25, s - m + 0.25}) {
    int good = 0;
    std::string slopes;
    for (auto b : bases) {
      std::vector<double> lx, ly;
      for (double r : radii) {
        lx.push_back(std::log(r));
        ly.push_back(std::log(tube_ratio(mu, p, mu.atom(b), r, r / 4.0, t)));
      }
      const auto fit = fit_line(lx, ly, {radii.back(), radii.front()});
      // Ratio decreasing as r shrinks means a positive slope against log r.
      const bool expected = t < s - m ? fit.slope > 0.0 : fit.slope < 0.0;
      good += expected;
      slopes += (slopes.empty() ? "" : ",") + num(fit.slope, 2);
    }
    o.check(good >= 4, "t=" + num(t, 3) + ": " + std::to_string(good) + "/5 basepoints trend as predicted (slopes " +
                           slopes + ")");
  }
  return o;
}

// 10 ------------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "slicedim_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::pair<std::string, json>> runs = {
      {"slice", json::parse(R"({"scenario": "slice", "seed": 7,
          "sets": {"A": {"kind": "cantor", "ambient_dim": 2, "dim": 1.4, "generation": 8}},
          "samples": {"parameters": 16, "offsets": 10, "grid_offsets": 9},
          "audit": {"max_atoms": 4096, "l2_samples": 4}})")},
      {"intersect", json::parse(R"({"scenario": "intersection", "seed": 7,
          "sets": {"A": {"kind": "cantor", "ambient_dim": 2, "dim": 1.5, "generation": 6},
                   "B": {"kind": "cantor", "ambient_dim": 2, "dim": 1.2, "generation": 5}},
          "samples": {"parameters": 12, "offsets": 10, "grid_offsets": 9},
          "audit": {"max_atoms": 4096, "l2_samples": 4}})")},
      {"identity-check", json::parse(R"({"scenario": "identity_check", "seed": 7,
          "sets": {"A": {"kind": "cantor", "ambient_dim": 2, "dim": 1.5, "generation": 4},
                   "B": {"kind": "cantor", "ambient_dim": 2, "dim": 1.2, "generation": 4}},
          "identity": {"rotations": 16, "cutoff": 16, "growth_cutoffs": [16, 32], "growth_generation": 5},
          "audit": {"enabled": false}})")},
  };
  for (const auto& [command, doc] : runs) {
    const fs::path cfg_path = root / (command + ".json");
    std::ofstream(cfg_path) << doc.dump(2);
    std::string reports[2];
    for (int k = 0; k < 2; ++k) {
      RunOptions opt;
      opt.config_path = cfg_path.string();
      opt.out_dir = (root / ("workers" + std::to_string(k))).string();
      opt.workers = k == 0 ? 1 : 8;
      opt.quiet = true;
      std::ostringstream out, err;
      run_command(command, opt, out, err);
      const fs::path dir = fs::path(opt.out_dir) / hash_hex(config_hash(doc)).substr(0, 12);
      std::ifstream f(dir / "report.json", std::ios::binary);
      std::stringstream buf;
      buf << f.rdbuf();
      reports[k] = buf.str();
    }
    o.check(!reports[0].empty() && reports[0] == reports[1],
            command + " report.json identical for 1 and 8 workers (" + std::to_string(reports[0].size()) + " bytes)");
  }
  set_default_workers(1);
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "Parseval energy identity", energy_identity},
      {2, "exact self-similar box dimensions", box_dimensions},
      {3, "slice dimension band", slice_band},
      {4, "product-slice dimension band", product_slice_band},
      {5, "intersection dimension band and negative control", intersection_band},
      {6, "rotation-average identity", rotation_identity},
      {7, "spherical decay inequality", spherical_decay},
      {8, "Frostman bounds under rescaling and mollification", rescale_mollify_suite},
      {9, "tube-mass oracle and trends", tube_oracle},
      {10, "determinism across worker counts", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double t = seconds_since(t0);
    if (!o.passed) ++failed;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", c.id, o.passed ? "PASS" : "FAIL", c.title, o.detail.c_str(), t);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
