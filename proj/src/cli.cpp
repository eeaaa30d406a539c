#include "slicedim/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "slicedim/config.hpp"
#include "slicedim/error.hpp"
#include "slicedim/experiments.hpp"
#include "slicedim/parallel.hpp"

#ifndef SLICEDIM_VERSION
#define SLICEDIM_VERSION "0.0.0"
#endif

namespace slicedim {

using nlohmann::json;
namespace fs = std::filesystem;

json RunManifest::to_json() const {
  return {{"config_hash", config_hash}, {"seed", seed},   {"version", version}, {"started_at", started_at},
          {"finished_at", finished_at}, {"files", files}};
}

namespace {

struct Command {
  std::string name;
  std::optional<Scenario> scenario;
  std::string help;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"construct", Scenario::construct, "Emit IFS, measure and cover files and check box dimensions"},
      {"energy", Scenario::energy, "Spatial and Fourier s-energy sweep"},
      {"spherical", Scenario::spherical, "Spherical averages of |nu^|^2 and the decay fit"},
      {"slice", Scenario::slice, "Dimensions of slices of A by fibres of projections"},
      {"product-slice", Scenario::product_slice, "Slices of A x B by fibres of a projection family"},
      {"intersect", Scenario::intersection, "Dimensions of A cap (gB + z) over rotations g and offsets z"},
      {"identity-check", Scenario::identity_check, "Rotation-average identity for the energy of A cap (gB + z)"},
      {"audit", Scenario::assumption_audit, "Frostman, lower-density and L2 density audit"},
      {"validate", std::nullopt, "Check a config without running it"},
  };
  return list;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("failed writing " + path.string());
}

std::string table_csv(const Table& t) {
  std::ostringstream s;
  t.write_csv(s);
  return s.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& c : commands()) out.push_back(c.name);
    return out;
  }();
  return names;
}

int run_command(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& err) {
  const Command* cmd = nullptr;
  for (const auto& c : commands()) {
    if (c.name == command) cmd = &c;
  }
  if (!cmd) {
    err << "error: unknown command '" << command << "'\n";
    return kExitError;
  }
  try {
    json doc;
    {
      std::ifstream f(options.config_path);
      if (!f) {
        err << "error: config: cannot open '" << options.config_path << "'\n";
        return kExitError;
      }
      try {
        doc = json::parse(f);
      } catch (const json::parse_error& e) {
        err << "error: config: not valid JSON: " << e.what() << "\n";
        return kExitError;
      }
    }
    if (doc.is_object()) {
      if (options.seed) doc["seed"] = *options.seed;
      if (options.budget_atoms) doc["budget_atoms"] = *options.budget_atoms;
    }
    auto parsed = parse_config(doc, cmd->scenario);

    if (!cmd->scenario) {
      auto diagnostics = parsed.diagnostics;
      if (parsed.ok()) {
        for (auto& d : hypothesis_warnings(*parsed.config)) diagnostics.push_back(std::move(d));
      }
      for (const auto& d : diagnostics) out << to_string(d) << "\n";
      return parsed.ok() ? kExitPass : kExitError;
    }

    for (const auto& d : parsed.diagnostics) {
      if (d.level != Diagnostic::Level::note || !options.quiet) err << to_string(d) << "\n";
    }
    if (!parsed.ok()) return kExitError;
    const ExperimentConfig& cfg = *parsed.config;
    if (options.workers) set_default_workers(*options.workers);

    RunManifest manifest;
    manifest.config_hash = hash_hex(config_hash(doc));
    manifest.seed = cfg.effective_seed();
    manifest.version = SLICEDIM_VERSION;
    manifest.started_at = utc_now();

    ProgressFn progress;
    if (!options.quiet) progress = [&err](const std::string& msg) { err << "[slicedim] " << msg << std::endl; };
    const ExperimentReport report = run_experiment(cfg, progress);

    json rj = report.to_json();
    rj["config_hash"] = manifest.config_hash;
    rj["seed"] = manifest.seed;
    rj["version"] = manifest.version;

    const fs::path dir = fs::path(options.out_dir) / manifest.config_hash.substr(0, 12);
    fs::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> files = {
        {"report.json", rj.dump(2) + "\n"},
        {"samples.csv", table_csv(report.samples)},
        {"scaling.csv", table_csv(report.scaling)},
    };
    for (const auto& a : report.artifacts) files.emplace_back(a.name, a.content);
    for (const auto& [name, content] : files) {
      write_file(dir / name, content);
      manifest.files.push_back(name);
    }
    manifest.files.push_back("manifest.json");
    manifest.finished_at = utc_now();
    write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");

    const bool passed = report.passed();
    for (const auto& v : report.verdicts) {
      err << (v.passed ? "  pass  " : "  FAIL  ") << v.name << " = " << format_number(v.value);
      if (v.lo) err << "  lo " << format_number(*v.lo);
      if (v.hi) err << "  hi " << format_number(*v.hi);
      if (!v.note.empty()) err << "  (" << v.note << ")";
      err << "\n";
    }
    out << (passed ? "PASS" : "FAIL") << (options.expect_fail ? " (failure expected)" : "") << " " << dir.string()
        << "\n";
    if (options.expect_fail) return passed ? kExitVerdictFail : kExitPass;
    return passed ? kExitPass : kExitVerdictFail;
  } catch (const BudgetError& e) {
    err << "error: budget exceeded: " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Numerical checks of slice and intersection dimension formulas for fractal measures", "slicedim"};
  app.set_version_flag("--version", SLICEDIM_VERSION);
  app.require_subcommand(1);

  RunOptions options;
  std::string selected;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::size_t> budget;
  for (const auto& c : commands()) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("-c,--config", options.config_path, "Config JSON file")->required()->envname("SLICEDIM_CONFIG");
    sub->add_flag("-q,--quiet", options.quiet, "Suppress progress messages");
    if (c.scenario) {
      sub->add_option("--seed", seed, "Master seed")->envname("SLICEDIM_SEED");
      sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber)->envname("SLICEDIM_WORKERS");
      sub->add_option("--out-dir", options.out_dir, "Parent directory for run outputs")->envname("SLICEDIM_OUT_DIR");
      sub->add_option("--budget-atoms", budget, "Maximum atoms or cubes in any measure")
          ->check(CLI::PositiveNumber)
          ->envname("SLICEDIM_BUDGET_ATOMS");
      sub->add_flag("--expect-fail", options.expect_fail, "Exit 0 when the verdicts fail (negative controls)")
          ->envname("SLICEDIM_EXPECT_FAIL");
    }
    sub->callback([&selected, name = c.name] { selected = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitError;
  }
  options.seed = seed;
  options.workers = workers;
  options.budget_atoms = budget;
  return run_command(selected, options, std::cout, std::cerr);
}

}  // namespace slicedim
