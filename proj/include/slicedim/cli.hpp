#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace slicedim {

/// Record of one run, written next to the report as manifest.json.
struct RunManifest {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> files;

  nlohmann::json to_json() const;
};

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir = "runs";
  std::optional<std::size_t> budget_atoms;
  bool expect_fail = false;
  bool quiet = false;
};

enum ExitCode : int { kExitPass = 0, kExitError = 1, kExitVerdictFail = 2 };

/// Command names as typed on the command line.
const std::vector<std::string>& command_names();

/// Run one subcommand (or "validate"). Messages go to `err`, a short result
/// line to `out`. The run directory is out_dir/<config hash prefix>.
int run_command(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& err);

/// Entry point of the slicedim executable.
int cli_main(int argc, char** argv);

}  // namespace slicedim
