#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "slicedim/cli.hpp"

using namespace slicedim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("slicedim_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const fs::path& dir, const std::string& name, const json& doc) {
  const auto p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

int run(const std::string& cmd, RunOptions opt, std::string* out_text = nullptr, std::string* err_text = nullptr) {
  opt.quiet = true;
  std::ostringstream out, err;
  const int code = run_command(cmd, opt, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

const json kConstruct = json::parse(R"({"scenario": "construct", "seed": 3,
    "sets": {"A": {"kind": "cantor", "ambient_dim": 1, "dim": 0.6309297535714574, "generation": 6}}})");

}  // namespace

TEST(Cli, ConstructWritesExactlyTheManifestFiles) {
  TempDir tmp;
  RunOptions opt;
  opt.config_path = write_config(tmp.path, "c.json", kConstruct).string();
  opt.out_dir = (tmp.path / "runs").string();
  std::string out;
  ASSERT_EQ(run("construct", opt, &out), kExitPass);
  ASSERT_EQ(std::distance(fs::directory_iterator(opt.out_dir), fs::directory_iterator{}), 1);
  const fs::path dir = fs::directory_iterator(opt.out_dir)->path();
  const auto manifest = json::parse(std::ifstream(dir / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) listed.insert(f.get<std::string>());
  std::set<std::string> present;
  for (const auto& e : fs::directory_iterator(dir)) present.insert(e.path().filename().string());
  EXPECT_EQ(listed, present);
  for (const char* f : {"report.json", "samples.csv", "scaling.csv", "manifest.json", "ifs.json", "measure.csv",
                        "cover.csv"}) {
    EXPECT_TRUE(present.count(f)) << f;
  }
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(dir.filename().string(), manifest["config_hash"].get<std::string>().substr(0, 12));
  const auto report = json::parse(std::ifstream(dir / "report.json"));
  EXPECT_FALSE(report.contains("started_at"));
  EXPECT_TRUE(report["passed"].get<bool>());
}

TEST(Cli, SeedOverrideChangesRunDirectory) {
  TempDir tmp;
  RunOptions opt;
  opt.config_path = write_config(tmp.path, "c.json", kConstruct).string();
  opt.out_dir = (tmp.path / "runs").string();
  ASSERT_EQ(run("construct", opt), kExitPass);
  opt.seed = 99;
  ASSERT_EQ(run("construct", opt), kExitPass);
  EXPECT_EQ(std::distance(fs::directory_iterator(opt.out_dir), fs::directory_iterator{}), 2);
}

TEST(Cli, InvalidConfigExitsOneWithFieldPath) {
  TempDir tmp;
  json bad = kConstruct;
  bad["sets"]["A"]["generation"] = "six";
  RunOptions opt;
  opt.config_path = write_config(tmp.path, "bad.json", bad).string();
  opt.out_dir = (tmp.path / "runs").string();
  std::string err;
  EXPECT_EQ(run("construct", opt, nullptr, &err), kExitError);
  EXPECT_NE(err.find("sets.A.generation"), std::string::npos);
  EXPECT_FALSE(fs::exists(opt.out_dir));
  opt.config_path = (tmp.path / "missing.json").string();
  EXPECT_EQ(run("construct", opt), kExitError);
}

TEST(Cli, BudgetExceededNamesTheBudget) {
  TempDir tmp;
  RunOptions opt;
  opt.config_path = write_config(tmp.path, "c.json", kConstruct).string();
  opt.out_dir = (tmp.path / "runs").string();
  opt.budget_atoms = 10;
  std::string err;
  EXPECT_EQ(run("construct", opt, nullptr, &err), kExitError);
  EXPECT_NE(err.find("budget"), std::string::npos);
}

TEST(Cli, ValidateReportsHypothesisAndSeedPolicy) {
  TempDir tmp;
  RunOptions opt;
  opt.config_path = write_config(tmp.path, "c.json", kConstruct).string();
  std::string out;
  EXPECT_EQ(run("validate", opt, &out), kExitPass);
  EXPECT_TRUE(out.empty());

  json doc = kConstruct;
  doc.erase("seed");
  opt.config_path = write_config(tmp.path, "noseed.json", doc).string();
  EXPECT_EQ(run("validate", opt, &out), kExitPass);
  EXPECT_NE(out.find("default seed"), std::string::npos);

  const json control = json::parse(R"({"scenario": "intersection", "seed": 1, "sets": {
      "A": {"kind": "cantor", "ambient_dim": 2, "dim": 0.9, "generation": 4},
      "B": {"kind": "cantor", "ambient_dim": 2, "dim": 0.9, "generation": 4}}})");
  opt.config_path = write_config(tmp.path, "control.json", control).string();
  EXPECT_EQ(run("validate", opt, &out), kExitPass);
  EXPECT_NE(out.find("s + (n-1)t/n > n"), std::string::npos);
}

TEST(Cli, ExpectFailInvertsVerdictExit) {
  TempDir tmp;
  const json control = json::parse(R"({"scenario": "intersection", "seed": 1, "target_dim": 0.7,
      "sets": {"A": {"kind": "cantor", "ambient_dim": 2, "dim": 0.9, "generation": 4},
               "B": {"kind": "cantor", "ambient_dim": 2, "dim": 0.9, "generation": 4}},
      "samples": {"parameters": 8, "offsets": 8, "grid_offsets": 4},
      "audit": {"enabled": false}})");
  RunOptions opt;
  opt.config_path = write_config(tmp.path, "control.json", control).string();
  opt.out_dir = (tmp.path / "runs").string();
  EXPECT_EQ(run("intersect", opt), kExitVerdictFail);
  opt.expect_fail = true;
  EXPECT_EQ(run("intersect", opt), kExitPass);
}

TEST(Cli, UnknownCommand) {
  RunOptions opt;
  EXPECT_EQ(run("nope", opt), kExitError);
  EXPECT_EQ(command_names().size(), 9u);
}
