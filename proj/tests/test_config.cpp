#include <gtest/gtest.h>

#include <cmath>

#include "slicedim/config.hpp"
#include "slicedim/experiments.hpp"

using namespace slicedim;
using nlohmann::json;

namespace {
bool has(const std::vector<Diagnostic>& ds, Diagnostic::Level level, const std::string& path) {
  for (const auto& d : ds) {
    if (d.level == level && d.path == path) return true;
  }
  return false;
}

const json kSlice = json::parse(R"({
  "scenario": "slice", "seed": 5,
  "sets": {"A": {"kind": "cantor", "ambient_dim": 2, "dim": 1.4, "generation": 6}},
  "samples": {"parameters": 6, "offsets": 5, "grid_offsets": 4}
})");
}  // namespace

TEST(Config, WellFormedHasNoDiagnostics) {
  const auto r = parse_config(kSlice);
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(r.config->a->generation, 6);
  EXPECT_NEAR(r.config->a->dimension(), 1.4, 1e-12);
}

TEST(Config, MissingSeedNamesDefaultPolicy) {
  json doc = kSlice;
  doc.erase("seed");
  const auto r = parse_config(doc);
  ASSERT_TRUE(r.ok());
  ASSERT_TRUE(has(r.diagnostics, Diagnostic::Level::note, "seed"));
  EXPECT_NE(to_string(r.diagnostics[0]).find(std::to_string(kDefaultSeed)), std::string::npos);
  EXPECT_EQ(r.config->effective_seed(), kDefaultSeed);
}

TEST(Config, FieldLevelErrors) {
  json doc = kSlice;
  doc["sets"]["A"]["dim"] = "big";
  doc["samples"]["offsets"] = -3;
  doc["bogus"] = 1;
  const auto r = parse_config(doc);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has(r.diagnostics, Diagnostic::Level::error, "sets.A.dim"));
  EXPECT_TRUE(has(r.diagnostics, Diagnostic::Level::error, "samples.offsets"));
  EXPECT_TRUE(has(r.diagnostics, Diagnostic::Level::warning, "bogus"));
}

TEST(Config, ScenarioMismatchAndMissingSets) {
  EXPECT_FALSE(parse_config(kSlice, Scenario::intersection).ok());
  const auto r = parse_config(json{{"scenario", "intersection"}, {"seed", 1}, {"sets", {{"A", kSlice["sets"]["A"]}}}});
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has(r.diagnostics, Diagnostic::Level::error, "sets.B"));
}

TEST(Config, HypothesisWarnings) {
  json doc = json::parse(R"({"scenario": "intersection", "seed": 1, "sets": {
      "A": {"kind": "cantor", "ambient_dim": 2, "dim": 0.9, "generation": 4},
      "B": {"kind": "cantor", "ambient_dim": 2, "dim": 0.9, "generation": 4}}})");
  auto r = parse_config(doc);
  ASSERT_TRUE(r.ok());
  const auto w = hypothesis_warnings(*r.config);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].message.find("s + (n-1)t/n > n"), std::string::npos);
  doc["sets"]["A"]["dim"] = 1.5;
  doc["sets"]["B"]["dim"] = 1.2;
  EXPECT_TRUE(hypothesis_warnings(*parse_config(doc).config).empty());

  json slice = kSlice;
  slice["sets"]["A"]["dim"] = 0.9;
  EXPECT_EQ(hypothesis_warnings(*parse_config(slice).config).size(), 1u);
}

TEST(Config, HashIgnoresKeyOrder) {
  const json a = json::parse(R"({"seed": 1, "scenario": "slice", "samples": {"offsets": 3, "parameters": 4}})");
  const json b = json::parse(R"({"samples": {"parameters": 4, "offsets": 3}, "scenario": "slice", "seed": 1})");
  EXPECT_EQ(config_hash(a), config_hash(b));
  json c = a;
  c["seed"] = 2;
  EXPECT_NE(config_hash(a), config_hash(c));
  EXPECT_EQ(hash_hex(config_hash(a)).size(), 16u);
}

TEST(Config, IfsAndProjectionRoundTrip) {
  const auto ifs = build_cantor_ifs(2, 1.5, BranchLayout::corner);
  const auto back = ifs_from_json(to_json(ifs));
  EXPECT_EQ(back.offsets, ifs.offsets);
  EXPECT_DOUBLE_EQ(back.ratio, ifs.ratio);
  const auto p = line_projection(0.3);
  EXPECT_TRUE(projection_from_json(to_json(p)).rows().isApprox(p.rows()));
  const auto g = random_rotation(3, 1, 2);
  EXPECT_TRUE(rotation_from_json(to_json(g)).matrix().isApprox(g.matrix()));
}

TEST(Experiments, QuantileAndVerdicts) {
  EXPECT_DOUBLE_EQ(quantile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.25), 1.75);
  EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
  EXPECT_TRUE(make_verdict("x", 0.5, 0.4, 0.6).passed);
  EXPECT_FALSE(make_verdict("x", 0.7, 0.4, 0.6).passed);
  EXPECT_FALSE(make_verdict("x", 0.1, 0.1, std::nullopt, true).passed);
  EXPECT_FALSE(make_verdict("x", std::nan(""), std::nullopt, 1.0).passed);
  EXPECT_EQ(format_number(0.1), "0.1");
}

TEST(Experiments, SmallSliceRunIsReproducible) {
  auto cfg = *parse_config(kSlice).config;
  cfg.audit.enabled = false;
  const auto a = slice_experiment(cfg);
  const auto b = slice_experiment(cfg);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.samples.rows.size(), 6u * (5u + 4u));
  EXPECT_FALSE(a.scaling.rows.empty());
  EXPECT_TRUE(a.audit.is_null());
}

TEST(Experiments, AuditFlagsPointMass) {
  const auto cfg = *parse_config(json::parse(R"({"scenario": "assumption_audit", "seed": 1,
      "sets": {"A": {"kind": "point_mass", "ambient_dim": 2, "at": [0.5, 0.5]}}})")).config;
  const auto audit = assumption_audit(cfg);
  EXPECT_FALSE(audit["certified"].get<bool>());
  EXPECT_FALSE(audit["l2"]["stable"].get<bool>());
}

TEST(Experiments, GoodOffsetFractionGrowsWithBand) {
  auto cfg = *parse_config(kSlice).config;
  cfg.audit.enabled = false;
  double previous = -1.0;
  for (double band : {0.02, 0.05, 0.1, 0.2, 0.4}) {
    cfg.tolerance.band = band;
    const auto r = slice_experiment(cfg);
    const double good = r.summary["grid"]["good_fraction"].get<double>();
    EXPECT_GE(good, previous);
    previous = good;
  }
}
