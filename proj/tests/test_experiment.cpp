#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "rigidity/experiment.hpp"

using namespace rigidity;
using json = nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rigidity_lab_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string config_error(const std::string& text) {
  try {
    (void)parse_config(text, "cfg.yaml");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return {};
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const ExperimentConfig c = parse_config("", "cfg.yaml");
  EXPECT_EQ(c.epsilon, 0.03);
  EXPECT_EQ(c.grid, 128);
  EXPECT_EQ(c.matrix, (IMat2{{{2, 1}, {1, 1}}}));
  EXPECT_TRUE(c.terms.empty());
}

TEST(Config, ParsesEveryField) {
  const ExperimentConfig c = parse_config(R"(
map:
  matrix: [[3, 1], [2, 1]]
  epsilon: 0.01
  perturbation:
    - k: [1, 0]
      cos: [0.1, 0.0]
conjugacy:
  grid: 256
tolerances: {conjugacy: 1e-11, rotation: 1e-7, holonomy: 1e-5}
periodic: {max_period: 3}
circle: {samples: 2048, gluing_order: 1, birkhoff_terms: 50, birkhoff_grid: 16, lp_exponent: 3}
holonomy: {points: 4, triples: 5}
run: {seed: 99, output: elsewhere}
)");
  EXPECT_EQ(c.matrix[0][0], 3);
  EXPECT_EQ(c.epsilon, 0.01);
  ASSERT_EQ(c.terms.size(), 1u);
  EXPECT_EQ(c.terms[0].cos_coef.x, 0.1);
  EXPECT_EQ(c.terms[0].sin_coef.x, 0.0);
  EXPECT_EQ(c.grid, 256);
  EXPECT_EQ(c.holonomy_tol, 1e-5);
  EXPECT_EQ(c.circle_samples, 2048);
  EXPECT_EQ(c.lp_exponent, 3.0);
  EXPECT_EQ(c.holonomy_triples, 5);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.output, "elsewhere");
}

TEST(Config, DiagnosticsNameLineAndField) {
  EXPECT_NE(config_error("map:\n  epsilon: 0.01\n  amplitude: 2\n").find("cfg.yaml:3: field 'map.amplitude': unknown key"),
            std::string::npos);
  EXPECT_NE(config_error("conjugacy:\n  grid: many\n").find("cfg.yaml:2: field 'conjugacy.grid'"),
            std::string::npos);
  EXPECT_NE(config_error("map:\n  matrix: [[1, 1], [0, 1]]\n").find("field 'map.matrix'"), std::string::npos);
  EXPECT_NE(config_error("tolerances:\n  rotation: -1\n").find("tolerances.rotation"), std::string::npos);
  EXPECT_NE(config_error("conjugacy:\n  grid: 100\n").find("conjugacy.grid"), std::string::npos);
  EXPECT_NE(config_error("map: [1, 2\n").find("cfg.yaml:2"), std::string::npos);
  EXPECT_NE(config_error("map:\n  perturbation:\n    - k: [1]\n").find("map.perturbation[0].k"),
            std::string::npos);
}

TEST(Config, ExplicitDefaultFamilyHashesLikeImplicit) {
  const ExperimentConfig implicit = parse_config("map: {epsilon: 0.03}\n");
  const ExperimentConfig explicit_terms = parse_config(
      "map:\n  epsilon: 0.03\n  perturbation:\n    - {k: [1, 1], sin: [0.15915494309189535, 0]}\n");
  EXPECT_EQ(canonical_config(implicit), canonical_config(explicit_terms));
  ExperimentConfig other = implicit;
  other.seed = 2;
  EXPECT_NE(canonical_config(implicit), canonical_config(other));
  other = implicit;
  other.output = "somewhere/else";
  EXPECT_EQ(canonical_config(implicit), canonical_config(other));
}

TEST(Config, ToleranceScaling) {
  ExperimentConfig c;
  c.scale_tolerances(10.0);
  EXPECT_DOUBLE_EQ(c.holonomy_tol, 1e-5);
  EXPECT_DOUBLE_EQ(c.rotation_tol, 1e-7);
  EXPECT_THROW(c.scale_tolerances(0.0), Error);
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Subcommands, RoundTripNames) {
  for (const char* name : {"analyze-linear", "verify-anosov", "conjugacy", "periodic-data",
                           "holonomy-check", "circle-reduce", "full"}) {
    EXPECT_STREQ(to_string(parse_subcommand(name)), name);
  }
  EXPECT_THROW(parse_subcommand("report-all"), Error);
}

TEST(Run, AnalyzeLinearOnCatMap) {
  ExperimentConfig c;
  c.output = scratch("linear");
  const RunOutcome r = run_experiment(Subcommand::AnalyzeLinear, c);
  EXPECT_EQ(r.exit_code, 0);
  const json j = json::parse(r.report_json);
  EXPECT_EQ(j["schema"], "rigidity-lab/1");
  const json& lin = j["sections"]["linear"];
  EXPECT_NEAR(lin["lambda_u"].get<double>(), 0.9624236501192069, 1e-15);
  EXPECT_EQ(lin["alpha"]["cf_period"], json::array({1}));
  EXPECT_EQ(lin["fixed_counts"][2]["count"], 16);
  EXPECT_TRUE(std::filesystem::exists(r.directory / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(r.directory / "timing.json"));
  std::ifstream in(r.directory / "report.json");
  std::string disk((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(disk, r.report_json);
  // The directory name is derived from the content of the run.
  EXPECT_EQ(r.directory.filename().string(), "analyze-linear-" + j["run_id"].get<std::string>().substr(0, 16));
}

TEST(Run, LargeAmplitudeFailsCertification) {
  ExperimentConfig c;
  c.epsilon = 0.9;
  c.output = scratch("uncertified");
  const RunOutcome r = run_experiment(Subcommand::Conjugacy, c);
  EXPECT_EQ(r.exit_code, 2);
  const json j = json::parse(r.report_json);
  EXPECT_FALSE(j["sections"]["certification"]["certified"].get<bool>());
  EXPECT_FALSE(j["sections"].contains("conjugacy"));
}

TEST(Run, PeriodicDataMatchesLatticeCounts) {
  ExperimentConfig c;
  c.max_period = 3;
  const RunOutcome r = run_experiment(Subcommand::PeriodicData, c, false);
  const json j = json::parse(r.report_json)["sections"]["periodic_data"];
  EXPECT_TRUE(j["counts_match"].get<bool>());
  EXPECT_EQ(j["rows"].size(), 1u + 5u + 16u);
  EXPECT_LT(j["max_exponent_cross_check"].get<double>(), 1e-8);
}

TEST(Run, TightToleranceReportsIdentityViolation) {
  ExperimentConfig c;
  c.holonomy_points = 2;
  c.holonomy_triples = 3;
  c.holonomy_tol = 1e-300;
  const RunOutcome r = run_experiment(Subcommand::HolonomyCheck, c, false);
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_FALSE(r.violations.empty());
}

TEST(Aggregate, DetectsModifiedArtifacts) {
  ExperimentConfig c;
  c.output = scratch("aggregate");
  c.max_period = 2;
  const RunOutcome a = run_experiment(Subcommand::AnalyzeLinear, c);
  const RunOutcome b = run_experiment(Subcommand::PeriodicData, c);
  AggregateOutcome agg = aggregate_reports(c.output);
  EXPECT_EQ(agg.runs, 2);
  EXPECT_EQ(agg.tampered, 0);
  std::ofstream(b.directory / "periodic.csv", std::ios::app) << "0,0,0\n";
  agg = aggregate_reports(c.output);
  EXPECT_EQ(agg.tampered, 1);
  const json s = json::parse(agg.summary_json);
  bool found = false;
  for (const auto& run : s["runs"]) {
    if (!run["intact"].get<bool>()) {
      EXPECT_EQ(run["modified"], json::array({"periodic.csv"}));
      found = true;
    }
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(aggregate_reports(c.output / "missing"), Error);
}
