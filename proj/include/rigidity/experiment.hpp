#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rigidity/anosov_map.hpp"

namespace rigidity {

inline constexpr const char* kReportSchema = "rigidity-lab/1";

struct ExperimentConfig {
  IMat2 matrix{{{2, 1}, {1, 1}}};
  std::vector<TrigTerm> terms;  // empty: the default family
  double epsilon = 0.03;
  int grid = 128;
  double conjugacy_tol = 1e-12;
  double rotation_tol = 1e-8;
  double holonomy_tol = 1e-6;
  int max_period = 4;
  int circle_samples = 4096;
  int gluing_order = 2;
  int birkhoff_terms = 10000;
  int birkhoff_grid = 64;
  double lp_exponent = 2.0;
  int holonomy_points = 20;
  int holonomy_triples = 100;
  std::uint64_t seed = 1;
  std::filesystem::path output = "runs";

  PerturbedMap map() const;
  /// Scales every tolerance by `factor`.
  void scale_tolerances(double factor);
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses the YAML text; errors carry `source:line: field` diagnostics.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON of every field that affects results (not the output path).
std::string canonical_config(const ExperimentConfig& config);

std::string sha256_hex(const std::string& data);

enum class Subcommand {
  AnalyzeLinear,
  VerifyAnosov,
  Conjugacy,
  PeriodicData,
  HolonomyCheck,
  CircleReduce,
  Full,
};

const char* to_string(Subcommand s);
Subcommand parse_subcommand(const std::string& name);

struct RunOutcome {
  std::string report_json;  // byte-stable for a fixed config
  std::string timing_json;
  std::filesystem::path directory;
  int exit_code = 0;  // 0 ok, 2 certification failure, 3 identity violation
  std::vector<std::string> violations;
};

/// Runs a subcommand and, when `write` is set, stores report.json,
/// timing.json, artifacts and a manifest of their SHA-256 digests under
/// config.output / <digest of subcommand and canonical config>.
RunOutcome run_experiment(Subcommand sub, const ExperimentConfig& config, bool write = true);

struct AggregateOutcome {
  std::string summary_json;
  int runs = 0;
  int tampered = 0;
};

/// Collects every run directory under `root`, re-checking manifests.
AggregateOutcome aggregate_reports(const std::filesystem::path& root);

}  // namespace rigidity
