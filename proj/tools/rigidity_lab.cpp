#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rigidity/experiment.hpp"
#include "rigidity/parallel.hpp"

namespace {

constexpr int kUsageError = 1;

struct Options {
  std::string config;
  std::string out;
  int threads = 0;
  std::optional<std::uint64_t> seed;
  double tol_scale = 1.0;
  bool print = false;
};

void add_common(CLI::App& app, Options& o) {
  app.add_option("--config", o.config, "experiment config (YAML)")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output root, overrides run.output");
  app.add_option("--threads", o.threads, "worker threads (0: hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", o.seed, "seed for sampled points, overrides run.seed");
  app.add_option("--tol-scale", o.tol_scale, "multiply every tolerance")->check(CLI::PositiveNumber);
  app.add_flag("--print", o.print, "also write report.json to stdout");
}

int run(rigidity::Subcommand sub, const Options& o) {
  rigidity::ExperimentConfig cfg = o.config.empty() ? rigidity::ExperimentConfig{}
                                                    : rigidity::load_config(o.config);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.tol_scale != 1.0) cfg.scale_tolerances(o.tol_scale);
  if (o.threads > 0) rigidity::set_thread_count(o.threads);
  const rigidity::RunOutcome r = rigidity::run_experiment(sub, cfg, true);
  if (o.print) std::cout << r.report_json;
  std::cerr << rigidity::to_string(sub) << ": " << (r.directory / "report.json").string() << "\n";
  for (const auto& v : r.violations) std::cerr << "identity violation: " << v << "\n";
  if (r.exit_code == 2) std::cerr << "certification failed\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on perturbed hyperbolic toral automorphisms"};
  app.require_subcommand(1);
  Options opts;
  std::string report_root = "runs";

  const char* names[] = {"analyze-linear", "verify-anosov", "conjugacy", "periodic-data",
                         "holonomy-check", "circle-reduce", "full"};
  const char* help[] = {"eigendata, rotation number, continued fraction, fixed-point counts",
                        "cone-field certificate",
                        "solve and persist both conjugacy fields",
                        "periodic orbits and their unstable exponents",
                        "deck-action identities and holonomy cross-validation",
                        "charts, circle map, rotation numbers, reduced conjugacy, regularity",
                        "every section above"};
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(names); ++i) {
    auto* s = app.add_subcommand(names[i], help[i]);
    add_common(*s, opts);
    subs.push_back(s);
  }
  auto* report = app.add_subcommand("report", "aggregate prior outputs and re-check digests");
  report->add_option("--out", report_root, "output root to scan");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) {
      const auto agg = rigidity::aggregate_reports(report_root);
      const auto path = std::filesystem::path(report_root) / "summary.json";
      std::ofstream(path) << agg.summary_json;
      std::cout << agg.summary_json;
      std::cerr << agg.runs << " runs, " << agg.tampered << " modified\n";
      return agg.tampered == 0 ? 0 : kUsageError;
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) return run(rigidity::parse_subcommand(names[i]), opts);
    }
  } catch (const rigidity::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == rigidity::ErrorCode::CertificationFailed) return 2;
    if (e.code() == rigidity::ErrorCode::IdentityViolation) return 3;
    return kUsageError;
  }
  return kUsageError;
}
