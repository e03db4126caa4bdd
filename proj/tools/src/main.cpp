#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "chaoscale_cli/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  std::optional<unsigned> k;
  std::optional<double> epsilon;
};

const char* describe(const std::string& kind) {
  if (kind == "static-bias") return "Static bias grid E[U(mu_N)] - U(mu) (enumeration or Monte Carlo)";
  if (kind == "static-constants") return "Monte Carlo estimates of the static expansion constants C_p";
  if (kind == "dynamic-grid") return "Bias grid of the particle system against the analytic limit";
  if (kind == "fit") return "Bias grid plus weighted least-squares fit of C_1..C_{k-1}";
  if (kind == "romberg") return "Romberg-combined estimator over sizes N..kN";
  if (kind == "ensemble-mse") return "Ensemble estimator: variance law and MSE decomposition";
  if (kind == "cost-plan") return "Interaction-cost plan for a target accuracy";
  return "Romberg extrapolation weights";
}

int run_kind(const std::string& kind, const Flags& flags) {
  using namespace chaoscale::cli;
  try {
    ExperimentConfig cfg = flags.config.empty() ? ExperimentConfig{} : load_config(flags.config);
    if (cfg.experiment.empty()) {
      cfg.experiment = kind;
    } else if (cfg.experiment != kind) {
      throw ConfigError("experiment", "config declares '" + cfg.experiment +
                                          "' but the subcommand is '" + kind + "'");
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.out) cfg.output = *flags.out;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.k) cfg.k = *flags.k;
    if (flags.epsilon) cfg.epsilon = *flags.epsilon;
    return run(cfg, std::cout, std::cerr);
  } catch (const chaoscale::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int validate_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open '" << path << "'\n";
    return chaoscale::cli::kExitValidation;
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    chaoscale::cli::validate_summary(text.str());
  } catch (const chaoscale::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return chaoscale::cli::kExitValidation;
  }
  std::cout << path << ": ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaoscale: particle approximations of McKean-Vlasov SDEs and their 1/N expansion"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const auto& kind : chaoscale::cli::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, describe(kind));
    sub->add_option("--config,-c", flags.config, "YAML experiment config")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
    sub->add_option("--out,-o", flags.out, "output directory for CSV and summary.json");
    sub->add_option("--threads,-t", flags.threads,
                    "worker threads (default: CHAOSCALE_THREADS, then hardware concurrency)");
    sub->add_option("--k", flags.k, "Romberg / fit order (overrides the config)");
    sub->add_option("--epsilon", flags.epsilon, "target accuracy for cost-plan");
    sub->callback([&chosen, kind] { chosen = kind; });
  }
  std::string summary_path;
  auto* check = app.add_subcommand("validate-summary", "Re-parse and validate a summary.json");
  check->add_option("file", summary_path, "summary file")->required();
  check->callback([&chosen] { chosen = "validate-summary"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chaoscale::cli::kExitValidation;
  }
  if (chosen == "validate-summary") return validate_file(summary_path);
  return run_kind(chosen, flags);
}
