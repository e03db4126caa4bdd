#include "chaoscale_cli/runner.hpp"

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "chaoscale/expansion.hpp"
#include "chaoscale/romberg.hpp"
#include "chaoscale/stats.hpp"
#include "json.hpp"

namespace chaoscale::cli {
namespace {

using nlohmann::ordered_json;

std::string fmt_num(double x) { return fmt::format("{:.17g}", x); }

ordered_json number_or_null(double x) {
  return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr);
}

ordered_json header(const ExperimentConfig& c, const std::string& schema) {
  ordered_json j;
  j["schema"] = schema;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  return j;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

BiasGrid collect_grid(const ExperimentConfig& c, GridSource source) {
  const auto u = c.functional->build();
  switch (source) {
    case GridSource::static_enumeration:
      return static_bias_exact_grid(u, *c.law->discrete(), c.n_list);
    case GridSource::static_mc:
      return static_bias_mc_grid(u, *c.law, c.n_list, c.reps, c.seed, c.threads);
    case GridSource::dynamic_mc:
      return dynamic_bias_grid(c.build_model(), u, c.n_list, c.reps, c.sim_config());
  }
  throw InvalidArgument("unknown grid source");
}

std::string grid_csv(const BiasGrid& grid) {
  std::string s = "N,bias,stderr,reps\n";
  for (const auto& p : grid.points) {
    s += fmt::format("{},{},{},{}\n", p.n, fmt_num(p.bias), fmt_num(p.standard_error), p.reps);
  }
  return s;
}

std::string grid_table(const BiasGrid& grid) {
  std::string s = fmt::format("source: {}   reference: {}\n", to_string(grid.source),
                              fmt_num(grid.reference));
  s += fmt::format("{:>8}  {:>24}  {:>24}  {:>10}\n", "N", "bias", "stderr", "reps");
  for (const auto& p : grid.points) {
    s += fmt::format("{:>8}  {:>24.17g}  {:>24.17g}  {:>10}\n", p.n, p.bias, p.standard_error,
                     p.reps);
  }
  return s;
}

ordered_json grid_json(const BiasGrid& grid) {
  ordered_json j;
  j["source"] = to_string(grid.source);
  j["reference"] = grid.reference;
  j["points"] = ordered_json::array();
  for (const auto& p : grid.points) {
    j["points"].push_back(
        {{"N", p.n}, {"bias", p.bias}, {"stderr", p.standard_error}, {"reps", p.reps}});
  }
  j["dt_guard"] = {{"checked", grid.dt_guard.checked},
                   {"dt_bias_estimate", grid.dt_guard.dt_bias_estimate},
                   {"threshold", grid.dt_guard.threshold},
                   {"passed", grid.dt_guard.passed}};
  return j;
}

void warn_dt(const BiasGrid& grid, RunOutput& out) {
  if (grid.dt_guard.checked && !grid.dt_guard.passed) {
    out.warnings.push_back(fmt::format(
        "dt guard: Richardson time-step bias estimate {} exceeds threshold {}; "
        "increase simulation.steps or use the exact_linear scheme",
        fmt_num(grid.dt_guard.dt_bias_estimate), fmt_num(grid.dt_guard.threshold)));
  }
}

RunOutput run_grid(const ExperimentConfig& c, GridSource source) {
  RunOutput out;
  const auto grid = collect_grid(c, source);
  out.csv_files.emplace_back("grid.csv", grid_csv(grid));
  auto j = header(c, "chaoscale.grid.v1");
  j["functional"] = c.functional->describe();
  j["grid"] = grid_json(grid);
  out.summary_json = dump(j);
  out.table = grid_table(grid);
  warn_dt(grid, out);
  return out;
}

RunOutput run_fit(const ExperimentConfig& c) {
  RunOutput out;
  const auto grid = collect_grid(c, parse_grid_source(c.fit_source));
  const auto fit = fit_expansion(grid, c.k);
  std::string csv = "j,C_j,stderr\n";
  std::string table = grid_table(grid) + fmt::format("\nfit k={}  slope={}  residual={}\n", c.k,
                                                     fmt_num(fit.slope),
                                                     fmt_num(fit.residual_norm));
  table += fmt::format("{:>4}  {:>24}  {:>24}\n", "j", "C_j", "stderr");
  for (std::size_t i = 0; i < fit.coefficients.size(); ++i) {
    csv += fmt::format("{},{},{}\n", i + 1, fmt_num(fit.coefficients[i]),
                       fmt_num(fit.standard_errors[i]));
    table += fmt::format("{:>4}  {:>24.17g}  {:>24.17g}\n", i + 1, fit.coefficients[i],
                         fit.standard_errors[i]);
  }
  out.csv_files.emplace_back("grid.csv", grid_csv(grid));
  out.csv_files.emplace_back("fit.csv", csv);
  auto j = header(c, "chaoscale.fit.v1");
  j["functional"] = c.functional->describe();
  j["grid"] = grid_json(grid);
  ordered_json fj;
  fj["k"] = fit.k;
  fj["coefficients"] = fit.coefficients;
  fj["standard_errors"] = fit.standard_errors;
  fj["residual_norm"] = fit.residual_norm;
  fj["slope"] = number_or_null(fit.slope);
  fj["weights"] = fit.weights;
  fj["residuals"] = fit.residuals;
  j["fit"] = fj;
  out.summary_json = dump(j);
  out.table = table;
  warn_dt(grid, out);
  return out;
}

RunOutput run_constants(const ExperimentConfig& c) {
  RunOutput out;
  const auto u = c.functional->build();
  std::vector<StaticConstant> rows;
  for (unsigned p : c.orders) {
    rows.push_back(static_constant_cp(u, *c.law, p, c.samples, c.seed, c.threads));
  }
  if (u.max_order() >= 2) {
    rows.push_back(first_order_bias_constant(u, *c.law, c.samples, c.seed, c.threads));
  }
  std::string csv = "p,C_p,stderr,samples,estimator\n";
  std::string table = fmt::format("{:>4}  {:>24}  {:>24}  {:>10}  {}\n", "p", "C_p", "stderr",
                                  "samples", "estimator");
  auto j = header(c, "chaoscale.constants.v1");
  j["functional"] = c.functional->describe();
  j["law"] = c.law->describe();
  j["constants"] = ordered_json::array();
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{},{}\n", r.order, fmt_num(r.value), fmt_num(r.standard_error),
                       r.samples, r.estimator);
    table += fmt::format("{:>4}  {:>24.17g}  {:>24.17g}  {:>10}  {}\n", r.order, r.value,
                         r.standard_error, r.samples, r.estimator);
    j["constants"].push_back({{"p", r.order},
                              {"value", r.value},
                              {"stderr", r.standard_error},
                              {"samples", r.samples},
                              {"estimator", r.estimator}});
  }
  out.csv_files.emplace_back("constants.csv", csv);
  out.summary_json = dump(j);
  out.table = table;
  return out;
}

RunOutput run_romberg(const ExperimentConfig& c) {
  RunOutput out;
  const auto model = c.build_model();
  const auto u = c.functional->build();
  const auto cfg = c.sim_config();
  double reference = NAN;
  try {
    reference = limit_functional_value(model, u);
  } catch (const OracleUnavailable&) {
  }
  const auto weights = romberg_weights(c.k);
  auto j = header(c, "chaoscale.romberg.v1");
  j["functional"] = u.name();
  j["model"] = model.name;
  j["k"] = c.k;
  j["weights"] = weights;
  j["reference"] = number_or_null(reference);
  j["rows"] = ordered_json::array();
  std::string csv = "N,value,stderr,reps,bias\n";
  std::string table = fmt::format("k={}  reference={}\n{:>8}  {:>24}  {:>24}  {:>24}\n", c.k,
                                  fmt_num(reference), "N", "value", "stderr", "bias");
  std::vector<double> ns, biases;
  for (std::size_t n : c.n_list) {
    const auto e = romberg_estimate(model, u, RombergScheme::make(c.k, n), c.reps, cfg);
    const double bias = e.value - reference;
    ns.push_back(double(n));
    biases.push_back(bias);
    csv += fmt::format("{},{},{},{},{}\n", n, fmt_num(e.value), fmt_num(e.standard_error), e.reps,
                       fmt_num(bias));
    table += fmt::format("{:>8}  {:>24.17g}  {:>24.17g}  {:>24.17g}\n", n, e.value,
                         e.standard_error, bias);
    j["rows"].push_back({{"N", n},
                         {"value", e.value},
                         {"stderr", e.standard_error},
                         {"reps", e.reps},
                         {"bias", number_or_null(bias)},
                         {"level_means", e.level_means}});
  }
  double slope = NAN;
  if (std::isfinite(reference) && ns.size() >= 2) {
    try {
      slope = loglog_slope(ns, biases);
    } catch (const InvalidArgument&) {
    }
  }
  j["bias_slope"] = number_or_null(slope);
  out.csv_files.emplace_back("romberg.csv", csv);
  out.summary_json = dump(j);
  out.table = table + fmt::format("bias slope: {}\n", fmt_num(slope));
  return out;
}

RunOutput run_ensemble(const ExperimentConfig& c) {
  RunOutput out;
  const auto model = c.build_model();
  const auto u = c.functional->build();
  auto cfg = c.sim_config();
  cfg.replications = c.repetitions;
  const double reference = limit_functional_value(model, u);
  auto j = header(c, "chaoscale.ensemble.v1");
  j["functional"] = u.name();
  j["model"] = model.name;
  j["n"] = c.ensemble_n;
  j["k"] = c.k;
  j["repetitions"] = c.repetitions;
  j["reference"] = reference;
  j["rows"] = ordered_json::array();
  std::string per = "M,ensemble,value\n";
  std::string csv = "M,value,variance_estimate,bias_squared,variance,mse,gap,decomposition_stderr\n";
  std::string table = fmt::format("{:>6}  {:>22}  {:>22}  {:>22}  {:>22}  {}\n", "M", "bias^2",
                                  "variance", "mse", "gap", "consistent");
  std::vector<double> ms, vars;
  for (std::size_t m : c.ensemble_m) {
    const EnsemblePlan plan{c.ensemble_n, m, c.k};
    const auto first = ensemble_estimate(model, u, plan, cfg, 0);
    for (std::size_t e = 0; e < first.per_ensemble.size(); ++e) {
      per += fmt::format("{},{},{}\n", m, e, fmt_num(first.per_ensemble[e]));
    }
    const auto r = mse_report(model, u, plan, cfg, reference);
    ms.push_back(double(m));
    vars.push_back(r.variance);
    csv += fmt::format("{},{},{},{},{},{},{},{}\n", m, fmt_num(first.value),
                       fmt_num(first.variance_estimate), fmt_num(r.bias_squared),
                       fmt_num(r.variance), fmt_num(r.mse), fmt_num(r.gap()),
                       fmt_num(r.decomposition_stderr));
    table += fmt::format("{:>6}  {:>22.15g}  {:>22.15g}  {:>22.15g}  {:>22.15g}  {}\n", m,
                         r.bias_squared, r.variance, r.mse, r.gap(),
                         r.consistent() ? "yes" : "no");
    j["rows"].push_back({{"M", m},
                         {"value", first.value},
                         {"variance_estimate", first.variance_estimate},
                         {"bias_squared", r.bias_squared},
                         {"variance", r.variance},
                         {"mse", r.mse},
                         {"gap", r.gap()},
                         {"decomposition_stderr", r.decomposition_stderr},
                         {"consistent", r.consistent()}});
  }
  double slope = NAN;
  if (ms.size() >= 2) {
    try {
      slope = loglog_slope(ms, vars);
    } catch (const InvalidArgument&) {
    }
  }
  j["variance_slope"] = number_or_null(slope);
  out.csv_files.emplace_back("ensembles.csv", per);
  out.csv_files.emplace_back("mse.csv", csv);
  out.summary_json = dump(j);
  out.table = table + fmt::format("variance slope vs M: {}\n", fmt_num(slope));
  return out;
}

RunOutput run_cost(const ExperimentConfig& c) {
  RunOutput out;
  const auto p = cost_plan(c.epsilon, c.k);
  out.csv_files.emplace_back(
      "plan.csv", fmt::format("epsilon,k,N,M,C,N_single,C_single\n{},{},{},{},{},{},{}\n",
                              fmt_num(p.epsilon), p.k, p.n, p.m, p.interactions, p.single_n,
                              p.single_interactions));
  auto j = header(c, "chaoscale.cost_plan.v1");
  j["epsilon"] = p.epsilon;
  j["k"] = p.k;
  j["N"] = p.n;
  j["M"] = p.m;
  j["C"] = p.interactions;
  j["N_single"] = p.single_n;
  j["C_single"] = p.single_interactions;
  out.summary_json = dump(j);
  out.table = fmt::format(
      "epsilon={}  k={}\n  N={}  M={}  C={}\n  single system: N={}  C={}\n", fmt_num(p.epsilon),
      p.k, p.n, p.m, p.interactions, p.single_n, p.single_interactions);
  return out;
}

RunOutput run_weights(const ExperimentConfig& c) {
  RunOutput out;
  const auto w = romberg_weights(c.k);
  std::string csv = "m,alpha\n";
  std::string list;
  for (std::size_t m = 0; m < w.size(); ++m) {
    csv += fmt::format("{},{}\n", m + 1, fmt_num(w[m]));
    list += (m ? ", " : "") + fmt_num(w[m]);
  }
  out.csv_files.emplace_back("weights.csv", csv);
  auto j = header(c, "chaoscale.weights.v1");
  j["k"] = c.k;
  j["weights"] = w;
  out.summary_json = dump(j);
  out.table = "(" + list + ")\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("--out", "cannot write '" + path.string() + "'");
  f << content;
}

}  // namespace

std::string format_number(double x) { return fmt_num(x); }

RunOutput run_experiment(const ExperimentConfig& c) {
  c.validate();
  const auto& e = c.experiment;
  if (e == "static-bias") {
    return run_grid(c, c.grid_mode == "mc" ? GridSource::static_mc : GridSource::static_enumeration);
  }
  if (e == "dynamic-grid") return run_grid(c, GridSource::dynamic_mc);
  if (e == "fit") return run_fit(c);
  if (e == "static-constants") return run_constants(c);
  if (e == "romberg") return run_romberg(c);
  if (e == "ensemble-mse") return run_ensemble(c);
  if (e == "cost-plan") return run_cost(c);
  return run_weights(c);
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const auto result = run_experiment(config);
    validate_summary(result.summary_json);
    if (!config.output.empty()) {
      const std::filesystem::path dir(config.output);
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      if (ec) throw ConfigError("--out", "cannot create '" + dir.string() + "': " + ec.message());
      for (const auto& [name, content] : result.csv_files) write_file(dir / name, content);
      write_file(dir / "summary.json", result.summary_json);
    }
    out << result.table;
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    return kExitOk;
  } catch (const NumericalBlowup& e) {
    err << "error: " << e.what() << "\n";
    return kExitBlowup;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace chaoscale::cli
