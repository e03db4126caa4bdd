#include "chaoscale_cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "chaoscale/expansion.hpp"
#include "chaoscale/romberg.hpp"

namespace chaoscale::cli {
namespace {

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

void check_keys(const YAML::Node& node, const std::string& field,
                const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(field, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(join(field, key), "unknown key");
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& field, const char* expected) {
  if (!node.IsScalar()) throw ConfigError(field, std::string("expected ") + expected);
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field, std::string("expected ") + expected + ", got '" +
                                 node.Scalar() + "'");
  }
}

double real(const YAML::Node& node, const std::string& field) {
  const double v = scalar<double>(node, field, "a number");
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

std::size_t count(const YAML::Node& node, const std::string& field) {
  const auto v = scalar<long long>(node, field, "a nonnegative integer");
  if (v < 0) throw ConfigError(field, "must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::vector<double> reals(const YAML::Node& node, const std::string& field) {
  if (!node.IsSequence()) throw ConfigError(field, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(real(node[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Either a list [a, b, ...] or a range {from, to, step} / {from, to, factor}.
std::vector<std::size_t> counts(const YAML::Node& node, const std::string& field) {
  std::vector<std::size_t> out;
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      out.push_back(count(node[i], field + "[" + std::to_string(i) + "]"));
    }
  } else if (node.IsMap()) {
    check_keys(node, field, {"from", "to", "step", "factor"});
    if (!node["from"] || !node["to"]) throw ConfigError(field, "range needs 'from' and 'to'");
    const auto from = count(node["from"], join(field, "from"));
    const auto to = count(node["to"], join(field, "to"));
    if (from == 0 || to < from) throw ConfigError(field, "range needs 1 <= from <= to");
    if (node["step"] && node["factor"]) {
      throw ConfigError(field, "give either 'step' or 'factor', not both");
    }
    if (node["factor"]) {
      const auto factor = count(node["factor"], join(field, "factor"));
      if (factor < 2) throw ConfigError(join(field, "factor"), "must be >= 2");
      for (std::size_t n = from; n <= to; n *= factor) out.push_back(n);
    } else {
      const auto step = node["step"] ? count(node["step"], join(field, "step")) : 1;
      if (step == 0) throw ConfigError(join(field, "step"), "must be >= 1");
      for (std::size_t n = from; n <= to; n += step) out.push_back(n);
    }
  } else {
    out.push_back(count(node, field));
  }
  return out;
}

InitialLaw parse_law(const YAML::Node& node, const std::string& field) {
  if (!node.IsMap() || !node["kind"]) throw ConfigError(field, "expected a mapping with 'kind'");
  const auto kind = scalar<std::string>(node["kind"], join(field, "kind"), "a string");
  try {
    if (kind == "bernoulli") {
      check_keys(node, field, {"kind", "p"});
      const double p = node["p"] ? real(node["p"], join(field, "p")) : 0.5;
      if (!(p > 0.0 && p < 1.0)) throw ConfigError(join(field, "p"), "must lie in (0, 1)");
      return DiscreteLaw::bernoulli(p);
    }
    if (kind == "dirac") {
      check_keys(node, field, {"kind", "x"});
      return InitialLaw::dirac(node["x"] ? real(node["x"], join(field, "x")) : 0.0);
    }
    if (kind == "discrete") {
      check_keys(node, field, {"kind", "atoms", "probs"});
      if (!node["atoms"] || !node["probs"]) {
        throw ConfigError(field, "discrete law needs 'atoms' and 'probs'");
      }
      auto atoms = reals(node["atoms"], join(field, "atoms"));
      auto probs = reals(node["probs"], join(field, "probs"));
      if (atoms.size() != probs.size()) {
        throw ConfigError(join(field, "probs"), "must have one entry per atom");
      }
      return DiscreteLaw::on_line(std::move(atoms), std::move(probs));
    }
    if (kind == "gaussian") {
      check_keys(node, field, {"kind", "mean", "stddev"});
      GaussianLaw g;
      if (node["mean"]) g.mean = real(node["mean"], join(field, "mean"));
      if (node["stddev"]) g.stddev = real(node["stddev"], join(field, "stddev"));
      if (!(g.stddev > 0.0)) throw ConfigError(join(field, "stddev"), "must be positive");
      return g;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(join(field, "kind"),
                    "unknown law '" + kind + "' (bernoulli, dirac, discrete, gaussian)");
}

void require(bool present, const std::string& field, const std::string& experiment) {
  if (!present) throw ConfigError(field, "required by experiment '" + experiment + "'");
}

void check_increasing(const std::vector<std::size_t>& n, const std::string& field) {
  if (n.empty()) throw ConfigError(field, "must be nonempty");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] == 0) throw ConfigError(field, "values must be >= 1");
    if (i > 0 && n[i] <= n[i - 1]) throw ConfigError(field, "must be strictly increasing");
  }
}

void check_order(unsigned k, const std::string& field) {
  if (k < 1 || k > kMaxRombergOrder) {
    throw ConfigError(field, "must lie in [1, " + std::to_string(kMaxRombergOrder) + "]");
  }
}

}  // namespace

FunctionalWithDerivatives FunctionalConfig::build() const {
  auto parse = [](const std::string& text, const char* field) {
    try {
      return ScalarFunction::parse(text);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("functional.") + field, e.what());
    }
  };
  if (family == "linear") return FunctionalWithDerivatives::linear(parse(f, "f"));
  if (family == "cylinder") return FunctionalWithDerivatives::moment_cylinder(parse(f, "f"));
  if (family == "product") {
    if (g.empty()) throw ConfigError("functional.g", "required by the product family");
    return FunctionalWithDerivatives::product(parse(f, "f"), parse(g, "g"));
  }
  throw ConfigError("functional.family",
                    "unknown family '" + family + "' (linear, cylinder, product)");
}

std::string FunctionalConfig::describe() const { return build().name(); }

McKVModel ExperimentConfig::build_model() const {
  if (!model) throw ConfigError("model", "required by experiment '" + experiment + "'");
  try {
    return builtin_model(model->name, model->params, model->initial);
  } catch (const InvalidArgument& e) {
    throw ConfigError("model", e.what());
  }
}

SimConfig ExperimentConfig::sim_config() const {
  SimConfig c;
  c.step_count = steps;
  c.scheme = scheme;
  c.master_seed = seed;
  c.replications = reps;
  c.threads = threads;
  return c;
}

void ExperimentConfig::validate() const {
  const auto& kinds = experiment_kinds();
  if (experiment.empty()) throw ConfigError("experiment", "required");
  if (std::find(kinds.begin(), kinds.end(), experiment) == kinds.end()) {
    throw ConfigError("experiment", "unknown experiment '" + experiment + "'");
  }
  const std::string& e = experiment;
  const bool needs_functional = e != "cost-plan" && e != "weights";
  if (needs_functional) {
    require(functional.has_value(), "functional", e);
    functional->build();
  }
  const bool dynamic =
      e == "dynamic-grid" || e == "romberg" || e == "ensemble-mse" ||
      (e == "fit" && fit_source == "dynamic-mc");
  if (dynamic) {
    const auto m = build_model();
    if (steps == 0) throw ConfigError("simulation.steps", "must be >= 1");
    if (scheme == Scheme::exact_linear && !m.linear) {
      throw ConfigError("simulation.scheme",
                        "exact_linear requires a linear model, got '" + m.name + "'");
    }
  }
  if (e == "static-bias" || e == "static-constants" ||
      (e == "fit" && fit_source != "dynamic-mc")) {
    require(law.has_value(), "law", e);
  }
  if (e == "static-bias" || e == "dynamic-grid" || e == "fit" || e == "romberg") {
    check_increasing(n_list, e == "romberg" ? "romberg.n" : "grid.n");
  }
  if (e == "static-bias" || e == "fit") {
    const bool enumerate =
        e == "static-bias" ? grid_mode == "enumerate" : fit_source == "static-enumeration";
    if (e == "static-bias" && grid_mode != "enumerate" && grid_mode != "mc") {
      throw ConfigError("grid.mode", "expected 'enumerate' or 'mc'");
    }
    if (enumerate && !law->is_discrete()) {
      throw ConfigError("law", "enumeration needs a discrete law");
    }
  }
  const bool needs_reps = (e == "static-bias" && grid_mode == "mc") || e == "dynamic-grid" ||
                          (e == "fit" && fit_source != "static-enumeration") || e == "romberg";
  if (needs_reps && reps < 2) {
    throw ConfigError(e == "romberg" ? "romberg.reps" : "grid.reps", "must be >= 2");
  }
  if (e == "fit") {
    try {
      parse_grid_source(fit_source);
    } catch (const InvalidArgument& err) {
      throw ConfigError("fit.source", err.what());
    }
    if (k < 2) throw ConfigError("fit.k", "must be >= 2");
    if (n_list.size() < k + 1) {
      throw ConfigError("grid.n", "fit with k=" + std::to_string(k) + " needs at least " +
                                      std::to_string(k + 1) + " grid points");
    }
  }
  if (e == "static-constants") {
    if (orders.empty()) throw ConfigError("constants.orders", "must be nonempty");
    for (unsigned p : orders) {
      if (p < 1 || p > 16) throw ConfigError("constants.orders", "orders must lie in [1, 16]");
    }
    if (samples < 2) throw ConfigError("constants.samples", "must be >= 2");
  }
  if (e == "romberg") check_order(k, "romberg.k");
  if (e == "ensemble-mse") {
    check_order(k, "ensemble.k");
    if (functional->build().family() != FamilyTag::linear) {
      throw ConfigError("functional.family", "ensemble-mse needs a linear functional");
    }
    if (ensemble_n == 0) throw ConfigError("ensemble.n", "must be >= 1");
    check_increasing(ensemble_m, "ensemble.m");
    if (repetitions < 2) throw ConfigError("ensemble.repetitions", "must be >= 2");
    if (!build_model().reference) {
      throw ConfigError("model.name", "ensemble-mse needs a model with an analytic reference");
    }
  }
  if (e == "cost-plan") {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("cost.epsilon", "must lie in (0, 1)");
    check_order(k, "cost.k");
  }
  if (e == "weights") check_order(k, "weights.k");
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<document>", std::string("YAML syntax error: ") + e.what());
  }
  ExperimentConfig c;
  if (root.IsNull()) return c;
  check_keys(root, "",
             {"experiment", "seed", "threads", "output", "model", "functional", "law", "grid",
              "simulation", "fit", "constants", "romberg", "ensemble", "cost", "weights"});
  if (root["experiment"]) c.experiment = scalar<std::string>(root["experiment"], "experiment", "a string");
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed", "an unsigned 64-bit integer");
  if (root["threads"]) c.threads = scalar<unsigned>(root["threads"], "threads", "a thread count");
  if (root["output"]) c.output = scalar<std::string>(root["output"], "output", "a path");

  if (const auto m = root["model"]) {
    check_keys(m, "model", {"name", "params", "initial"});
    ModelConfig mc;
    if (!m["name"]) throw ConfigError("model.name", "required");
    mc.name = scalar<std::string>(m["name"], "model.name", "a model name");
    if (const auto p = m["params"]) {
      if (!p.IsMap()) throw ConfigError("model.params", "expected a mapping");
      for (const auto& kv : p) {
        const auto key = kv.first.as<std::string>();
        mc.params[key] = real(kv.second, "model.params." + key);
      }
    }
    if (m["initial"]) mc.initial = parse_law(m["initial"], "model.initial");
    c.model = std::move(mc);
  }
  if (const auto f = root["functional"]) {
    check_keys(f, "functional", {"family", "f", "g"});
    FunctionalConfig fc;
    if (f["family"]) fc.family = scalar<std::string>(f["family"], "functional.family", "a string");
    if (f["f"]) fc.f = scalar<std::string>(f["f"], "functional.f", "a function name");
    if (f["g"]) fc.g = scalar<std::string>(f["g"], "functional.g", "a function name");
    c.functional = fc;
  }
  if (root["law"]) c.law = parse_law(root["law"], "law");
  if (const auto g = root["grid"]) {
    check_keys(g, "grid", {"n", "mode", "reps"});
    if (g["n"]) c.n_list = counts(g["n"], "grid.n");
    if (g["mode"]) c.grid_mode = scalar<std::string>(g["mode"], "grid.mode", "a string");
    if (g["reps"]) c.reps = count(g["reps"], "grid.reps");
  }
  if (const auto s = root["simulation"]) {
    check_keys(s, "simulation", {"scheme", "steps"});
    if (s["scheme"]) {
      try {
        c.scheme = parse_scheme(scalar<std::string>(s["scheme"], "simulation.scheme", "a string"));
      } catch (const ConfigError&) {
        throw;
      } catch (const InvalidArgument& e) {
        throw ConfigError("simulation.scheme", e.what());
      }
    }
    if (s["steps"]) c.steps = count(s["steps"], "simulation.steps");
  }
  if (const auto f = root["fit"]) {
    check_keys(f, "fit", {"k", "source"});
    if (f["k"]) c.k = static_cast<unsigned>(count(f["k"], "fit.k"));
    if (f["source"]) c.fit_source = scalar<std::string>(f["source"], "fit.source", "a string");
  }
  if (const auto s = root["constants"]) {
    check_keys(s, "constants", {"orders", "samples"});
    if (s["orders"]) {
      c.orders.clear();
      for (auto n : counts(s["orders"], "constants.orders")) {
        c.orders.push_back(static_cast<unsigned>(n));
      }
    }
    if (s["samples"]) c.samples = count(s["samples"], "constants.samples");
  }
  if (const auto r = root["romberg"]) {
    check_keys(r, "romberg", {"k", "n", "reps"});
    if (r["k"]) c.k = static_cast<unsigned>(count(r["k"], "romberg.k"));
    if (r["n"]) c.n_list = counts(r["n"], "romberg.n");
    if (r["reps"]) c.reps = count(r["reps"], "romberg.reps");
  }
  if (const auto en = root["ensemble"]) {
    check_keys(en, "ensemble", {"n", "m", "k", "repetitions"});
    if (en["n"]) c.ensemble_n = count(en["n"], "ensemble.n");
    if (en["m"]) c.ensemble_m = counts(en["m"], "ensemble.m");
    if (en["k"]) c.k = static_cast<unsigned>(count(en["k"], "ensemble.k"));
    if (en["repetitions"]) c.repetitions = count(en["repetitions"], "ensemble.repetitions");
  }
  if (const auto cp = root["cost"]) {
    check_keys(cp, "cost", {"epsilon", "k"});
    if (cp["epsilon"]) c.epsilon = real(cp["epsilon"], "cost.epsilon");
    if (cp["k"]) c.k = static_cast<unsigned>(count(cp["k"], "cost.k"));
  }
  if (const auto w = root["weights"]) {
    check_keys(w, "weights", {"k"});
    if (w["k"]) c.k = static_cast<unsigned>(count(w["k"], "weights.k"));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace chaoscale::cli
