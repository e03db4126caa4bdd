#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chaoscale/errors.hpp"
#include "chaoscale/functional.hpp"
#include "chaoscale/model.hpp"
#include "chaoscale/simulate.hpp"

namespace chaoscale::cli {

// Validation failure tied to one config field (dotted path, e.g. "grid.n").
class ConfigError : public InvalidArgument {
 public:
  ConfigError(std::string field, const std::string& message)
      : InvalidArgument("config field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"static-bias", "static-constants", "dynamic-grid",
                                              "fit",         "romberg",          "ensemble-mse",
                                              "cost-plan",   "weights"};
  return kinds;
}

struct ModelConfig {
  std::string name;
  ParameterMap params;
  std::optional<InitialLaw> initial;
};

struct FunctionalConfig {
  std::string family = "cylinder";  // linear | cylinder | product
  std::string f = "pow:2";
  std::string g;

  FunctionalWithDerivatives build() const;
  std::string describe() const;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string output;

  std::optional<ModelConfig> model;
  std::optional<FunctionalConfig> functional;
  std::optional<InitialLaw> law;

  // grid
  std::vector<std::size_t> n_list;
  std::string grid_mode = "enumerate";  // enumerate | mc
  std::size_t reps = 10000;

  // simulation
  Scheme scheme = Scheme::exact_linear;
  std::size_t steps = 1;

  // fit
  unsigned k = 2;
  std::string fit_source = "static-enumeration";

  // static constants
  std::vector<unsigned> orders{2};
  std::size_t samples = 100000;

  // ensemble-mse
  std::size_t ensemble_n = 64;
  std::vector<std::size_t> ensemble_m{8, 16, 32, 64};
  std::size_t repetitions = 400;

  // cost-plan
  double epsilon = 0.1;

  McKVModel build_model() const;
  SimConfig sim_config() const;
  // Checks the fields the experiment needs; throws ConfigError naming the field.
  void validate() const;
};

/// Parses the YAML config grammar documented in the README.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace chaoscale::cli
