#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "chaoscale/functional.hpp"
#include "chaoscale/model.hpp"
#include "chaoscale/simulate.hpp"

namespace chaoscale {

inline constexpr unsigned kMaxRombergOrder = 8;

/// alpha_m = (-1)^{k-m} m^k / (m! (k-m)!), m = 1..k. Cancels the first k-1
/// terms of an expansion in 1/N when combining systems of sizes N..kN.
std::vector<double> romberg_weights(unsigned k);

struct RombergScheme {
  unsigned k = 1;
  std::size_t base_n = 1;
  std::vector<double> weights;

  static RombergScheme make(unsigned k, std::size_t base_n);
  // Throws InvalidArgument if the weight identities fail.
  void validate() const;
};

struct RombergEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;
  std::vector<double> level_means;  // E[U] estimate at each size mN
};

/// Per replication, k independent systems of sizes N..kN combined with the
/// scheme weights. Mean and standard error over replications.
RombergEstimate romberg_estimate(const McKVModel& model, const FunctionalWithDerivatives& u,
                                 const RombergScheme& scheme, std::size_t reps,
                                 const SimConfig& config);

struct EnsemblePlan {
  std::size_t n = 1;  // base particle count
  std::size_t m = 1;  // number of ensembles M
  unsigned k = 1;     // Romberg order
};

struct EnsembleEstimate {
  double value = 0.0;
  double variance_estimate = 0.0;  // sample variance of per-ensemble values / M
  std::size_t ensembles = 0;
  std::vector<double> per_ensemble;
};

/// M independent ensembles of k systems each, for a linear functional
/// U(mu) = int F dmu. `replication` selects an independent repetition.
EnsembleEstimate ensemble_estimate(const McKVModel& model, const FunctionalWithDerivatives& u,
                                   const EnsemblePlan& plan, const SimConfig& config,
                                   std::uint32_t replication = 0);

struct CostPlan {
  double epsilon = 0.0;
  unsigned k = 1;
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t interactions = 0;         // M * sum_{m=1}^k (mN)^2
  std::uint64_t single_n = 0;             // ceil(eps^-2)
  std::uint64_t single_interactions = 0;  // single_n^2
};

/// N = ceil(eps^{-1/k}), M = ceil(eps^{-2+1/k}). Throws InvalidArgument for
/// eps outside (0, 1) and on 64-bit overflow.
CostPlan cost_plan(double epsilon, unsigned k);

/// M * sum_{m=1}^k (mN)^2 evaluated term by term with overflow checks.
std::uint64_t interaction_count(std::uint64_t n, std::uint64_t m, unsigned k);

struct MseReport {
  double bias_squared = 0.0;
  double variance = 0.0;  // mean of the per-repetition ensemble variance estimates
  double mse = 0.0;       // mean of (estimate - reference)^2 over repetitions
  double bias = 0.0;
  double mse_stderr = 0.0;
  double bias_squared_stderr = 0.0;
  double variance_stderr = 0.0;
  double decomposition_stderr = 0.0;
  std::size_t repetitions = 0;

  double gap() const { return mse - (bias_squared + variance); }
  bool consistent(double z = 3.0) const;
};

/// Repeats the ensemble estimator config.replications times and compares the
/// empirical MSE against squared bias plus the estimator's own variance.
MseReport mse_report(const McKVModel& model, const FunctionalWithDerivatives& u,
                     const EnsemblePlan& plan, const SimConfig& config, double reference);

}  // namespace chaoscale
