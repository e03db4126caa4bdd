#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chaoscale/functional.hpp"
#include "chaoscale/measure.hpp"
#include "chaoscale/model.hpp"
#include "chaoscale/simulate.hpp"

namespace chaoscale {

enum class GridSource { static_enumeration, static_mc, dynamic_mc };

std::string to_string(GridSource source);
GridSource parse_grid_source(const std::string& text);

struct BiasPoint {
  std::size_t n = 0;
  double bias = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;  // 0 for enumeration
};

// Two-level Richardson estimate of the time-discretisation bias.
struct DtGuard {
  bool checked = false;
  double dt_bias_estimate = 0.0;
  double threshold = 0.0;  // 10% of the smallest |bias| on the grid
  bool passed = true;
};

struct BiasGrid {
  GridSource source = GridSource::static_enumeration;
  double reference = 0.0;
  std::vector<BiasPoint> points;
  DtGuard dt_guard;

  // N strictly increasing, stderr >= 0, enumeration entries exact.
  void validate() const;
};

struct ExpansionFit {
  unsigned k = 2;
  std::vector<double> coefficients;     // C_1 .. C_{k-1}
  std::vector<double> standard_errors;  // same length
  double residual_norm = 0.0;           // sqrt(sum_i w_i r_i^2)
  double slope = 0.0;                   // log-log slope of |bias| against N
  std::vector<double> weights;
  std::vector<double> residuals;        // bias_i - sum_j C_j / N_i^j

  double predict(double n) const;
};

struct StaticConstant {
  unsigned order = 2;
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
  std::string estimator;
};

struct BiasEstimate {
  double bias = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;
};

/// E[U(mu_N)] - U(law) by exhaustive enumeration of the empirical measures.
double static_bias_exact(const FunctionalWithDerivatives& u, const DiscreteLaw& law,
                         unsigned n);

BiasGrid static_bias_exact_grid(const FunctionalWithDerivatives& u, const DiscreteLaw& law,
                                std::span<const std::size_t> n_list);

/// Monte Carlo version of the static bias with sample i.i.d. draws.
BiasEstimate static_bias_mc(const FunctionalWithDerivatives& u, const InitialLaw& law,
                            std::size_t n, std::size_t reps, std::uint64_t seed,
                            unsigned threads = 0);

BiasGrid static_bias_mc_grid(const FunctionalWithDerivatives& u, const InitialLaw& law,
                             std::span<const std::size_t> n_list, std::size_t reps,
                             std::uint64_t seed, unsigned threads = 0);

/// Coefficient of N^{-(p-1)} contributed by the p-th derivative:
/// (1/p!) E[ sum_{S subset {1..p}} (-1)^{p-|S|} lfd_p(mu, y^S) ], where
/// y^S_k = xi for k in S and an independent copy xi_hat^k otherwise.
StaticConstant static_constant_cp(const FunctionalWithDerivatives& u, const InitialLaw& law,
                                  unsigned order, std::size_t samples, std::uint64_t seed,
                                  unsigned threads = 0);

/// (1/2) E[lfd_2(mu, xi~, xi~) - lfd_2(mu, xi~, xi)] with xi~, xi independent.
StaticConstant first_order_bias_constant(const FunctionalWithDerivatives& u,
                                         const InitialLaw& law, std::size_t samples,
                                         std::uint64_t seed, unsigned threads = 0);

/// E[U(mu^N_T)] - U(L[X_T]) at every N, using the model's analytic limit.
/// For Euler runs the dt guard compares step_count and 2*step_count at the
/// largest N.
BiasGrid dynamic_bias_grid(const McKVModel& model, const FunctionalWithDerivatives& u,
                           std::span<const std::size_t> n_list, std::size_t reps,
                           const SimConfig& config);

/// Weighted least squares of bias on N^{-1} .. N^{-(k-1)}. Weights are
/// 1/stderr^2 for Monte Carlo grids and 1 for enumeration grids.
ExpansionFit fit_expansion(const BiasGrid& grid, unsigned k);

}  // namespace chaoscale
