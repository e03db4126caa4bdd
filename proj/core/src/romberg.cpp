#include "chaoscale/romberg.hpp"

#include <cmath>
#include <limits>

#include "chaoscale/errors.hpp"
#include "chaoscale/parallel.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    throw InvalidArgument("cost_plan: interaction count overflows 64 bits");
  }
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    throw InvalidArgument("cost_plan: interaction count overflows 64 bits");
  }
  return a + b;
}

// ceil with a relative slack of 1e-12 so that pow() noise on exact integers
// (e.g. 0.1^-1 = 10.000000000000002) does not round up.
std::uint64_t ceil_count(double x) {
  if (!(x < 1.8e19)) throw InvalidArgument("cost_plan: count overflows 64 bits");
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, r)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

void check_linear(const FunctionalWithDerivatives& u) {
  if (u.family() != FamilyTag::linear) {
    throw InvalidArgument("ensemble estimator requires a linear functional, got " + u.name());
  }
}

}  // namespace

std::vector<double> romberg_weights(unsigned k) {
  if (k < 1 || k > kMaxRombergOrder) {
    throw InvalidArgument("romberg_weights: k must lie in [1, " +
                          std::to_string(kMaxRombergOrder) + "]");
  }
  std::vector<std::uint64_t> fact(k + 1, 1);
  for (unsigned i = 1; i <= k; ++i) fact[i] = fact[i - 1] * i;
  std::vector<double> alpha(k);
  for (unsigned m = 1; m <= k; ++m) {
    std::uint64_t mk = 1;
    for (unsigned i = 0; i < k; ++i) mk *= m;
    const double mag = static_cast<double>(mk) / static_cast<double>(fact[m] * fact[k - m]);
    alpha[m - 1] = ((k - m) % 2 == 0) ? mag : -mag;
  }
  return alpha;
}

RombergScheme RombergScheme::make(unsigned k, std::size_t base_n) {
  if (base_n == 0) throw InvalidArgument("RombergScheme: base N must be >= 1");
  RombergScheme s{k, base_n, romberg_weights(k)};
  s.validate();
  return s;
}

void RombergScheme::validate() const {
  if (weights.size() != k) throw InvalidArgument("RombergScheme: weight count must equal k");
  if (std::abs(compensated_sum(weights) - 1.0) > 1e-12) {
    throw InvalidArgument("RombergScheme: weights do not sum to 1");
  }
  for (unsigned j = 1; j < k; ++j) {
    std::vector<double> t(k);
    for (unsigned m = 1; m <= k; ++m) t[m - 1] = weights[m - 1] * std::pow(m, -double(j));
    if (std::abs(compensated_sum(t)) > 1e-9) {
      throw InvalidArgument("RombergScheme: weights fail to cancel N^-" + std::to_string(j));
    }
  }
}

RombergEstimate romberg_estimate(const McKVModel& model, const FunctionalWithDerivatives& u,
                                 const RombergScheme& scheme, std::size_t reps,
                                 const SimConfig& config) {
  scheme.validate();
  if (reps < 2) throw InvalidArgument("romberg_estimate: reps must be >= 2");
  config.validate(model);
  const unsigned k = scheme.k;
  std::vector<double> combined(reps);
  std::vector<std::vector<double>> per_level(k, std::vector<double>(reps));
  parallel_for(reps, resolve_threads(config.threads), [&](std::size_t r) {
    std::vector<double> terms(k);
    for (unsigned m = 1; m <= k; ++m) {
      const double value = u.eval(run_terminal_measure(model, m * scheme.base_n, config, 0,
                                                       static_cast<std::uint32_t>(r), m));
      per_level[m - 1][r] = value;
      terms[m - 1] = scheme.weights[m - 1] * value;
    }
    combined[r] = compensated_sum(terms);
  });
  const auto s = summarize(combined);
  RombergEstimate out{s.mean, s.stderr_of_mean, reps, {}};
  for (const auto& level : per_level) out.level_means.push_back(summarize(level).mean);
  return out;
}

EnsembleEstimate ensemble_estimate(const McKVModel& model, const FunctionalWithDerivatives& u,
                                   const EnsemblePlan& plan, const SimConfig& config,
                                   std::uint32_t replication) {
  check_linear(u);
  if (plan.n == 0 || plan.m == 0) throw InvalidArgument("ensemble plan: N and M must be >= 1");
  if (plan.m > 0xFFFFFFFFull) throw InvalidArgument("ensemble plan: M exceeds 2^32");
  config.validate(model);
  const auto weights = romberg_weights(plan.k);
  EnsembleEstimate out;
  out.ensembles = plan.m;
  out.per_ensemble.resize(plan.m);
  parallel_for(plan.m, resolve_threads(config.threads), [&](std::size_t j) {
    std::vector<double> terms(plan.k);
    for (unsigned m = 1; m <= plan.k; ++m) {
      terms[m - 1] = weights[m - 1] * u.eval(run_terminal_measure(
                                          model, m * plan.n, config,
                                          static_cast<std::uint32_t>(j), replication, m));
    }
    out.per_ensemble[j] = compensated_sum(terms);
  });
  // Permutation-invariant reduction over ensembles.
  const double m = static_cast<double>(plan.m);
  out.value = symmetric_sum(out.per_ensemble) / m;
  if (plan.m >= 2) {
    std::vector<double> sq(plan.m);
    for (std::size_t j = 0; j < plan.m; ++j) {
      const double d = out.per_ensemble[j] - out.value;
      sq[j] = d * d;
    }
    out.variance_estimate = symmetric_sum(sq) / (m - 1.0) / m;
  }
  return out;
}

std::uint64_t interaction_count(std::uint64_t n, std::uint64_t m, unsigned k) {
  std::uint64_t per_ensemble = 0;
  for (unsigned level = 1; level <= k; ++level) {
    const std::uint64_t size = checked_mul(level, n);
    per_ensemble = checked_add(per_ensemble, checked_mul(size, size));
  }
  return checked_mul(m, per_ensemble);
}

CostPlan cost_plan(double epsilon, unsigned k) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw InvalidArgument("cost_plan: epsilon must lie in (0, 1)");
  }
  if (k < 1) throw InvalidArgument("cost_plan: k must be >= 1");
  if (k > kMaxRombergOrder) throw InvalidArgument("cost_plan: k must be <= 8");
  CostPlan p;
  p.epsilon = epsilon;
  p.k = k;
  const double inv_k = 1.0 / static_cast<double>(k);
  p.n = ceil_count(std::pow(epsilon, -inv_k));
  p.m = ceil_count(std::pow(epsilon, -2.0 + inv_k));
  p.interactions = interaction_count(p.n, p.m, k);
  p.single_n = ceil_count(std::pow(epsilon, -2.0));
  p.single_interactions = checked_mul(p.single_n, p.single_n);
  return p;
}

bool MseReport::consistent(double z) const {
  return std::abs(gap()) <= z * decomposition_stderr;
}

MseReport mse_report(const McKVModel& model, const FunctionalWithDerivatives& u,
                     const EnsemblePlan& plan, const SimConfig& config, double reference) {
  check_linear(u);
  if (!std::isfinite(reference)) throw OracleUnavailable("mse_report: reference value is not finite");
  const std::size_t reps = config.replications;
  if (reps < 2) throw InvalidArgument("mse_report: need at least 2 repetitions");
  if (reps > 0xFFFFFFFFull) throw InvalidArgument("mse_report: too many repetitions");

  // Parallelism goes to the outer repetitions; each estimate runs serially.
  SimConfig inner = config;
  inner.threads = 1;
  std::vector<double> values(reps), variances(reps), sq_err(reps);
  parallel_for(reps, resolve_threads(config.threads), [&](std::size_t r) {
    const auto e = ensemble_estimate(model, u, plan, inner, static_cast<std::uint32_t>(r));
    values[r] = e.value;
    variances[r] = e.variance_estimate;
    sq_err[r] = (e.value - reference) * (e.value - reference);
  });
  const auto sv = summarize(values);
  const auto svar = summarize(variances);
  const auto smse = summarize(sq_err);

  MseReport rep;
  rep.repetitions = reps;
  rep.bias = sv.mean - reference;
  rep.bias_squared = rep.bias * rep.bias;
  rep.variance = svar.mean;
  rep.mse = smse.mean;
  rep.mse_stderr = smse.stderr_of_mean;
  rep.variance_stderr = svar.stderr_of_mean;
  // delta method for b^2, plus the E[b_hat^2] - b^2 = se^2 offset
  rep.bias_squared_stderr =
      2.0 * std::abs(rep.bias) * sv.stderr_of_mean + sv.stderr_of_mean * sv.stderr_of_mean;
  rep.decomposition_stderr =
      std::sqrt(rep.mse_stderr * rep.mse_stderr + rep.variance_stderr * rep.variance_stderr +
                rep.bias_squared_stderr * rep.bias_squared_stderr);
  return rep;
}

}  // namespace chaoscale
