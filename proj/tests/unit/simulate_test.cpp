#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <vector>

#include "chaoscale/errors.hpp"
#include "chaoscale/simulate.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

using F = FunctionalWithDerivatives;

McKVModel frozen(InitialLaw init = InitialLaw::dirac(1.0)) {
  return builtin_model("mean_field_ou", {{"a", 0}, {"c", 0}, {"sigma", 0}}, std::move(init));
}

McKVModel ou(InitialLaw init = InitialLaw::dirac(1.0), double c = 0.5, double sigma = 0.4) {
  return builtin_model("mean_field_ou", {{"a", 1}, {"c", c}, {"sigma", sigma}}, std::move(init));
}

SimConfig exact_config(std::uint64_t seed, std::size_t steps = 1) {
  SimConfig cfg;
  cfg.scheme = Scheme::exact_linear;
  cfg.step_count = steps;
  cfg.master_seed = seed;
  return cfg;
}

double phi(double rate, double t) { return rate == 0 ? t : -std::expm1(-rate * t) / rate; }

TEST(Step, ZeroCoefficientsLeaveStateUnchanged) {
  const auto model = frozen();
  const ParticleSystemState s{1, {0.3, -1.0, 2.5}, 0.0};
  const auto next = step(s, model, 0.1, RngStream(1, 0, 0, 0), 0);
  EXPECT_EQ(next.positions, s.positions);
  EXPECT_DOUBLE_EQ(next.time, 0.1);
}

TEST(Step, UnitDriftAddsDt) {
  McKVModel model = frozen();
  model.drift = CoefficientSpec::constant(1.0);
  model.linear.reset();
  const ParticleSystemState s{2, {0.0, 1.0, -2.0, 3.0}, 0.0};
  const auto next = step(s, model, 0.1, RngStream(1, 0, 0, 0), 0);
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    EXPECT_DOUBLE_EQ(next.positions[i], s.positions[i] + 0.1);
  }
}

TEST(Step, EulerDeterministicOuApproachesOdeLimit) {
  const auto model = ou(InitialLaw::dirac(1.0), 0.5, 0.0);
  SimConfig cfg;
  cfg.step_count = 1000;
  const auto mu = run_terminal_measure(model, 8, cfg, 0, 0);
  for (double x : mu.flat_atoms()) EXPECT_NEAR(x, std::exp(-0.5), 1e-3);
}

TEST(Step, BlowupNamesStep) {
  const auto model = builtin_model("mean_field_ou", {{"a", -1e308}, {"c", 0}, {"sigma", 0}});
  SimConfig cfg;
  cfg.step_count = 2;
  try {
    run_terminal_measure(model, 3, cfg, 0, 0);
    FAIL() << "expected blowup";
  } catch (const NumericalBlowup& e) {
    EXPECT_EQ(e.step(), 1u);
  }
}

TEST(ExactLinear, DeterministicDecay) {
  const auto model = ou(InitialLaw::dirac(1.0), 0.5, 0.0);
  const auto mu = run_terminal_measure(model, 5, exact_config(3), 0, 0);
  for (double x : mu.flat_atoms()) EXPECT_NEAR(x, std::exp(-0.5), 1e-15);
  // Deviations decay at rate a, the mean at rate a - c.
  const ParticleSystemState s{1, {0.0, 2.0}, 0.0};
  const auto next = step_exact_linear(s, model, 1.0, RngStream(0, 0, 0, 0), 0);
  EXPECT_NEAR(next.positions[0], std::exp(-0.5) - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(next.positions[1], std::exp(-0.5) + std::exp(-1.0), 1e-15);
}

TEST(ExactLinear, RequiresLinearModel) {
  const auto toy = builtin_model("measure_diffusion_toy", {});
  EXPECT_THROW(exact_config(0).validate(toy), InvalidArgument);
  const ParticleSystemState s{1, {0.0}, 0.0};
  EXPECT_THROW(step_exact_linear(s, toy, 0.1, RngStream(0, 0, 0, 0), 0), InvalidArgument);
}

std::vector<double> terminal_means(const McKVModel& model, std::size_t n, std::size_t reps,
                                   const SimConfig& cfg) {
  return replicate_functional(model, F::linear(ScalarFunction::power(1)), n, reps, cfg);
}

TEST(ExactLinear, SampleMeanMatchesParticleLaw) {
  const auto model = ou();
  const std::size_t n = 16, reps = 10000;
  const auto s = summarize(terminal_means(model, n, reps, exact_config(2024)));
  const double mean = std::exp(-0.5);
  const double var = 0.16 * phi(1.0, 1.0) / n;
  EXPECT_NEAR(s.mean, mean, 4 * std::sqrt(var / reps));
  EXPECT_NEAR(s.variance, var, 5 * var * std::sqrt(2.0 / (reps - 1)));
}

TEST(ExactLinear, TwoHalfStepsMatchOneStepInDistribution) {
  const auto model = ou(InitialLaw(DiscreteLaw::bernoulli(0.5)));
  const std::size_t n = 8, reps = 20000;
  const auto one = summarize(terminal_means(model, n, reps, exact_config(11, 1)));
  const auto two = summarize(terminal_means(model, n, reps, exact_config(11, 2)));
  EXPECT_NEAR(one.mean, two.mean, 4 * std::hypot(one.stderr_of_mean, two.stderr_of_mean));
  const double var_se = std::max(one.variance, two.variance) * std::sqrt(2.0 / (reps - 1));
  EXPECT_NEAR(one.variance, two.variance, 5 * std::sqrt(2.0) * var_se);
}

TEST(ExactLinear, NoInteractionGivesOuVariance) {
  const auto model = ou(InitialLaw::dirac(1.0), 0.0, 0.4);
  const std::size_t n = 4000;
  const auto mu = run_terminal_measure(model, n, exact_config(5), 0, 0);
  std::vector<double> x(mu.flat_atoms().begin(), mu.flat_atoms().end());
  const auto s = summarize(x);
  const double v = model.reference->variance(1.0);
  EXPECT_NEAR(s.variance, v, 5 * v * std::sqrt(2.0 / (n - 1)));
}

TEST(RunTerminal, FrozenReproducesInitialDraw) {
  const auto model = frozen(InitialLaw(DiscreteLaw::bernoulli(0.5)));
  SimConfig cfg;
  cfg.master_seed = 77;
  const auto a = run_terminal_measure(model, 4, cfg, 0, 3);
  const auto b = run_terminal_measure(model, 4, cfg, 0, 3);
  EXPECT_TRUE(a.identical(b));
  const RngStream rng(77, 0, 0, 3);
  const auto init = initial_state(model, 4, rng);
  EXPECT_TRUE(a.identical(init.measure()));
}

TEST(RunTerminal, OuSampleMeanInCltBand) {
  const auto model = ou(InitialLaw(DiscreteLaw::bernoulli(0.5)));
  const std::size_t n = 256;
  const auto mu = run_terminal_measure(model, n, exact_config(9), 0, 0);
  const double sd = std::sqrt(model.reference->variance(1.0) / n);
  EXPECT_NEAR(mean(mu), model.reference->mean(1.0), 4 * sd);
}

TEST(RunTerminal, DifferentReplicationsDiffer) {
  const auto model = ou();
  const auto cfg = exact_config(1);
  EXPECT_FALSE(run_terminal_measure(model, 16, cfg, 0, 0)
                   .identical(run_terminal_measure(model, 16, cfg, 0, 1)));
  EXPECT_FALSE(run_terminal_measure(model, 16, cfg, 0, 0)
                   .identical(run_terminal_measure(model, 16, cfg, 1, 0)));
}

TEST(PhiEstimate, FrozenMeanIsExact) {
  const auto e = phi_estimate(frozen(), F::linear(ScalarFunction::power(1)), 10, 50, SimConfig{});
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.standard_error, 0.0);
  EXPECT_THROW(phi_estimate(frozen(), F::linear(ScalarFunction::power(1)), 10, 1, SimConfig{}),
               InvalidArgument);
}

TEST(PhiEstimate, FrozenSquareOfMeanMatchesEnumeration) {
  SimConfig cfg;
  cfg.master_seed = 12;
  const auto e = phi_estimate(frozen(InitialLaw(DiscreteLaw::bernoulli(0.5))),
                              F::moment_cylinder(ScalarFunction::power(2)), 2, 100000, cfg);
  EXPECT_NEAR(e.mean, 0.375, 3 * e.standard_error);
}

TEST(PhiEstimate, OuMeanIsUnbiased) {
  const auto model = ou(InitialLaw(DiscreteLaw::bernoulli(0.5)));
  const auto e = phi_estimate(model, F::linear(ScalarFunction::power(1)), 8, 20000,
                              exact_config(31));
  EXPECT_NEAR(e.mean, model.reference->mean(1.0), 3 * e.standard_error);
}

TEST(Determinism, ThreadCountDoesNotChangeBits) {
  const auto model = builtin_model("bounded_kuramoto", {});
  const auto u = F::moment_cylinder(ScalarFunction::sine());
  SimConfig cfg;
  cfg.step_count = 10;
  cfg.master_seed = 99;
  cfg.threads = 1;
  const auto a = phi_estimate(model, u, 12, 300, cfg);
  cfg.threads = 4;
  const auto b = phi_estimate(model, u, 12, 300, cfg);
  EXPECT_EQ(std::memcmp(&a.mean, &b.mean, sizeof(double)), 0);
  EXPECT_EQ(std::memcmp(&a.standard_error, &b.standard_error, sizeof(double)), 0);
}

TEST(Exchangeability, PermutedParticlesAndKeysGiveSameFunctional) {
  const auto u = F::product(ScalarFunction::power(2), ScalarFunction::cosine());
  const std::size_t n = 7;
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 3, perm.end());
  for (const auto& [model, scheme] :
       {std::pair{ou(InitialLaw(GaussianLaw{0.2, 1.0, 1})), Scheme::exact_linear},
        std::pair{builtin_model("bounded_kuramoto", {}), Scheme::euler_maruyama},
        std::pair{builtin_model("measure_diffusion_toy", {}), Scheme::euler_maruyama}}) {
    SimConfig cfg;
    cfg.scheme = scheme;
    cfg.step_count = 5;
    const RngStream rng(3, 0, 0, 0);
    const auto base = initial_state(model, n, rng);
    ParticleSystemState permuted = base;
    for (std::size_t i = 0; i < n; ++i) permuted.positions[i] = base.positions[perm[i]];
    const auto a = propagate(base, model, cfg, rng);
    const auto b = propagate(permuted, model, cfg, rng, perm);
    EXPECT_EQ(u.eval(a.measure()), u.eval(b.measure())) << model.name;
  }
}

TEST(Euler, DtRefinementOrder) {
  const auto model = ou(InitialLaw(DiscreteLaw::bernoulli(0.5)), 0.5, 0.0);
  const auto u = F::moment_cylinder(ScalarFunction::power(2));
  std::vector<double> est;
  for (std::size_t steps : {8u, 16u, 32u}) {
    SimConfig cfg;
    cfg.step_count = steps;
    cfg.master_seed = 4;
    est.push_back(phi_estimate(model, u, 16, 200, cfg).mean);
  }
  const double order = std::log2(std::abs(est[0] - est[1]) / std::abs(est[1] - est[2]));
  EXPECT_GE(order, 0.8);
}

}  // namespace
}  // namespace chaoscale
