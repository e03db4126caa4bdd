#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chaoscale/functional.hpp"
#include "chaoscale/measure.hpp"
#include "chaoscale/model.hpp"
#include "chaoscale/rng.hpp"

namespace chaoscale {

enum class Scheme { euler_maruyama, exact_linear };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

struct SimConfig {
  std::size_t step_count = 1;
  Scheme scheme = Scheme::euler_maruyama;
  std::uint64_t master_seed = 0;
  std::size_t replications = 1000;
  unsigned threads = 0;  // 0: CHAOSCALE_THREADS or hardware concurrency

  void validate(const McKVModel& model) const;
};

struct ParticleSystemState {
  std::size_t dim = 1;
  std::vector<double> positions;  // N x dim, row-major
  double time = 0.0;

  std::size_t size() const noexcept { return dim == 0 ? 0 : positions.size() / dim; }
  EmpiricalMeasure measure() const { return EmpiricalMeasure::uniform(dim, positions); }
};

// particle_keys[i] is the noise key used by particle i; empty means identity.
using ParticleKeys = std::span<const std::uint32_t>;

/// n i.i.d. draws from `law`, drawn at the reserved initial-condition step.
ParticleSystemState draw_iid(const InitialLaw& law, std::size_t n, const RngStream& rng,
                             ParticleKeys keys = {});

/// N i.i.d. draws from the model's initial law.
ParticleSystemState initial_state(const McKVModel& model, std::size_t n, const RngStream& rng,
                                  ParticleKeys keys = {});

/// One Euler-Maruyama step. Every particle sees the same pre-step empirical
/// measure. Throws NumericalBlowup naming step_index on non-finite output.
ParticleSystemState step(const ParticleSystemState& state, const McKVModel& model, double dt,
                         const RngStream& rng, std::uint32_t step_index, ParticleKeys keys = {});

/// Exact Gaussian transition of the linear mean-field particle system over dt.
/// The empirical mean and the deviations from it evolve as independent OU
/// processes with rates a - c and a.
ParticleSystemState step_exact_linear(const ParticleSystemState& state, const McKVModel& model,
                                      double dt, const RngStream& rng, std::uint32_t step_index,
                                      ParticleKeys keys = {});

/// Runs config.step_count steps of the configured scheme from `state` to T.
ParticleSystemState propagate(ParticleSystemState state, const McKVModel& model,
                              const SimConfig& config, const RngStream& rng,
                              ParticleKeys keys = {});

/// Terminal empirical measure of an N-particle system; a deterministic
/// function of (model, N, config.master_seed, ensemble, level, replication).
EmpiricalMeasure run_terminal_measure(const McKVModel& model, std::size_t n,
                                      const SimConfig& config, std::uint32_t ensemble,
                                      std::uint32_t replication, std::uint32_t level = 0);

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t reps = 0;
};

/// U(mu_N) for replications [0, reps), in replication order.
std::vector<double> replicate_functional(const McKVModel& model,
                                         const FunctionalWithDerivatives& u, std::size_t n,
                                         std::size_t reps, const SimConfig& config,
                                         std::uint32_t ensemble = 0, std::uint32_t level = 0);

/// Monte Carlo estimate of E[U(mu_N_T)] with its standard error.
Estimate phi_estimate(const McKVModel& model, const FunctionalWithDerivatives& u, std::size_t n,
                      std::size_t reps, const SimConfig& config);

}  // namespace chaoscale
