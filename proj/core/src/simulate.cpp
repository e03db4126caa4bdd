#include "chaoscale/simulate.hpp"

#include <cmath>
#include <numeric>

#include "chaoscale/errors.hpp"
#include "chaoscale/parallel.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

inline std::uint32_t key_of(ParticleKeys keys, std::size_t i) {
  return keys.empty() ? static_cast<std::uint32_t>(i) : keys[i];
}

void check_keys(ParticleKeys keys, std::size_t n) {
  if (!keys.empty() && keys.size() != n) {
    throw InvalidArgument("particle key count does not match particle count");
  }
}

void check_finite(const ParticleSystemState& s, std::size_t step_index) {
  for (double x : s.positions) {
    if (!std::isfinite(x)) throw NumericalBlowup(step_index);
  }
}

double relaxation(double rate, double t) {
  if (rate == 0.0) return t;
  return -std::expm1(-rate * t) / rate;
}

}  // namespace

std::string to_string(Scheme scheme) {
  return scheme == Scheme::exact_linear ? "exact_linear" : "euler_maruyama";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "euler_maruyama" || text == "euler") return Scheme::euler_maruyama;
  if (text == "exact_linear" || text == "exact") return Scheme::exact_linear;
  throw InvalidArgument("unknown scheme '" + text + "' (expected euler_maruyama or exact_linear)");
}

void SimConfig::validate(const McKVModel& model) const {
  if (step_count == 0) throw InvalidArgument("step_count must be >= 1");
  if (step_count > 0xFFFFFFFEull) throw InvalidArgument("step_count too large");
  if (scheme == Scheme::exact_linear && !model.linear) {
    throw InvalidArgument("exact_linear scheme requires a linear mean-field model, got '" +
                          model.name + "'");
  }
}

ParticleSystemState draw_iid(const InitialLaw& law, std::size_t n, const RngStream& rng,
                             ParticleKeys keys) {
  if (n == 0) throw InvalidArgument("particle count must be >= 1");
  check_keys(keys, n);
  ParticleSystemState s;
  s.dim = law.dim();
  s.positions.resize(n * s.dim);
  if (const auto* discrete = law.discrete()) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto atom = discrete->atom(
          discrete->index_for(rng.uniform(key_of(keys, i), RngStream::kInitialStep)));
      std::copy(atom.begin(), atom.end(), s.positions.begin() + static_cast<long>(i * s.dim));
    }
  } else {
    const auto& g = *law.gaussian();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < s.dim; ++c) {
        s.positions[i * s.dim + c] =
            g.mean + g.stddev * rng.normal(key_of(keys, i), RngStream::kInitialStep,
                                           static_cast<std::uint32_t>(c));
      }
    }
  }
  return s;
}

ParticleSystemState initial_state(const McKVModel& model, std::size_t n, const RngStream& rng,
                                  ParticleKeys keys) {
  return draw_iid(model.initial, n, rng, keys);
}

ParticleSystemState step(const ParticleSystemState& state, const McKVModel& model, double dt,
                         const RngStream& rng, std::uint32_t step_index, ParticleKeys keys) {
  if (!(dt > 0.0)) throw InvalidArgument("step: dt must be positive");
  const std::size_t n = state.size();
  check_keys(keys, n);
  const std::size_t d = state.dim;
  const MeasureSnapshot frozen(d, state.positions);
  const double sqrt_dt = std::sqrt(dt);
  const bool noisy = !model.diffusion.is_zero();

  ParticleSystemState next{d, state.positions, state.time + dt};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const double x = state.positions[i * d + c];
      double dx = model.drift(x, c, frozen) * dt;
      if (noisy) {
        dx += model.diffusion(x, c, frozen) * sqrt_dt *
              rng.normal(key_of(keys, i), step_index, static_cast<std::uint32_t>(c));
      }
      next.positions[i * d + c] = x + dx;
    }
  }
  check_finite(next, step_index);
  return next;
}

ParticleSystemState step_exact_linear(const ParticleSystemState& state, const McKVModel& model,
                                      double dt, const RngStream& rng, std::uint32_t step_index,
                                      ParticleKeys keys) {
  if (!model.linear) throw InvalidArgument("step_exact_linear: model is not linear");
  if (!(dt > 0.0)) throw InvalidArgument("step_exact_linear: dt must be positive");
  const auto& p = *model.linear;
  const std::size_t n = state.size();
  check_keys(keys, n);
  const std::size_t d = state.dim;
  const MeasureSnapshot frozen(d, state.positions);

  const double mean_decay = std::exp(-(p.a - p.c) * dt);
  const double mean_sd = p.sigma * std::sqrt(relaxation(2.0 * (p.a - p.c), dt));
  const double dev_decay = std::exp(-p.a * dt);
  const double dev_sd = p.sigma * std::sqrt(relaxation(2.0 * p.a, dt));

  ParticleSystemState next{d, std::vector<double>(state.positions.size()), state.time + dt};
  std::vector<double> z(n);
  for (std::size_t c = 0; c < d; ++c) {
    if (p.sigma != 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = rng.normal(key_of(keys, i), step_index, static_cast<std::uint32_t>(c));
      }
    }
    const double z_bar = p.sigma != 0.0 ? symmetric_sum(z) / static_cast<double>(n) : 0.0;
    const double old_mean = frozen.mean(c);
    const double new_mean = mean_decay * old_mean + mean_sd * z_bar;
    for (std::size_t i = 0; i < n; ++i) {
      const double deviation = state.positions[i * d + c] - old_mean;
      const double noise = p.sigma != 0.0 ? dev_sd * (z[i] - z_bar) : 0.0;
      next.positions[i * d + c] = new_mean + dev_decay * deviation + noise;
    }
  }
  check_finite(next, step_index);
  return next;
}

ParticleSystemState propagate(ParticleSystemState state, const McKVModel& model,
                              const SimConfig& config, const RngStream& rng, ParticleKeys keys) {
  config.validate(model);
  const double dt = model.horizon / static_cast<double>(config.step_count);
  for (std::size_t k = 0; k < config.step_count; ++k) {
    const auto idx = static_cast<std::uint32_t>(k);
    state = config.scheme == Scheme::exact_linear
                ? step_exact_linear(state, model, dt, rng, idx, keys)
                : step(state, model, dt, rng, idx, keys);
  }
  state.time = model.horizon;
  return state;
}

EmpiricalMeasure run_terminal_measure(const McKVModel& model, std::size_t n,
                                      const SimConfig& config, std::uint32_t ensemble,
                                      std::uint32_t replication, std::uint32_t level) {
  const RngStream rng(config.master_seed, ensemble, level, replication);
  return propagate(initial_state(model, n, rng), model, config, rng).measure();
}

std::vector<double> replicate_functional(const McKVModel& model,
                                         const FunctionalWithDerivatives& u, std::size_t n,
                                         std::size_t reps, const SimConfig& config,
                                         std::uint32_t ensemble, std::uint32_t level) {
  config.validate(model);
  if (reps > 0xFFFFFFFFull) throw InvalidArgument("replication count exceeds 2^32");
  std::vector<double> values(reps);
  parallel_for(reps, resolve_threads(config.threads), [&](std::size_t r) {
    values[r] = u.eval(run_terminal_measure(model, n, config, ensemble,
                                            static_cast<std::uint32_t>(r), level));
  });
  return values;
}

Estimate phi_estimate(const McKVModel& model, const FunctionalWithDerivatives& u, std::size_t n,
                      std::size_t reps, const SimConfig& config) {
  if (reps < 2) throw InvalidArgument("phi_estimate: reps must be >= 2");
  const auto values = replicate_functional(model, u, n, reps, config);
  const auto s = summarize(values);
  return {s.mean, s.stderr_of_mean, reps};
}

}  // namespace chaoscale
