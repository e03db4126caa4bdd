#include "chaoscale/expansion.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "chaoscale/errors.hpp"
#include "chaoscale/parallel.hpp"
#include "chaoscale/rng.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

// Stream tags keeping static-bias draws apart from particle-system draws.
constexpr std::uint32_t kStaticBiasStream = 0x5B1A5000u;
constexpr std::uint32_t kStaticConstantStream = 0x5C0E5000u;

constexpr double kMaxCondition = 1e12;

double factorial(unsigned n) {
  double r = 1.0;
  for (unsigned i = 2; i <= n; ++i) r *= i;
  return r;
}

void check_n_list(std::span<const std::size_t> n_list) {
  if (n_list.empty()) throw InvalidArgument("N list must be nonempty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] == 0) throw InvalidArgument("N values must be positive");
    if (i > 0 && n_list[i] <= n_list[i - 1]) {
      throw InvalidArgument("N values must be strictly increasing");
    }
  }
}

StaticConstant summarize_constant(unsigned order, const std::vector<double>& values,
                                  std::string estimator) {
  const auto s = summarize(values);
  return {order, s.mean, s.stderr_of_mean, values.size(), std::move(estimator)};
}

}  // namespace

std::string to_string(GridSource source) {
  switch (source) {
    case GridSource::static_enumeration: return "static-enumeration";
    case GridSource::static_mc: return "static-mc";
    case GridSource::dynamic_mc: return "dynamic-mc";
  }
  return "?";
}

GridSource parse_grid_source(const std::string& text) {
  if (text == "static-enumeration") return GridSource::static_enumeration;
  if (text == "static-mc") return GridSource::static_mc;
  if (text == "dynamic-mc") return GridSource::dynamic_mc;
  throw InvalidArgument("unknown grid source '" + text + "'");
}

void BiasGrid::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (p.n == 0) throw InvalidArgument("BiasGrid: N must be positive");
    if (i > 0 && p.n <= points[i - 1].n) {
      throw InvalidArgument("BiasGrid: N values must be strictly increasing");
    }
    if (!(p.standard_error >= 0.0)) throw InvalidArgument("BiasGrid: stderr must be >= 0");
    if (source == GridSource::static_enumeration && p.standard_error != 0.0) {
      throw InvalidArgument("BiasGrid: enumeration entries must have zero stderr");
    }
    if (!std::isfinite(p.bias)) throw InvalidArgument("BiasGrid: bias must be finite");
  }
}

double ExpansionFit::predict(double n) const {
  double acc = 0.0;
  double inv = 1.0;
  for (double c : coefficients) {
    inv /= n;
    acc += c * inv;
  }
  return acc;
}

double static_bias_exact(const FunctionalWithDerivatives& u, const DiscreteLaw& law,
                         unsigned n) {
  std::vector<double> terms;
  enumerate_empirical(law, n).for_each(
      [&](const Outcome& o) { terms.push_back(o.probability * u.eval(o.measure)); });
  terms.push_back(-u.eval(law.as_measure()));
  return compensated_sum(terms);
}

BiasGrid static_bias_exact_grid(const FunctionalWithDerivatives& u, const DiscreteLaw& law,
                                std::span<const std::size_t> n_list) {
  check_n_list(n_list);
  BiasGrid grid;
  grid.source = GridSource::static_enumeration;
  grid.reference = u.eval(law.as_measure());
  for (std::size_t n : n_list) {
    grid.points.push_back({n, static_bias_exact(u, law, static_cast<unsigned>(n)), 0.0, 0});
  }
  return grid;
}

BiasEstimate static_bias_mc(const FunctionalWithDerivatives& u, const InitialLaw& law,
                            std::size_t n, std::size_t reps, std::uint64_t seed,
                            unsigned threads) {
  if (reps < 2) throw InvalidArgument("static_bias_mc: reps must be >= 2");
  const double reference = reference_value(u, law);
  std::vector<double> values(reps);
  parallel_for(reps, resolve_threads(threads), [&](std::size_t r) {
    const RngStream rng(seed, kStaticBiasStream, static_cast<std::uint32_t>(n),
                        static_cast<std::uint32_t>(r));
    values[r] = u.eval(draw_iid(law, n, rng).measure());
  });
  const auto s = summarize(values);
  return {s.mean - reference, s.stderr_of_mean, reps};
}

BiasGrid static_bias_mc_grid(const FunctionalWithDerivatives& u, const InitialLaw& law,
                             std::span<const std::size_t> n_list, std::size_t reps,
                             std::uint64_t seed, unsigned threads) {
  check_n_list(n_list);
  BiasGrid grid;
  grid.source = GridSource::static_mc;
  grid.reference = reference_value(u, law);
  for (std::size_t n : n_list) {
    const auto e = static_bias_mc(u, law, n, reps, seed, threads);
    grid.points.push_back({n, e.bias, e.standard_error, e.reps});
  }
  return grid;
}

StaticConstant static_constant_cp(const FunctionalWithDerivatives& u, const InitialLaw& law,
                                  unsigned order, std::size_t samples, std::uint64_t seed,
                                  unsigned threads) {
  if (order == 0) throw InvalidArgument("static_constant_cp: order must be >= 1");
  if (order > u.max_order()) {
    throw DerivativeUnavailable("static_constant_cp: order " + std::to_string(order) +
                                " exceeds max order of " + u.name());
  }
  if (order > 16) throw InvalidArgument("static_constant_cp: order must be <= 16");
  if (samples < 2) throw InvalidArgument("static_constant_cp: need at least 2 samples");
  const auto mu = law.quadrature_measure();
  const std::size_t d = law.dim();
  const double scale = 1.0 / factorial(order);
  const std::uint32_t subsets = 1u << order;

  std::vector<double> values(samples);
  parallel_for(samples, resolve_threads(threads), [&](std::size_t s) {
    const RngStream rng(seed, kStaticConstantStream, order, static_cast<std::uint32_t>(s));
    // draws[0] = xi, draws[k] = xi_hat^k
    const auto draws = draw_iid(law, order + 1, rng);
    std::vector<double> y(order * d);
    std::vector<double> terms(subsets);
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      int in_s = 0;
      for (unsigned k = 0; k < order; ++k) {
        const bool use_xi = (mask >> k) & 1u;
        in_s += use_xi;
        const std::size_t src = use_xi ? 0 : k + 1;
        for (std::size_t c = 0; c < d; ++c) y[k * d + c] = draws.positions[src * d + c];
      }
      const double sign = ((order - in_s) % 2 == 0) ? 1.0 : -1.0;
      terms[mask] = sign * u.lfd(order, mu, y);
    }
    values[s] = scale * compensated_sum(terms);
  });
  return summarize_constant(order, values, "inclusion-exclusion MC");
}

StaticConstant first_order_bias_constant(const FunctionalWithDerivatives& u,
                                         const InitialLaw& law, std::size_t samples,
                                         std::uint64_t seed, unsigned threads) {
  if (u.max_order() < 2) {
    throw DerivativeUnavailable("first_order_bias_constant: second derivative unavailable");
  }
  if (samples < 2) throw InvalidArgument("first_order_bias_constant: need at least 2 samples");
  const auto mu = law.quadrature_measure();
  const std::size_t d = law.dim();
  std::vector<double> values(samples);
  parallel_for(samples, resolve_threads(threads), [&](std::size_t s) {
    const RngStream rng(seed, kStaticConstantStream, 0x100u, static_cast<std::uint32_t>(s));
    const auto draws = draw_iid(law, 2, rng);  // [xi~, xi]
    std::vector<double> diag(2 * d), cross(2 * d);
    for (std::size_t c = 0; c < d; ++c) {
      diag[c] = diag[d + c] = draws.positions[c];
      cross[c] = draws.positions[c];
      cross[d + c] = draws.positions[d + c];
    }
    values[s] = 0.5 * (u.lfd(2, mu, diag) - u.lfd(2, mu, cross));
  });
  return summarize_constant(2, values, "first-order MC");
}

BiasGrid dynamic_bias_grid(const McKVModel& model, const FunctionalWithDerivatives& u,
                           std::span<const std::size_t> n_list, std::size_t reps,
                           const SimConfig& config) {
  check_n_list(n_list);
  BiasGrid grid;
  grid.source = GridSource::dynamic_mc;
  grid.reference = limit_functional_value(model, u);
  double smallest = std::numeric_limits<double>::infinity();
  Estimate at_largest;
  for (std::size_t n : n_list) {
    const auto e = phi_estimate(model, u, n, reps, config);
    grid.points.push_back({n, e.mean - grid.reference, e.standard_error, reps});
    smallest = std::min(smallest, std::abs(e.mean - grid.reference));
    at_largest = e;
  }
  if (config.scheme == Scheme::euler_maruyama) {
    SimConfig fine = config;
    fine.step_count = 2 * config.step_count;
    const auto e_fine = phi_estimate(model, u, n_list.back(), reps, fine);
    grid.dt_guard.checked = true;
    // bias(dt) ~ c dt, so bias(dt) ~ 2 (phi(dt) - phi(dt/2)).
    grid.dt_guard.dt_bias_estimate = 2.0 * (at_largest.mean - e_fine.mean);
    grid.dt_guard.threshold = 0.1 * smallest;
    grid.dt_guard.passed = std::abs(grid.dt_guard.dt_bias_estimate) < grid.dt_guard.threshold;
  }
  return grid;
}

ExpansionFit fit_expansion(const BiasGrid& grid, unsigned k) {
  grid.validate();
  if (k < 2) throw InvalidArgument("fit_expansion: k must be >= 2");
  const std::size_t terms = k - 1;
  const std::size_t rows = grid.points.size();
  if (rows < k + 1) {
    throw UnderdeterminedFit("fit_expansion: " + std::to_string(rows) + " grid points for k=" +
                             std::to_string(k) + " (need at least " + std::to_string(k + 1) + ")");
  }
  const bool unit = grid.source == GridSource::static_enumeration;

  ExpansionFit fit;
  fit.k = k;
  fit.weights.resize(rows);
  Eigen::MatrixXd a(rows, terms);
  Eigen::VectorXd b(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& p = grid.points[i];
    double w = 1.0;
    if (!unit) {
      if (!(p.standard_error > 0.0)) {
        throw InvalidArgument("fit_expansion: Monte Carlo grid points need stderr > 0");
      }
      w = 1.0 / (p.standard_error * p.standard_error);
    }
    fit.weights[i] = w;
    const double sw = std::sqrt(w);
    const double inv = 1.0 / static_cast<double>(p.n);
    double pw = 1.0;
    for (std::size_t j = 0; j < terms; ++j) {
      pw *= inv;
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sw * pw;
    }
    b(static_cast<Eigen::Index>(i)) = sw * p.bias;
  }

  // Column equilibration so the condition test reflects clustering of N,
  // not the scale of N^{-j}.
  Eigen::VectorXd col_scale = a.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < col_scale.size(); ++j) {
    if (col_scale(j) == 0.0) throw SingularFit("fit_expansion: zero regressor column");
    a.col(j) /= col_scale(j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) == 0.0 || sv(0) / sv(sv.size() - 1) > kMaxCondition) {
    throw SingularFit("fit_expansion: normal equations are singular (N values too clustered)");
  }
  const Eigen::VectorXd scaled = svd.solve(b);
  const Eigen::VectorXd coeff = scaled.cwiseQuotient(col_scale);

  // Covariance of the scaled solution: V diag(1/s^2) V^T.
  const Eigen::MatrixXd v = svd.matrixV();
  const Eigen::VectorXd inv_s2 = sv.cwiseProduct(sv).cwiseInverse();
  const Eigen::MatrixXd cov_scaled = v * inv_s2.asDiagonal() * v.transpose();

  fit.residuals.resize(rows);
  std::vector<double> weighted_sq(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double n = static_cast<double>(grid.points[i].n);
    double pred = 0.0, inv = 1.0;
    for (std::size_t j = 0; j < terms; ++j) {
      inv /= n;
      pred += coeff(static_cast<Eigen::Index>(j)) * inv;
    }
    fit.residuals[i] = grid.points[i].bias - pred;
    weighted_sq[i] = fit.weights[i] * fit.residuals[i] * fit.residuals[i];
  }
  const double rss = compensated_sum(weighted_sq);
  fit.residual_norm = std::sqrt(rss);

  // Unit-weight grids carry no sampling error, so scale by the residual variance.
  const double sigma2 =
      unit ? (rows > terms ? rss / static_cast<double>(rows - terms) : 0.0) : 1.0;
  for (std::size_t j = 0; j < terms; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    fit.coefficients.push_back(coeff(jj));
    fit.standard_errors.push_back(std::sqrt(sigma2 * cov_scaled(jj, jj)) / col_scale(jj));
  }

  std::vector<double> ns, biases;
  for (const auto& p : grid.points) {
    ns.push_back(static_cast<double>(p.n));
    biases.push_back(p.bias);
  }
  try {
    fit.slope = loglog_slope(ns, biases);
  } catch (const InvalidArgument&) {
    fit.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

}  // namespace chaoscale
