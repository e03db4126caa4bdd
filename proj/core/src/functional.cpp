#include "chaoscale/functional.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include "chaoscale/errors.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

double falling_factorial(unsigned n, unsigned k) {
  double r = 1.0;
  for (unsigned i = 0; i < k; ++i) r *= static_cast<double>(n - i);
  return r;
}

double factorial(unsigned n) { return falling_factorial(n, n); }

void check_points(const FunctionalWithDerivatives& u, unsigned order, const EmpiricalMeasure& m,
                  std::span<const double> points) {
  if (order == 0) throw InvalidArgument("lfd: order must be >= 1");
  if (order > u.max_order()) {
    throw DerivativeUnavailable("lfd: order " + std::to_string(order) + " exceeds max order " +
                                std::to_string(u.max_order()) + " of " + u.name());
  }
  if (m.dim() != u.dim()) throw InvalidArgument("lfd: measure dimension mismatch");
  if (points.size() != order * u.dim()) throw InvalidArgument("lfd: expected one point per order");
}

}  // namespace

ScalarFunction ScalarFunction::power(unsigned exponent) { return {Kind::power, exponent}; }
ScalarFunction ScalarFunction::sine() { return {Kind::sine, 0}; }
ScalarFunction ScalarFunction::cosine() { return {Kind::cosine, 0}; }
ScalarFunction ScalarFunction::exponential() { return {Kind::exponential, 0}; }

ScalarFunction ScalarFunction::parse(const std::string& text) {
  if (text == "x") return power(1);
  if (text == "sin") return sine();
  if (text == "cos") return cosine();
  if (text == "exp") return exponential();
  for (const char* prefix : {"pow:", "x^"}) {
    const std::string p(prefix);
    if (text.rfind(p, 0) == 0) {
      try {
        std::size_t used = 0;
        const int n = std::stoi(text.substr(p.size()), &used);
        if (used == text.size() - p.size() && n >= 0 && n <= 16) {
          return power(static_cast<unsigned>(n));
        }
      } catch (const std::exception&) {
      }
    }
  }
  throw InvalidArgument("unknown scalar function '" + text +
                        "' (expected pow:N, x^N, x, sin, cos or exp)");
}

double ScalarFunction::derivative(unsigned order, double x) const {
  switch (kind_) {
    case Kind::power: {
      if (order > exponent_) return 0.0;
      double r = falling_factorial(exponent_, order);
      for (unsigned i = order; i < exponent_; ++i) r *= x;
      return r;
    }
    case Kind::sine:
      switch (order % 4) {
        case 0: return std::sin(x);
        case 1: return std::cos(x);
        case 2: return -std::sin(x);
        default: return -std::cos(x);
      }
    case Kind::cosine:
      switch (order % 4) {
        case 0: return std::cos(x);
        case 1: return -std::sin(x);
        case 2: return -std::cos(x);
        default: return std::sin(x);
      }
    case Kind::exponential:
      return std::exp(x);
  }
  return 0.0;
}

std::optional<double> ScalarFunction::derivative_sup(unsigned order) const {
  switch (kind_) {
    case Kind::power:
      if (order > exponent_) return 0.0;
      if (order == exponent_) return factorial(exponent_);
      return std::nullopt;
    case Kind::sine:
    case Kind::cosine:
      return 1.0;
    case Kind::exponential:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string ScalarFunction::name() const {
  switch (kind_) {
    case Kind::power: return "pow:" + std::to_string(exponent_);
    case Kind::sine: return "sin";
    case Kind::cosine: return "cos";
    case Kind::exponential: return "exp";
  }
  return "?";
}

std::string to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::linear: return "linear";
    case FamilyTag::moment_cylinder: return "cylinder";
    case FamilyTag::product: return "product";
    case FamilyTag::custom: return "custom";
  }
  return "?";
}

FunctionalWithDerivatives FunctionalWithDerivatives::linear(ScalarFunction f, std::size_t dim) {
  FunctionalWithDerivatives u;
  u.name_ = "linear(" + f.name() + ")";
  u.family_ = FamilyTag::linear;
  u.dim_ = dim;
  u.max_order_ = kUnboundedOrder;
  u.parts_ = {f};
  u.eval_ = [f](const EmpiricalMeasure& mu) {
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * f(mu.coordinate(i, 0));
    return symmetric_sum(terms);
  };
  u.lfd_ = [f](unsigned order, const EmpiricalMeasure&, std::span<const double> y) {
    if (order > 1) return 0.0;
    return f(y[0]) - f(0.0);
  };
  return u;
}

FunctionalWithDerivatives FunctionalWithDerivatives::moment_cylinder(ScalarFunction b,
                                                                     std::size_t dim) {
  FunctionalWithDerivatives u;
  u.name_ = "cylinder(" + b.name() + ")";
  u.family_ = FamilyTag::moment_cylinder;
  u.dim_ = dim;
  u.max_order_ = kUnboundedOrder;
  u.parts_ = {b};
  u.eval_ = [b](const EmpiricalMeasure& mu) { return b(mean(mu, 0)); };
  u.lfd_ = [b, dim](unsigned order, const EmpiricalMeasure& m, std::span<const double> y) {
    // Multiply in sorted order so the value is exactly symmetric in the points.
    std::vector<double> first(order);
    for (unsigned j = 0; j < order; ++j) first[j] = y[j * dim];
    std::sort(first.begin(), first.end());
    double prod = 1.0;
    for (double v : first) prod *= v;
    return prod * b.derivative(order, mean(m, 0));
  };
  return u;
}

FunctionalWithDerivatives FunctionalWithDerivatives::product(ScalarFunction f, ScalarFunction g,
                                                             std::size_t dim) {
  FunctionalWithDerivatives u;
  u.name_ = "product(" + f.name() + "," + g.name() + ")";
  u.family_ = FamilyTag::product;
  u.dim_ = dim;
  u.max_order_ = kUnboundedOrder;
  u.parts_ = {f, g};
  auto integral = [](const ScalarFunction& h, const EmpiricalMeasure& mu) {
    std::vector<double> terms(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) terms[i] = mu.weight(i) * h(mu.coordinate(i, 0));
    return symmetric_sum(terms);
  };
  u.eval_ = [f, g, integral](const EmpiricalMeasure& mu) {
    return integral(f, mu) * integral(g, mu);
  };
  u.lfd_ = [f, g, dim, integral](unsigned order, const EmpiricalMeasure& m,
                                 std::span<const double> y) {
    auto ft = [&](double x) { return f(x) - f(0.0); };
    auto gt = [&](double x) { return g(x) - g(0.0); };
    if (order == 1) return ft(y[0]) * integral(g, m) + integral(f, m) * gt(y[0]);
    if (order == 2) return ft(y[0]) * gt(y[dim]) + ft(y[dim]) * gt(y[0]);
    return 0.0;
  };
  return u;
}

FunctionalWithDerivatives FunctionalWithDerivatives::custom(std::string name, std::size_t dim,
                                                            unsigned max_order, EvalFn eval,
                                                            DerivativeFn lfd,
                                                            bool declares_normalisation) {
  if (!declares_normalisation) {
    throw InvalidArgument("custom functional '" + name +
                          "' must declare derivatives vanishing at the origin");
  }
  if (!eval || !lfd) throw InvalidArgument("custom functional: eval and lfd are required");
  FunctionalWithDerivatives u;
  u.name_ = std::move(name);
  u.family_ = FamilyTag::custom;
  u.dim_ = dim;
  u.max_order_ = max_order;
  u.eval_ = std::move(eval);
  u.lfd_ = std::move(lfd);
  return u;
}

double FunctionalWithDerivatives::eval(const EmpiricalMeasure& mu) const {
  if (mu.dim() != dim_) {
    throw InvalidArgument("eval: measure dimension " + std::to_string(mu.dim()) +
                          " does not match functional dimension " + std::to_string(dim_));
  }
  return eval_(mu);
}

double FunctionalWithDerivatives::lfd(unsigned order, const EmpiricalMeasure& m,
                                      std::span<const double> points) const {
  check_points(*this, order, m, points);
  return lfd_(order, m, points);
}

double contract_signed(const FunctionalWithDerivatives& u, unsigned order,
                       const EmpiricalMeasure& base, const EmpiricalMeasure& from,
                       const EmpiricalMeasure& to, std::span<const double> fixed_points) {
  const std::size_t d = u.dim();
  if (from.dim() != d || to.dim() != d || base.dim() != d) {
    throw InvalidArgument("contract_signed: dimension mismatch");
  }
  if (fixed_points.size() % d != 0 || fixed_points.size() / d > order) {
    throw InvalidArgument("contract_signed: too many fixed points");
  }
  const unsigned free = order - static_cast<unsigned>(fixed_points.size() / d);

  // Signed atoms of (to - from).
  std::vector<double> atoms;
  std::vector<double> masses;
  for (std::size_t i = 0; i < from.size(); ++i) {
    const auto a = from.atom(i);
    atoms.insert(atoms.end(), a.begin(), a.end());
    masses.push_back(-from.weight(i));
  }
  for (std::size_t i = 0; i < to.size(); ++i) {
    const auto a = to.atom(i);
    atoms.insert(atoms.end(), a.begin(), a.end());
    masses.push_back(to.weight(i));
  }
  const std::size_t n = masses.size();
  double tuples = 1.0;
  for (unsigned j = 0; j < free; ++j) tuples *= static_cast<double>(n);
  if (tuples > 1e7) throw EnumerationTooLarge("contract_signed: tensor sum too large");

  std::vector<double> point(fixed_points.begin(), fixed_points.end());
  point.resize(order * d);
  std::vector<std::size_t> idx(free, 0);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(tuples));
  while (true) {
    double w = 1.0;
    for (unsigned j = 0; j < free; ++j) {
      w *= masses[idx[j]];
      const std::size_t slot = fixed_points.size() + j * d;
      for (std::size_t c = 0; c < d; ++c) point[slot + c] = atoms[idx[j] * d + c];
    }
    terms.push_back(w * u.lfd(order, base, point));
    unsigned j = 0;
    while (j < free && ++idx[j] == n) idx[j++] = 0;
    if (j == free) break;
  }
  return compensated_sum(terms);
}

TaylorExpansion taylor_measure_expand(const FunctionalWithDerivatives& u,
                                      const EmpiricalMeasure& m, const EmpiricalMeasure& m_prime,
                                      unsigned q) {
  if (q == 0) throw InvalidArgument("taylor_measure_expand: q must be >= 1");
  if (q > u.max_order()) {
    throw DerivativeUnavailable("taylor_measure_expand: order " + std::to_string(q) +
                                " exceeds max order " + std::to_string(u.max_order()));
  }
  TaylorExpansion out;
  for (unsigned p = 1; p < q; ++p) {
    out.terms.push_back(contract_signed(u, p, m, m, m_prime) / factorial(p));
  }
  std::vector<double> parts{u.eval(m_prime), -u.eval(m)};
  for (double t : out.terms) parts.push_back(-t);
  out.remainder = compensated_sum(parts);
  return out;
}

GrowthReport verify_polynomial_growth(const FunctionalWithDerivatives& u, unsigned order,
                                      std::size_t sample_count, double bound_constant,
                                      std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> atoms_count(1, 4);
  std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
  const std::size_t d = u.dim();

  GrowthReport report;
  std::vector<double> y(order * d);
  for (std::size_t s = 0; s < sample_count; ++s) {
    const int k = atoms_count(gen);
    std::vector<double> atoms(static_cast<std::size_t>(k) * d);
    for (double& a : atoms) a = normal(gen);
    std::vector<double> w(static_cast<std::size_t>(k));
    for (double& v : w) v = 0.05 + unit(gen);
    const double total = compensated_sum(w);
    for (double& v : w) v /= total;
    const EmpiricalMeasure m(d, std::move(atoms), std::move(w));

    double denom = 0.0;
    for (unsigned j = 0; j < order; ++j) {
      const double scale = std::exp(log_scale(gen));
      double norm2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        y[j * d + c] = scale * normal(gen);
        norm2 += y[j * d + c] * y[j * d + c];
      }
      denom += std::pow(std::sqrt(norm2), static_cast<double>(order));
    }
    if (denom == 0.0) continue;
    const double ratio = std::abs(u.lfd(order, m, y)) / denom;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    ++report.samples;
  }
  report.passed = report.worst_ratio <= bound_constant * (1.0 + 1e-12);
  return report;
}

ConsistencyCheck check_derivative_consistency(const FunctionalWithDerivatives& u,
                                              unsigned order, const EmpiricalMeasure& m,
                                              const EmpiricalMeasure& m_prime, double t,
                                              std::span<const double> fixed_points, double h) {
  if (order == 0) throw InvalidArgument("check_derivative_consistency: order must be >= 1");
  if (fixed_points.size() != (order - 1) * u.dim()) {
    throw InvalidArgument("check_derivative_consistency: need order-1 fixed points");
  }
  if (t - h < 0.0 || t + h > 1.0) {
    throw InvalidArgument("check_derivative_consistency: t +- h must stay in [0, 1]");
  }
  auto g = [&](double s) {
    const auto ms = EmpiricalMeasure::mixture(m, m_prime, s);
    return order == 1 ? u.eval(ms) : u.lfd(order - 1, ms, fixed_points);
  };
  ConsistencyCheck c;
  c.finite_difference = (g(t + h) - g(t - h)) / (2.0 * h);
  const auto mt = EmpiricalMeasure::mixture(m, m_prime, t);
  c.analytic = contract_signed(u, order, mt, m, m_prime, fixed_points);
  c.relative_error =
      std::abs(c.finite_difference - c.analytic) / std::max(1.0, std::abs(c.analytic));
  return c;
}

}  // namespace chaoscale
