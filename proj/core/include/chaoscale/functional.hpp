#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaoscale/measure.hpp"

namespace chaoscale {

// Real function of one variable with a closed-form table of derivatives.
class ScalarFunction {
 public:
  enum class Kind { power, sine, cosine, exponential };

  static ScalarFunction power(unsigned exponent);
  static ScalarFunction sine();
  static ScalarFunction cosine();
  static ScalarFunction exponential();

  // Parses "pow:N", "x", "sin", "cos", "exp".
  static ScalarFunction parse(const std::string& text);

  double operator()(double x) const { return derivative(0, x); }
  double derivative(unsigned order, double x) const;

  // sup_x |f^{(order)}(x)| when finite.
  std::optional<double> derivative_sup(unsigned order) const;

  Kind kind() const noexcept { return kind_; }
  unsigned exponent() const noexcept { return exponent_; }
  std::string name() const;

 private:
  ScalarFunction(Kind kind, unsigned exponent) : kind_(kind), exponent_(exponent) {}
  Kind kind_;
  unsigned exponent_;
};

enum class FamilyTag { linear, moment_cylinder, product, custom };

std::string to_string(FamilyTag tag);

// A measure functional U together with its linear functional derivatives
// d^pU/dm^p(m, y_1..y_p), normalised so that any derivative vanishes when one
// of its points is the origin.
//
// Point tuples are flat: y_j occupies [j*dim, (j+1)*dim). Built-in families
// act on the first coordinate only.
class FunctionalWithDerivatives {
 public:
  using EvalFn = std::function<double(const EmpiricalMeasure&)>;
  using DerivativeFn =
      std::function<double(unsigned, const EmpiricalMeasure&, std::span<const double>)>;

  static constexpr unsigned kUnboundedOrder = 16;

  // U(m) = int F dm.
  static FunctionalWithDerivatives linear(ScalarFunction f, std::size_t dim = 1);
  // U(m) = b(int x dm).
  static FunctionalWithDerivatives moment_cylinder(ScalarFunction b, std::size_t dim = 1);
  // U(m) = (int F dm)(int G dm).
  static FunctionalWithDerivatives product(ScalarFunction f, ScalarFunction g,
                                           std::size_t dim = 1);
  // User-supplied functional. Throws InvalidArgument unless the caller declares
  // that lfd follows the vanishing-at-origin normalisation.
  static FunctionalWithDerivatives custom(std::string name, std::size_t dim, unsigned max_order,
                                          EvalFn eval, DerivativeFn lfd,
                                          bool declares_normalisation);

  double eval(const EmpiricalMeasure& mu) const;
  double lfd(unsigned order, const EmpiricalMeasure& m, std::span<const double> points) const;

  unsigned max_order() const noexcept { return max_order_; }
  std::size_t dim() const noexcept { return dim_; }
  FamilyTag family() const noexcept { return family_; }
  const std::string& name() const noexcept { return name_; }

  // Family parameters (F for linear, b for cylinder, F and G for product).
  const std::vector<ScalarFunction>& parts() const noexcept { return parts_; }

 private:
  FunctionalWithDerivatives() = default;

  std::string name_;
  FamilyTag family_ = FamilyTag::custom;
  std::size_t dim_ = 1;
  unsigned max_order_ = 0;
  std::vector<ScalarFunction> parts_;
  EvalFn eval_;
  DerivativeFn lfd_;
};

struct TaylorExpansion {
  std::vector<double> terms;  // terms[p-1] = (1/p!) int lfd_p(m, y) (m' - m)^{(x)p}(dy)
  double remainder = 0.0;     // U(m') - U(m) - sum(terms)
};

/// Taylor-in-measure expansion of U around m in the direction m' - m, orders
/// 1..q-1. Tensor integrals are evaluated as exact finite sums.
TaylorExpansion taylor_measure_expand(const FunctionalWithDerivatives& u,
                                      const EmpiricalMeasure& m, const EmpiricalMeasure& m_prime,
                                      unsigned q);

/// int lfd_order(base, fixed, y) (to - from)^{(x)k}(dy) where k is the number
/// of points not supplied in fixed_points. Exact sum over the atoms.
double contract_signed(const FunctionalWithDerivatives& u, unsigned order,
                       const EmpiricalMeasure& base, const EmpiricalMeasure& from,
                       const EmpiricalMeasure& to, std::span<const double> fixed_points = {});

struct GrowthReport {
  bool passed = true;
  double worst_ratio = 0.0;  // max |lfd| / sum_j |y_j|^p over samples
  std::size_t samples = 0;
};

GrowthReport verify_polynomial_growth(const FunctionalWithDerivatives& u, unsigned order,
                                      std::size_t sample_count, double bound_constant,
                                      std::uint64_t seed = 0x5eedULL);

// Central finite difference along a measure interpolation versus the
// analytic derivative contraction.
struct ConsistencyCheck {
  double finite_difference = 0.0;
  double analytic = 0.0;
  double relative_error = 0.0;  // |fd - an| / max(1, |an|)
};

inline constexpr double kFiniteDifferenceStep = 1e-5;

/// d/dt of lfd_{order-1}((1-t)m + t m', fixed) against the contraction of
/// lfd_order over (m' - m). order = 1 checks U itself.
ConsistencyCheck check_derivative_consistency(const FunctionalWithDerivatives& u,
                                              unsigned order, const EmpiricalMeasure& m,
                                              const EmpiricalMeasure& m_prime, double t,
                                              std::span<const double> fixed_points = {},
                                              double h = kFiniteDifferenceStep);

}  // namespace chaoscale
