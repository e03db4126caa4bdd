#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "chaoscale/functional.hpp"
#include "chaoscale/measure.hpp"

namespace chaoscale {

// i.i.d. N(mean, stddev^2) in every coordinate.
struct GaussianLaw {
  double mean = 0.0;
  double stddev = 1.0;
  std::size_t dim = 1;
};

// Law of the initial condition xi.
class InitialLaw {
 public:
  InitialLaw(DiscreteLaw law) : law_(std::move(law)) {}  // NOLINT(google-explicit-constructor)
  InitialLaw(GaussianLaw law);                            // NOLINT(google-explicit-constructor)

  static InitialLaw dirac(double x) { return DiscreteLaw::on_line({x}, {1.0}); }

  std::size_t dim() const;
  bool is_discrete() const noexcept { return std::holds_alternative<DiscreteLaw>(law_); }
  const DiscreteLaw* discrete() const noexcept { return std::get_if<DiscreteLaw>(&law_); }
  const GaussianLaw* gaussian() const noexcept { return std::get_if<GaussianLaw>(&law_); }

  // First-coordinate mean and variance.
  double mean() const;
  double variance() const;

  /// Finite measure matching the law: the atoms themselves for discrete laws,
  /// a Gauss-Hermite discretisation (exact for polynomials of degree < 2n)
  /// for one-dimensional Gaussians.
  EmpiricalMeasure quadrature_measure() const;

  std::string describe() const;

 private:
  std::variant<DiscreteLaw, GaussianLaw> law_;
};

/// U(law), evaluated on quadrature_measure(). Throws OracleUnavailable for
/// custom functionals on continuous laws.
double reference_value(const FunctionalWithDerivatives& u, const InitialLaw& law);

// Pre-step summary of the particle cloud, one sorted copy per coordinate so
// that every aggregate is independent of particle ordering.
class MeasureSnapshot {
 public:
  // positions: N x dim row-major, uniform weights
  MeasureSnapshot(std::size_t dim, std::span<const double> positions);
  explicit MeasureSnapshot(const EmpiricalMeasure& mu);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }
  double mean(std::size_t coordinate) const { return means_[coordinate]; }
  std::span<const double> sorted(std::size_t coordinate) const { return sorted_[coordinate]; }
  std::span<const double> sorted_weights(std::size_t coordinate) const {
    return sorted_weights_[coordinate];
  }

 private:
  void build(std::size_t n, const std::function<double(std::size_t, std::size_t)>& at,
             const std::function<double(std::size_t)>& weight);

  std::size_t dim_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> sorted_;
  std::vector<std::vector<double>> sorted_weights_;
  std::vector<double> means_;
};

// One coefficient (drift or diffusion), applied coordinate-wise: the value for
// coordinate c depends on x_c and the c-th marginal of the measure.
class CoefficientSpec {
 public:
  enum class Form { constant, pointwise, interaction_kernel, statistic };

  static CoefficientSpec constant(double value);
  // g(x)
  static CoefficientSpec pointwise(std::function<double(double)> g, double lipschitz,
                                   std::optional<double> sup_bound = std::nullopt);
  // base(x) + int B(x, y) mu(dy)
  static CoefficientSpec interaction_kernel(std::function<double(double)> base,
                                            std::function<double(double, double)> kernel,
                                            double lipschitz,
                                            std::optional<double> sup_bound = std::nullopt);
  // h(x, int y mu(dy))
  static CoefficientSpec statistic(std::function<double(double, double)> h, double lipschitz,
                                   std::optional<double> sup_bound = std::nullopt);

  double operator()(double x, std::size_t coordinate, const MeasureSnapshot& mu) const;
  double operator()(double x, const EmpiricalMeasure& mu) const;

  Form form() const noexcept { return form_; }
  double lipschitz() const noexcept { return lipschitz_; }
  const std::optional<double>& sup_bound() const noexcept { return sup_bound_; }
  bool is_zero() const noexcept { return form_ == Form::constant && constant_ == 0.0; }

 private:
  Form form_ = Form::constant;
  double constant_ = 0.0;
  std::function<double(double)> pointwise_;
  std::function<double(double, double)> kernel_;
  std::function<double(double, double)> statistic_;
  double lipschitz_ = 0.0;
  std::optional<double> sup_bound_;
};

// dX = (-a X + c E[X]) dt + sigma dW
struct LinearMeanField {
  double a = 1.0;
  double c = 0.5;
  double sigma = 0.4;
};

// Closed-form law of the mean-field OU limit, first coordinate.
class AnalyticReference {
 public:
  AnalyticReference(LinearMeanField params, InitialLaw initial);

  double mean(double t) const;      // m(t) = m0 exp((c - a) t)
  double variance(double t) const;  // v(t) = v0 exp(-2 a t) + sigma^2 (1 - exp(-2 a t)) / (2 a)

  /// Finite measure reproducing the law of X_t: initial atoms propagated by
  /// the deterministic flow, each convolved with the Gaussian noise through a
  /// Gauss-Hermite rule.
  EmpiricalMeasure law_quadrature(double t, std::size_t dim = 1, std::size_t nodes = 96) const;

  const LinearMeanField& params() const noexcept { return params_; }

 private:
  LinearMeanField params_;
  InitialLaw initial_;
};

struct McKVModel {
  std::string name;
  std::size_t dim = 1;
  CoefficientSpec drift;
  CoefficientSpec diffusion;
  double horizon = 1.0;
  InitialLaw initial = InitialLaw::dirac(0.0);
  std::optional<LinearMeanField> linear;
  std::optional<AnalyticReference> reference;

  // (UB): diffusion carries a finite sup bound.
  bool uniformly_bounded() const { return diffusion.sup_bound().has_value(); }

  // Throws InvalidArgument on T <= 0 or inconsistent dimensions.
  void validate() const;
};

using ParameterMap = std::map<std::string, double>;

/// mean_field_ou {a, c, sigma, T, dim}; measure_diffusion_toy {base,
/// amplitude, theta, T}; bounded_kuramoto {coupling, sigma0, sigma1, T}.
McKVModel builtin_model(const std::string& name, const ParameterMap& params,
                        std::optional<InitialLaw> initial = std::nullopt);

std::vector<std::string> builtin_model_names();

/// Phi(L[X_T]) from the model's analytic reference.
double limit_functional_value(const McKVModel& model, const FunctionalWithDerivatives& u);

}  // namespace chaoscale
