#include "chaoscale/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <utility>

#include "chaoscale/errors.hpp"
#include "chaoscale/quadrature.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

// (1 - exp(-r t)) / r, continuous at r = 0.
double relaxation(double rate, double t) {
  if (rate == 0.0) return t;
  return -std::expm1(-rate * t) / rate;
}

double take(const ParameterMap& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::string& model, const ParameterMap& params,
                    std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, value] : params) {
    if (!allowed.count(key)) {
      throw InvalidArgument(model + ": unknown parameter '" + key + "'");
    }
    if (!std::isfinite(value)) throw InvalidArgument(model + ": parameter '" + key + "' is not finite");
  }
}

std::size_t take_dim(const std::string& model, const ParameterMap& params) {
  const double d = take(params, "dim", 1.0);
  if (d < 1.0 || d != std::floor(d) || d > 64.0) {
    throw InvalidArgument(model + ": dim must be a positive integer");
  }
  return static_cast<std::size_t>(d);
}

double take_horizon(const std::string& model, const ParameterMap& params) {
  const double t = take(params, "T", 1.0);
  if (!(t > 0.0)) throw InvalidArgument(model + ": T must be positive");
  return t;
}

InitialLaw default_initial(std::size_t dim, double dirac_at, bool gaussian) {
  if (gaussian || dim > 1) return GaussianLaw{gaussian ? 0.0 : dirac_at, gaussian ? 1.0 : 0.0, dim};
  return InitialLaw::dirac(dirac_at);
}

}  // namespace

// ---------------------------------------------------------------- InitialLaw

InitialLaw::InitialLaw(GaussianLaw law) : law_(law) {
  if (!(law.stddev >= 0.0) || !std::isfinite(law.mean) || !std::isfinite(law.stddev)) {
    throw InvalidArgument("GaussianLaw: stddev must be finite and nonnegative");
  }
  if (law.dim == 0) throw InvalidArgument("GaussianLaw: dim must be >= 1");
}

std::size_t InitialLaw::dim() const {
  if (const auto* d = discrete()) return d->dim();
  return gaussian()->dim;
}

double InitialLaw::mean() const {
  if (const auto* d = discrete()) return d->moment(1);
  return gaussian()->mean;
}

double InitialLaw::variance() const {
  if (const auto* d = discrete()) {
    const double m = d->moment(1);
    std::vector<double> terms(d->size());
    for (std::size_t k = 0; k < d->size(); ++k) {
      const double dx = d->atom(k)[0] - m;
      terms[k] = d->prob(k) * dx * dx;
    }
    return compensated_sum(terms);
  }
  return gaussian()->stddev * gaussian()->stddev;
}

EmpiricalMeasure InitialLaw::quadrature_measure() const {
  if (const auto* d = discrete()) return d->as_measure();
  const auto& g = *gaussian();
  if (g.dim != 1) {
    throw UnsupportedDimension("quadrature_measure: Gaussian laws are discretised in d = 1 only");
  }
  if (g.stddev == 0.0) return EmpiricalMeasure::dirac({g.mean});
  const auto& rule = gauss_hermite();
  std::vector<double> atoms(rule.nodes.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i] = g.mean + g.stddev * rule.nodes[i];
  return EmpiricalMeasure::on_line(std::move(atoms), rule.weights);
}

std::string InitialLaw::describe() const {
  std::ostringstream os;
  if (const auto* d = discrete()) {
    os << "discrete{";
    for (std::size_t k = 0; k < d->size(); ++k) {
      if (k) os << ", ";
      os << d->atom(k)[0] << ":" << d->prob(k);
    }
    os << "}";
  } else {
    os << "gaussian{" << gaussian()->mean << ", " << gaussian()->stddev << "}";
  }
  return os.str();
}

double reference_value(const FunctionalWithDerivatives& u, const InitialLaw& law) {
  if (u.family() == FamilyTag::custom && !law.is_discrete()) {
    throw OracleUnavailable("reference_value: no exact oracle for custom functionals on "
                            "continuous laws");
  }
  auto m = law.quadrature_measure();
  if (m.dim() != u.dim()) throw InvalidArgument("reference_value: dimension mismatch");
  return u.eval(m);
}

// ----------------------------------------------------------- MeasureSnapshot

MeasureSnapshot::MeasureSnapshot(std::size_t dim, std::span<const double> positions) : dim_(dim) {
  if (dim == 0 || positions.empty() || positions.size() % dim != 0) {
    throw InvalidArgument("MeasureSnapshot: bad position array");
  }
  const std::size_t n = positions.size() / dim;
  const double w = 1.0 / static_cast<double>(n);
  build(
      n, [&](std::size_t i, std::size_t c) { return positions[i * dim + c]; },
      [w](std::size_t) { return w; });
}

MeasureSnapshot::MeasureSnapshot(const EmpiricalMeasure& mu) : dim_(mu.dim()) {
  build(
      mu.size(), [&](std::size_t i, std::size_t c) { return mu.coordinate(i, c); },
      [&](std::size_t i) { return mu.weight(i); });
}

void MeasureSnapshot::build(std::size_t n,
                            const std::function<double(std::size_t, std::size_t)>& at,
                            const std::function<double(std::size_t)>& weight) {
  weights_.resize(n);
  for (std::size_t i = 0; i < n; ++i) weights_[i] = weight(i);
  sorted_.assign(dim_, {});
  sorted_weights_.assign(dim_, {});
  means_.assign(dim_, 0.0);
  std::vector<std::pair<double, double>> pairs(n);
  std::vector<double> terms(n);
  for (std::size_t c = 0; c < dim_; ++c) {
    for (std::size_t i = 0; i < n; ++i) pairs[i] = {at(i, c), weights_[i]};
    std::sort(pairs.begin(), pairs.end());
    sorted_[c].resize(n);
    sorted_weights_[c].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      sorted_[c][i] = pairs[i].first;
      sorted_weights_[c][i] = pairs[i].second;
      terms[i] = pairs[i].first * pairs[i].second;
    }
    means_[c] = compensated_sum(terms);
  }
}

// ----------------------------------------------------------- CoefficientSpec

CoefficientSpec CoefficientSpec::constant(double value) {
  CoefficientSpec s;
  s.form_ = Form::constant;
  s.constant_ = value;
  s.lipschitz_ = 0.0;
  s.sup_bound_ = std::abs(value);
  return s;
}

CoefficientSpec CoefficientSpec::pointwise(std::function<double(double)> g, double lipschitz,
                                           std::optional<double> sup_bound) {
  CoefficientSpec s;
  s.form_ = Form::pointwise;
  s.pointwise_ = std::move(g);
  s.lipschitz_ = lipschitz;
  s.sup_bound_ = sup_bound;
  return s;
}

CoefficientSpec CoefficientSpec::interaction_kernel(std::function<double(double)> base,
                                                    std::function<double(double, double)> kernel,
                                                    double lipschitz,
                                                    std::optional<double> sup_bound) {
  CoefficientSpec s;
  s.form_ = Form::interaction_kernel;
  s.pointwise_ = std::move(base);
  s.kernel_ = std::move(kernel);
  s.lipschitz_ = lipschitz;
  s.sup_bound_ = sup_bound;
  return s;
}

CoefficientSpec CoefficientSpec::statistic(std::function<double(double, double)> h,
                                           double lipschitz, std::optional<double> sup_bound) {
  CoefficientSpec s;
  s.form_ = Form::statistic;
  s.statistic_ = std::move(h);
  s.lipschitz_ = lipschitz;
  s.sup_bound_ = sup_bound;
  return s;
}

double CoefficientSpec::operator()(double x, std::size_t coordinate,
                                   const MeasureSnapshot& mu) const {
  switch (form_) {
    case Form::constant:
      return constant_;
    case Form::pointwise:
      return pointwise_(x);
    case Form::statistic:
      return statistic_(x, mu.mean(coordinate));
    case Form::interaction_kernel: {
      const auto ys = mu.sorted(coordinate);
      const auto ws = mu.sorted_weights(coordinate);
      double acc = 0.0;
      for (std::size_t j = 0; j < ys.size(); ++j) acc += ws[j] * kernel_(x, ys[j]);
      return pointwise_(x) + acc;
    }
  }
  return 0.0;
}

double CoefficientSpec::operator()(double x, const EmpiricalMeasure& mu) const {
  return (*this)(x, 0, MeasureSnapshot(mu));
}

// --------------------------------------------------------- AnalyticReference

AnalyticReference::AnalyticReference(LinearMeanField params, InitialLaw initial)
    : params_(params), initial_(std::move(initial)) {}

double AnalyticReference::mean(double t) const {
  return initial_.mean() * std::exp((params_.c - params_.a) * t);
}

double AnalyticReference::variance(double t) const {
  const double s2 = params_.sigma * params_.sigma;
  return initial_.variance() * std::exp(-2.0 * params_.a * t) +
         s2 * relaxation(2.0 * params_.a, t);
}

EmpiricalMeasure AnalyticReference::law_quadrature(double t, std::size_t dim,
                                                   std::size_t nodes) const {
  const double m = mean(t);
  const double noise_sd =
      params_.sigma * std::sqrt(relaxation(2.0 * params_.a, t));
  const double decay = std::exp(-params_.a * t);

  // Centres and masses before the Gaussian convolution.
  std::vector<double> centres;
  std::vector<double> masses;
  double spread = noise_sd;
  if (const auto* d = initial_.discrete()) {
    const double m0 = initial_.mean();
    for (std::size_t k = 0; k < d->size(); ++k) {
      centres.push_back(m + decay * (d->atom(k)[0] - m0));
      masses.push_back(d->prob(k));
    }
  } else {
    centres.push_back(m);
    masses.push_back(1.0);
    spread = std::sqrt(variance(t));
  }

  std::vector<double> atoms;
  std::vector<double> weights;
  auto push = [&](double x, double w) {
    atoms.push_back(x);
    for (std::size_t c = 1; c < dim; ++c) atoms.push_back(0.0);
    weights.push_back(w);
  };
  if (spread == 0.0) {
    for (std::size_t k = 0; k < centres.size(); ++k) push(centres[k], masses[k]);
  } else {
    const auto& rule = gauss_hermite(nodes);
    for (std::size_t k = 0; k < centres.size(); ++k) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        push(centres[k] + spread * rule.nodes[i], masses[k] * rule.weights[i]);
      }
    }
  }
  // Renormalise the product weights against accumulated rounding.
  const double total = compensated_sum(weights);
  for (double& w : weights) w /= total;
  return EmpiricalMeasure(dim, std::move(atoms), std::move(weights));
}

// ------------------------------------------------------------------- models

void McKVModel::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw InvalidArgument(name + ": horizon T must be positive");
  }
  if (dim == 0) throw InvalidArgument(name + ": dimension must be >= 1");
  if (initial.dim() != dim) {
    throw InvalidArgument(name + ": initial law dimension " + std::to_string(initial.dim()) +
                          " does not match model dimension " + std::to_string(dim));
  }
}

McKVModel builtin_model(const std::string& name, const ParameterMap& params,
                        std::optional<InitialLaw> initial) {
  McKVModel model;
  model.name = name;
  if (name == "mean_field_ou") {
    reject_unknown(name, params, {"a", "c", "sigma", "T", "dim"});
    LinearMeanField p{take(params, "a", 1.0), take(params, "c", 0.5), take(params, "sigma", 0.4)};
    if (p.sigma < 0.0) throw InvalidArgument(name + ": sigma must be nonnegative");
    model.dim = take_dim(name, params);
    model.horizon = take_horizon(name, params);
    model.drift = CoefficientSpec::statistic(
        [a = p.a, c = p.c](double x, double s) { return -a * x + c * s; },
        std::max(std::abs(p.a), std::abs(p.c)));
    model.diffusion = CoefficientSpec::constant(p.sigma);
    model.initial = initial.value_or(default_initial(model.dim, 1.0, false));
    model.linear = p;
    model.reference = AnalyticReference(p, model.initial);
  } else if (name == "measure_diffusion_toy") {
    reject_unknown(name, params, {"base", "amplitude", "theta", "T", "dim"});
    const double base = take(params, "base", 1.0);
    const double amplitude = take(params, "amplitude", 0.1);
    const double theta = take(params, "theta", 0.0);
    if (!(base - std::abs(amplitude) > 0.0)) {
      throw InvalidArgument(name + ": diffusion must stay positive (base > |amplitude|)");
    }
    model.dim = take_dim(name, params);
    model.horizon = take_horizon(name, params);
    model.drift = theta == 0.0 ? CoefficientSpec::constant(0.0)
                               : CoefficientSpec::pointwise(
                                     [theta](double x) { return -theta * x; }, std::abs(theta));
    model.diffusion = CoefficientSpec::statistic(
        [base, amplitude](double, double s) { return base + amplitude * std::tanh(s); },
        std::abs(amplitude), base + std::abs(amplitude));
    model.initial = initial.value_or(default_initial(model.dim, 0.0, true));
  } else if (name == "bounded_kuramoto") {
    reject_unknown(name, params, {"coupling", "sigma0", "sigma1", "T", "dim"});
    const double k = take(params, "coupling", 1.0);
    const double s0 = take(params, "sigma0", 0.5);
    const double s1 = take(params, "sigma1", 0.2);
    if (!(s0 - std::abs(s1) > 0.0)) {
      throw InvalidArgument(name + ": diffusion must stay positive (sigma0 > |sigma1|)");
    }
    model.dim = take_dim(name, params);
    model.horizon = take_horizon(name, params);
    model.drift = CoefficientSpec::interaction_kernel(
        [](double) { return 0.0; }, [k](double x, double y) { return k * std::sin(y - x); },
        std::abs(k), std::abs(k));
    model.diffusion = CoefficientSpec::interaction_kernel(
        [s0](double) { return s0; }, [s1](double x, double y) { return s1 * std::cos(y - x); },
        std::abs(s1), s0 + std::abs(s1));
    model.initial = initial.value_or(default_initial(model.dim, 0.0, true));
  } else {
    throw InvalidArgument("unknown model '" + name + "'");
  }
  model.validate();
  return model;
}

std::vector<std::string> builtin_model_names() {
  return {"mean_field_ou", "measure_diffusion_toy", "bounded_kuramoto"};
}

double limit_functional_value(const McKVModel& model, const FunctionalWithDerivatives& u) {
  if (!model.reference) {
    throw OracleUnavailable("limit_functional_value: model '" + model.name +
                            "' has no analytic reference");
  }
  if (u.family() == FamilyTag::custom) {
    throw OracleUnavailable("limit_functional_value: custom functionals have no oracle");
  }
  return u.eval(model.reference->law_quadrature(model.horizon, u.dim()));
}

}  // namespace chaoscale
