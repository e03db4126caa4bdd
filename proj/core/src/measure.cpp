#include "chaoscale/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <utility>

#include "chaoscale/errors.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

double ipow(double x, unsigned k) {
  double r = 1.0;
  while (k) {
    if (k & 1u) r *= x;
    x *= x;
    k >>= 1u;
  }
  return r;
}

void check_weights(std::span<const double> w, const char* what) {
  if (w.empty()) throw InvalidArgument(std::string(what) + ": at least one atom required");
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument(std::string(what) + ": weights must be finite and nonnegative");
    }
  }
  const double total = compensated_sum(w);
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw InvalidArgument(std::string(what) + ": weights sum to " + std::to_string(total) +
                          ", expected 1");
  }
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> atoms,
                                   std::vector<double> weights)
    : dim_(dim), atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (dim_ == 0) throw InvalidArgument("EmpiricalMeasure: dimension must be >= 1");
  if (atoms_.size() != weights_.size() * dim_) {
    throw InvalidArgument("EmpiricalMeasure: atom/weight length mismatch");
  }
  check_weights(weights_, "EmpiricalMeasure");
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::size_t dim, std::vector<double> atoms) {
  if (dim == 0 || atoms.empty() || atoms.size() % dim != 0) {
    throw InvalidArgument("EmpiricalMeasure::uniform: bad atom array");
  }
  const std::size_t n = atoms.size() / dim;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return EmpiricalMeasure(dim, std::move(atoms), std::move(w));
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::vector<double> point) {
  const std::size_t d = point.size();
  return EmpiricalMeasure(d, std::move(point), {1.0});
}

EmpiricalMeasure EmpiricalMeasure::on_line(std::vector<double> atoms,
                                           std::vector<double> weights) {
  return EmpiricalMeasure(1, std::move(atoms), std::move(weights));
}

EmpiricalMeasure EmpiricalMeasure::mixture(const EmpiricalMeasure& a,
                                           const EmpiricalMeasure& b, double t) {
  if (a.dim() != b.dim()) throw InvalidArgument("mixture: dimension mismatch");
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("mixture: t must lie in [0, 1]");
  std::vector<double> atoms(a.atoms_);
  atoms.insert(atoms.end(), b.atoms_.begin(), b.atoms_.end());
  std::vector<double> w;
  w.reserve(a.size() + b.size());
  for (double v : a.weights_) w.push_back((1.0 - t) * v);
  for (double v : b.weights_) w.push_back(t * v);
  return EmpiricalMeasure(a.dim(), std::move(atoms), std::move(w));
}

bool EmpiricalMeasure::identical(const EmpiricalMeasure& other) const {
  auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
    return x.size() == y.size() &&
           (x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0);
  };
  return dim_ == other.dim_ && same(atoms_, other.atoms_) && same(weights_, other.weights_);
}

double moment(const EmpiricalMeasure& mu, unsigned order, std::size_t coordinate) {
  if (coordinate >= mu.dim()) throw InvalidArgument("moment: coordinate out of range");
  if (order > 16) throw InvalidArgument("moment: order must be <= 16");
  std::vector<double> terms(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    terms[i] = mu.weight(i) * ipow(mu.coordinate(i, coordinate), order);
  }
  return symmetric_sum(terms);
}

double wasserstein2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw UnsupportedDimension("wasserstein2_1d: only one-dimensional measures are supported");
  }
  auto sorted = [](const EmpiricalMeasure& m) {
    std::vector<std::pair<double, double>> v(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) v[i] = {m.coordinate(i, 0), m.weight(i)};
    std::sort(v.begin(), v.end());
    return v;
  };
  const auto a = sorted(mu);
  const auto b = sorted(nu);
  std::size_t i = 0, j = 0;
  double wa = a[0].second, wb = b[0].second;
  std::vector<double> costs;
  costs.reserve(a.size() + b.size());
  while (i < a.size() && j < b.size()) {
    const double take = std::min(wa, wb);
    const double d = a[i].first - b[j].first;
    costs.push_back(take * d * d);
    wa -= take;
    wb -= take;
    if (wa <= 0.0 && ++i < a.size()) wa = a[i].second;
    if (wb <= 0.0 && ++j < b.size()) wb = b[j].second;
  }
  return std::sqrt(std::max(0.0, compensated_sum(costs)));
}

DiscreteLaw::DiscreteLaw(std::size_t dim, std::vector<double> atoms, std::vector<double> probs,
                         std::size_t atom_cap)
    : dim_(dim),
      atoms_(atoms),
      probs_(probs),
      measure_(dim, std::move(atoms), std::move(probs)) {
  if (probs_.size() > atom_cap) {
    throw InvalidArgument("DiscreteLaw: " + std::to_string(probs_.size()) +
                          " atoms exceeds the enumeration cap of " + std::to_string(atom_cap));
  }
  for (double p : probs_) {
    if (!(p > 0.0)) throw InvalidArgument("DiscreteLaw: probabilities must be positive");
  }
  cdf_.resize(probs_.size());
  std::partial_sum(probs_.begin(), probs_.end(), cdf_.begin());
  moments_.resize(kCachedMomentOrders + 1);
  for (unsigned k = 0; k <= kCachedMomentOrders; ++k) {
    moments_[k] = chaoscale::moment(measure_, k, 0);
  }
}

DiscreteLaw DiscreteLaw::bernoulli(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("bernoulli: p must lie in (0, 1)");
  return DiscreteLaw(1, {0.0, 1.0}, {1.0 - p, p});
}

DiscreteLaw DiscreteLaw::on_line(std::vector<double> atoms, std::vector<double> probs) {
  return DiscreteLaw(1, std::move(atoms), std::move(probs));
}

double DiscreteLaw::moment(unsigned order) const {
  if (order > kCachedMomentOrders) throw InvalidArgument("DiscreteLaw::moment: order > 16");
  return moments_[order];
}

std::size_t DiscreteLaw::index_for(double u) const {
  // The last atom absorbs the rounding slack of the cumulative sum.
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end() - 1, u);
  return static_cast<std::size_t>(it - cdf_.begin());
}

std::optional<std::uint64_t> multiset_count(std::uint64_t n, std::uint64_t k) {
  if (k == 0) return n == 0 ? 1 : 0;
  // C(n + k - 1, r) with r = min(k - 1, n), built incrementally; exact at each step.
  const std::uint64_t top = n + k - 1;
  const std::uint64_t r = std::min(k - 1, n);
  std::uint64_t acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    const std::uint64_t factor = top - r + i;
    // acc * factor is divisible by i; guard the intermediate product.
    if (acc > (std::uint64_t{1} << 63) / factor) return std::nullopt;
    acc = acc * factor / i;
  }
  return acc;
}

OutcomeEnumeration::OutcomeEnumeration(const DiscreteLaw& law, unsigned n, std::uint64_t cap)
    : law_(law), n_(n), counts_(law.size(), 0) {
  if (n == 0) throw InvalidArgument("enumerate_empirical: N must be positive");
  const auto total = multiset_count(n, law.size());
  if (!total || *total > cap) {
    throw EnumerationTooLarge("enumerate_empirical: multiset count for N=" + std::to_string(n) +
                              ", K=" + std::to_string(law.size()) + " exceeds cap " +
                              std::to_string(cap));
  }
  total_ = *total;
  counts_[0] = n;  // first composition: all draws on atom 0
}

std::optional<Outcome> OutcomeEnumeration::next() {
  if (done_) return std::nullopt;
  const std::size_t k = counts_.size();
  const std::size_t d = law_.dim();

  // Multinomial coefficient as a product of exact binomials.
  double coeff = 1.0;
  unsigned left = n_;
  double prob = 1.0;
  std::vector<double> atoms;
  std::vector<double> weights;
  for (std::size_t a = 0; a < k; ++a) {
    const unsigned c = counts_[a];
    double binom = 1.0;
    for (unsigned i = 0; i < c; ++i) binom = binom * (left - i) / (i + 1);
    coeff *= binom;
    left -= c;
    if (c == 0) continue;
    prob *= std::pow(law_.prob(a), static_cast<double>(c));
    const auto x = law_.atom(a);
    atoms.insert(atoms.end(), x.begin(), x.end());
    weights.push_back(static_cast<double>(c) / static_cast<double>(n_));
  }
  Outcome out{counts_, EmpiricalMeasure(d, std::move(atoms), std::move(weights)), coeff * prob};

  // Advance to the next composition of N into K parts (reverse-lexicographic
  // on the leading count).
  if (k == 1) {
    done_ = true;
  } else {
    // rightmost position before the last with a nonzero count
    std::size_t j = k - 1;
    bool found = false;
    for (std::size_t p = k - 1; p-- > 0;) {
      if (counts_[p] > 0) {
        j = p;
        found = true;
        break;
      }
    }
    if (!found) {
      done_ = true;
    } else {
      const unsigned tail = counts_[k - 1];
      counts_[k - 1] = 0;
      counts_[j] -= 1;
      counts_[j + 1] = tail + 1;
    }
  }
  return out;
}

OutcomeEnumeration enumerate_empirical(const DiscreteLaw& law, unsigned n, std::uint64_t cap) {
  return OutcomeEnumeration(law, n, cap);
}

}  // namespace chaoscale
