#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace chaoscale {

inline constexpr double kWeightSumTolerance = 1e-12;

// A finitely supported probability measure sum_i w_i delta_{x_i} on R^d.
// Atoms are stored row-major: atom i occupies [i*dim, (i+1)*dim).
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t dim, std::vector<double> atoms,
                   std::vector<double> weights);

  // Equal weights 1/N on every atom.
  static EmpiricalMeasure uniform(std::size_t dim, std::vector<double> atoms);
  static EmpiricalMeasure dirac(std::vector<double> point);
  static EmpiricalMeasure on_line(std::vector<double> atoms, std::vector<double> weights);

  // (1 - t) a + t b, t in [0, 1]; the atoms of both operands are kept.
  static EmpiricalMeasure mixture(const EmpiricalMeasure& a,
                                  const EmpiricalMeasure& b, double t);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::span<const double> atom(std::size_t i) const {
    return {atoms_.data() + i * dim_, dim_};
  }
  double coordinate(std::size_t i, std::size_t c) const { return atoms_[i * dim_ + c]; }
  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> flat_atoms() const noexcept { return atoms_; }

  // Bitwise equality of the representation (used by determinism checks).
  bool identical(const EmpiricalMeasure& other) const;

 private:
  std::size_t dim_;
  std::vector<double> atoms_;
  std::vector<double> weights_;
};

/// sum_i w_i x_i[coordinate]^order. Summation is permutation-invariant.
double moment(const EmpiricalMeasure& mu, unsigned order, std::size_t coordinate = 0);

inline double mean(const EmpiricalMeasure& mu, std::size_t coordinate = 0) {
  return moment(mu, 1, coordinate);
}

/// Exact W_2 between two measures on the real line, via the monotone coupling.
/// Throws UnsupportedDimension for dim != 1.
double wasserstein2_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Law with few atoms, used as the substrate for exact enumeration.
class DiscreteLaw {
 public:
  static constexpr std::size_t kDefaultAtomCap = 8;
  static constexpr unsigned kCachedMomentOrders = 16;

  DiscreteLaw(std::size_t dim, std::vector<double> atoms, std::vector<double> probs,
              std::size_t atom_cap = kDefaultAtomCap);

  static DiscreteLaw bernoulli(double p);  // P(1) = p on {0, 1}
  static DiscreteLaw on_line(std::vector<double> atoms, std::vector<double> probs);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> atom(std::size_t k) const {
    return {atoms_.data() + k * dim_, dim_};
  }
  double prob(std::size_t k) const { return probs_[k]; }
  std::span<const double> probs() const noexcept { return probs_; }

  // First-coordinate moment, precomputed for orders 0..16.
  double moment(unsigned order) const;

  // Atom index for a uniform variate u in [0, 1) (inverse CDF).
  std::size_t index_for(double u) const;

  const EmpiricalMeasure& as_measure() const noexcept { return measure_; }

 private:
  std::size_t dim_;
  std::vector<double> atoms_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
  std::vector<double> moments_;
  EmpiricalMeasure measure_;
};

// One outcome of N i.i.d. draws, grouped by multiset.
struct Outcome {
  std::vector<unsigned> counts;  // counts[k] = number of draws equal to atom k
  EmpiricalMeasure measure;
  double probability;
};

// Single-consumer stream over every multiset of N draws from a DiscreteLaw.
class OutcomeEnumeration {
 public:
  static constexpr std::uint64_t kDefaultCap = 10'000'000;

  OutcomeEnumeration(const DiscreteLaw& law, unsigned n, std::uint64_t cap = kDefaultCap);

  // Number of outcomes, C(N + K - 1, K - 1).
  std::uint64_t size() const noexcept { return total_; }

  std::optional<Outcome> next();

  template <class Fn>
  void for_each(Fn&& fn) {
    while (auto o = next()) fn(*o);
  }

 private:
  DiscreteLaw law_;  // owned copy; callers may pass temporaries
  unsigned n_;
  std::uint64_t total_;
  std::vector<unsigned> counts_;
  bool done_ = false;
};

OutcomeEnumeration enumerate_empirical(const DiscreteLaw& law, unsigned n,
                                       std::uint64_t cap = OutcomeEnumeration::kDefaultCap);

/// C(n + k - 1, k - 1), or nullopt on overflow past 2^63.
std::optional<std::uint64_t> multiset_count(std::uint64_t n, std::uint64_t k);

}  // namespace chaoscale
