#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chaoscale {

// Gauss-Hermite rule for the standard normal: E[f(Z)] ~= sum_i w_i f(x_i).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

inline constexpr std::size_t kDefaultHermiteNodes = 96;

/// Golub-Welsch construction; rules are cached per node count.
const GaussHermiteRule& gauss_hermite(std::size_t nodes = kDefaultHermiteNodes);

}  // namespace chaoscale
