#include "chaoscale/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>

#include "chaoscale/errors.hpp"
#include "chaoscale/stats.hpp"

namespace chaoscale {
namespace {

GaussHermiteRule build_rule(std::size_t n) {
  // Jacobi matrix of the probabilists' Hermite polynomials: off-diagonal sqrt(k).
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    rule.nodes[i] = eig.eigenvalues()(k);
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights[i] = v0 * v0;
  }
  // Symmetrise: the exact rule is symmetric about 0.
  for (std::size_t i = 0; i < n / 2; ++i) {
    const std::size_t j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  const double total = compensated_sum(rule.weights);
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(std::size_t nodes) {
  if (nodes == 0 || nodes > 512) throw InvalidArgument("gauss_hermite: node count out of range");
  static std::mutex mutex;
  static std::map<std::size_t, GaussHermiteRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(nodes);
  if (it == cache.end()) it = cache.emplace(nodes, build_rule(nodes)).first;
  return it->second;
}

}  // namespace chaoscale
