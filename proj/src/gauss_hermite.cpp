#include "ptfh/gauss_hermite.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>

namespace ptfh {

namespace {

QuadRule compute_rule(int order) {
  const int n = order;
  QuadRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = std::sqrt(std::numbers::pi);
    return rule;
  }
  // Jacobi matrix for Hermite polynomials: zero diagonal, off-diagonal
  // b_k = sqrt(k/2). Nodes are its eigenvalues, weights sqrt(pi) * v_1k^2.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("gauss_hermite: eigen decomposition failed");
  }
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int k = 0; k < n; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = solver.eigenvalues()[k];
    const double v0 = solver.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = sqrt_pi * v0 * v0;
  }
  // The rule is symmetric about zero; enforce it exactly so downstream sums
  // do not depend on solver roundoff asymmetries.
  for (int k = 0; k < n / 2; ++k) {
    const int j = n - 1 - k;
    const double node = 0.5 * (rule.nodes[static_cast<std::size_t>(j)] -
                               rule.nodes[static_cast<std::size_t>(k)]);
    rule.nodes[static_cast<std::size_t>(k)] = -node;
    rule.nodes[static_cast<std::size_t>(j)] = node;
    const double w = 0.5 * (rule.weights[static_cast<std::size_t>(k)] +
                            rule.weights[static_cast<std::size_t>(j)]);
    rule.weights[static_cast<std::size_t>(k)] = w;
    rule.weights[static_cast<std::size_t>(j)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

}  // namespace

const QuadRule& gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  static std::shared_mutex mutex;
  static std::map<int, std::unique_ptr<QuadRule>> cache;
  {
    std::shared_lock lock(mutex);
    auto it = cache.find(order);
    if (it != cache.end()) return *it->second;
  }
  auto rule = std::make_unique<QuadRule>(compute_rule(order));
  std::unique_lock lock(mutex);
  auto [it, inserted] = cache.emplace(order, std::move(rule));
  return *it->second;
}

}  // namespace ptfh
