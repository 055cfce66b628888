#include "obsest/gauss_rules.hpp"

#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace obsest::quad {

namespace {

// n >= 2 only; the cached sizes start at 4.
GaussRule compute_legendre(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

constexpr std::array<int, 7> kCachedSizes{4, 8, 16, 32, 64, 128, 256};

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const std::array<GaussRule, kCachedSizes.size()> cache = [] {
    std::array<GaussRule, kCachedSizes.size()> rules;
    for (std::size_t i = 0; i < kCachedSizes.size(); ++i) rules[i] = compute_legendre(kCachedSizes[i]);
    return rules;
  }();
  for (std::size_t i = 0; i < kCachedSizes.size(); ++i)
    if (kCachedSizes[i] == n) return cache[i];
  throw std::invalid_argument("Gauss-Legendre rule of size " + std::to_string(n) +
                              " is not tabulated");
}

GaussRule gauss_jacobi(int n, double alpha, double beta) {
  if (n < 1) throw std::invalid_argument("Gauss-Jacobi rule needs n >= 1");
  if (!(alpha > -1.0) || !(beta > -1.0))
    throw std::invalid_argument("Gauss-Jacobi exponents must exceed -1");

  const double ab = alpha + beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 1);
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * k + ab;
    if (k == 0)
      diag(k) = (beta - alpha) / (ab + 2.0);
    else
      diag(k) = (beta * beta - alpha * alpha) / (t * (t + 2.0));
    if (k + 1 < n) {
      const double j = k + 1.0;
      const double tj = 2.0 * j + ab;
      double num = 4.0 * j * (j + alpha) * (j + beta) * (j + ab);
      double den = tj * tj * (tj + 1.0) * (tj - 1.0);
      if (j == 1.0) {
        // Avoid 0/0 when alpha + beta = -1 at j = 1.
        num = 4.0 * (1.0 + alpha) * (1.0 + beta);
        den = (ab + 2.0) * (ab + 2.0) * (ab + 3.0);
      }
      sub(k) = std::sqrt(num / den);
    }
  }

  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  if (n == 1) {
    rule.nodes[0] = diag(0);
    rule.weights[0] = mu0;
    return rule;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("Golub-Welsch eigensolve failed");
  for (int i = 0; i < n; ++i) {
    rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace obsest::quad
