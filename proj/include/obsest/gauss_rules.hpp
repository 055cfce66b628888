#pragma once

#include <vector>

namespace obsest::quad {

/// Nodes and weights of a Gauss rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

/// n-point Gauss-Legendre rule (weight 1). Rules for the sizes the simplex
/// integrator uses are computed once and shared read-only.
const GaussRule& gauss_legendre(int n);

/// n-point Gauss-Jacobi rule for the weight (1 - x)^alpha (1 + x)^beta,
/// alpha, beta > -1, via Golub-Welsch.
GaussRule gauss_jacobi(int n, double alpha, double beta);

}  // namespace obsest::quad
