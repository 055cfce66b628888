#pragma once

#include <random>

namespace obsest {

template <class Rng>
void sample_dirichlet(std::span<const double> alpha, Rng& rng, std::span<double> out) {
  if (alpha.size() != out.size()) throw std::invalid_argument("Dirichlet output size mismatch");
  double total = 0.0;
  for (std::size_t n = 0; n < alpha.size(); ++n) {
    std::gamma_distribution<double> gamma(alpha[n], 1.0);
    out[n] = gamma(rng);
    total += out[n];
  }
  if (!(total > 0.0)) {
    // All Gamma draws underflowed (tiny alpha); put the mass on one vertex.
    std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
    std::fill(out.begin(), out.end(), 0.0);
    out[pick(rng)] = 1.0;
    return;
  }
  for (double& v : out) v /= total;
}

}  // namespace obsest
