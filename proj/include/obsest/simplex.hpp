#pragma once

#include "obsest/core.hpp"
#include "obsest/measure.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace obsest {

enum class SimplexMethod { GaussJacobiTensor, MonteCarlo };

/// Tensor quadrature is only offered up to this dimension.
inline constexpr int kMaxTensorDimension = 4;

struct SimplexQuadratureConfig {
  SimplexMethod method = SimplexMethod::GaussJacobiTensor;
  double rel_tol = 1e-12;
  std::uint64_t mc_samples = 1'000'000;
  std::uint64_t seed = 0x0b5e57;

  static SimplexQuadratureConfig monte_carlo(std::uint64_t samples, std::uint64_t seed);
  /// Tensor quadrature when d <= kMaxTensorDimension, Monte Carlo otherwise.
  static SimplexQuadratureConfig for_dimension(int dim);
};

/// Integration failed to reach the requested tolerance.
class QuadratureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct IntegralEstimate {
  double value = 0.0;
  /// Difference between the last two quadrature orders, or the Monte-Carlo
  /// standard error.
  double error_estimate = 0.0;
};

/// Hyperplanes {p : direction . p = level} across which the integrand may be
/// non-smooth. The tensor rule splits its panels on them.
struct KinkPlanes {
  std::vector<double> direction;
  std::vector<double> levels;
  bool graded = false;
};

using SimplexFunction = std::function<double(std::span<const double>)>;

/// E[f(p)] for p ~ Dirichlet(alpha).
///
/// The tensor rule maps the simplex to the unit cube by stick-breaking,
/// p_k = u_k * prod_{j<k} (1 - u_j), where the u_k are independent
/// Beta(alpha_k, alpha_{k+1} + ... + alpha_d). Each cube axis is split into
/// panels at the kink planes and integrated with Gauss-Legendre, or with
/// Gauss-Jacobi on end panels whose Beta factor is singular or non-polynomial.
/// Orders double until two successive estimates agree to rel_tol * E|f|.
IntegralEstimate dirichlet_expectation(const SimplexFunction& f, std::span<const double> alpha,
                                       const SimplexQuadratureConfig& cfg,
                                       const KinkPlanes* kinks = nullptr);

/// Draw from Dirichlet(alpha) with the Gamma-ratio construction.
template <class Rng>
void sample_dirichlet(std::span<const double> alpha, Rng& rng, std::span<double> out);

// ---------------------------------------------------------------------------
// Priors over pure states that depend only on the moduli |c_n|^2 = p_n.

struct UniformPrior {};

/// Prior density proportional to prod_n p_n^(alpha_n - 1).
struct DirichletTilt {
  std::vector<double> alpha;
};

/// Arbitrary non-negative density g(p) relative to the Haar measure.
struct CallablePrior {
  std::function<double(std::span<const double>)> density;
  std::string label = "callable";
};

using SimplexPrior = std::variant<UniformPrior, DirichletTilt, CallablePrior>;

std::string describe(const SimplexPrior& prior);

/// Haar average of the prior's (unnormalized) density g, i.e. the total mass
/// that w_function_nonuniform integrates against. 1 for the uniform prior.
IntegralEstimate prior_mass(const SimplexPrior& prior, int dim, const SimplexQuadratureConfig& cfg);

// ---------------------------------------------------------------------------
// Weight functions.
//
// With p_n = xi_n^2 the weight function becomes
//   w_s(omega) = Gamma(d) prod_n s_n! / Gamma(N + d) * E_{Dir(s+1)}[W(omega - lambda.p)],
// equivalently E_{Dir(1,...,1)}[prod_n p_n^{s_n} W(omega - lambda.p)].

double w_function(const Composition& s, double omega, const Observable& obs,
                  const DeviationMeasure& w, const SimplexQuadratureConfig& cfg);

IntegralEstimate w_function_estimate(const Composition& s, double omega, const Observable& obs,
                                     const DeviationMeasure& w,
                                     const SimplexQuadratureConfig& cfg);

/// dw_s/domega, from W'. Requires w.has_derivative().
double w_derivative(const Composition& s, double omega, const Observable& obs,
                    const DeviationMeasure& w, const SimplexQuadratureConfig& cfg);

/// w_function with real exponents e_n > -1 in place of s_n:
///   Gamma(d) prod Gamma(e_n + 1) / Gamma(sum e + d) * E_{Dir(e+1)}[W(omega - lambda.p)].
IntegralEstimate w_function_exponents(std::span<const double> exponents, double omega,
                                      const Observable& obs, const DeviationMeasure& w,
                                      const SimplexQuadratureConfig& cfg);

/// Weight function under a non-uniform prior:
///   w'_s(omega) = Gamma(d) * integral over the simplex of g(p) prod p^s W(omega - lambda.p) dp,
/// which is exactly w_function for the uniform prior (g = 1).
/// Callable priors need SimplexMethod::MonteCarlo.
IntegralEstimate w_function_nonuniform(const Composition& s, double omega, const Observable& obs,
                                       const DeviationMeasure& w, const SimplexPrior& prior,
                                       const SimplexQuadratureConfig& cfg);

/// Sum_s coeffs[s] * w'_s(omega) evaluated as a single simplex integral.
/// With `derivative` set, W is replaced by W'.
IntegralEstimate mixed_w_function(std::span<const Composition> comps, std::span<const double> coeffs,
                                  double omega, const Observable& obs, const DeviationMeasure& w,
                                  const SimplexPrior& prior, const SimplexQuadratureConfig& cfg,
                                  bool derivative = false);

}  // namespace obsest

#include "obsest/simplex_sampling.inl"
