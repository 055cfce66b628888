#pragma once

#include "obsest/core.hpp"
#include "obsest/measure.hpp"
#include "obsest/simplex.hpp"

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace obsest {

struct SolverConfig {
  double omega_tol = 1e-10;  // absolute tolerance on the minimizer location
  int max_iters = 200;
  SimplexQuadratureConfig quadrature;

  static SolverConfig for_dimension(int dim);
};

/// Minimization failed; the message names the composition when there is one.
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Minimum {
  double omega = 0.0;
  double value = 0.0;
};

/// Golden-section search for the minimum of `objective` on [lo, hi].
/// Stops when the bracket is narrower than `tol` or after `max_iters` steps.
Minimum golden_section_minimize(const std::function<double(double)>& objective, double lo,
                                double hi, double tol, int max_iters);

/// Minimizer of sum_s coeffs[s] * w'_s(omega) over [lambda_min, lambda_max].
///
/// Golden-section locates the minimum first. When W has a derivative the
/// result is then polished by bisection on the sign of the objective's
/// derivative in a bracket grown around the golden-section point; the
/// polished point is kept only if it does not raise the objective.
Minimum minimize_mixture(std::span<const Composition> comps, std::span<const double> coeffs,
                         const Observable& obs, const DeviationMeasure& w,
                         const SimplexPrior& prior, const SolverConfig& cfg);

/// Optimal estimator Omega^(min)_s and the minimal weight w_s(Omega^(min)_s).
Minimum minimize_w(const Composition& s, const Observable& obs, const DeviationMeasure& w,
                   const SolverConfig& cfg);

Minimum minimize_w_nonuniform(const Composition& s, const Observable& obs,
                              const DeviationMeasure& w, const SimplexPrior& prior,
                              const SolverConfig& cfg);

/// sum_n lambda_n (s_n + 1) / (N + d): the minimizer for W = x^2.
double quadratic_estimator_closed_form(const Composition& s, const Observable& obs);

struct SinhEstimators {
  double omega_20 = 0.0;
  double omega_11 = 0.0;
  double omega_02 = 0.0;
};

/// Closed-form estimators for d = 2, N = 2, eigenvalues (+1, -1) and
/// W = sigma^2 sinh^2(x / sigma). Evaluated in a form that is stable for
/// both small sigma (no sinh(2/sigma) overflow) and large sigma (no
/// cancellation).
SinhEstimators sinh_estimator_closed_form(double sigma);

struct EstimatorEntry {
  Composition composition;
  double estimator = 0.0;
  double min_weight = 0.0;
  bool unique = true;
};

/// Optimal estimator per composition for N copies of a state from `prior`.
class EstimatorTable {
public:
  EstimatorTable(Observable obs, DeviationMeasure measure, SimplexPrior prior, double prior_mass,
                 std::vector<EstimatorEntry> entries);

  const Observable& observable() const { return obs_; }
  const DeviationMeasure& measure() const { return measure_; }
  const SimplexPrior& prior() const { return prior_; }
  double prior_mass() const { return prior_mass_; }
  int copies() const { return entries_.empty() ? 0 : entries_.front().composition.copies(); }
  const std::vector<EstimatorEntry>& entries() const { return entries_; }

  const EstimatorEntry& at(const Composition& s) const;
  const EstimatorEntry* find(const Composition& s) const;
  double estimator(const Composition& s) const { return at(s).estimator; }

  /// sum_s multinomial_weight(s) * min_weight(s) / prior_mass.
  double min_mean_error() const;

private:
  Observable obs_;
  DeviationMeasure measure_;
  SimplexPrior prior_;
  double prior_mass_ = 1.0;
  std::vector<EstimatorEntry> entries_;
  std::map<Composition, std::size_t> index_;
};

EstimatorTable build_estimator_table(int copies, const Observable& obs, const DeviationMeasure& w,
                                     const SolverConfig& cfg,
                                     const SimplexPrior& prior = UniformPrior{});

/// Lower limit of the mean error over all POVMs and estimators:
/// sum_s w_s(Omega^(min)_s) Tr[M_s].
double min_mean_error(int copies, const Observable& obs, const DeviationMeasure& w,
                      const SolverConfig& cfg);

}  // namespace obsest
