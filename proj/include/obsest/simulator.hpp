#pragma once

#include "obsest/core.hpp"
#include "obsest/measure.hpp"
#include "obsest/simplex.hpp"
#include "obsest/solver.hpp"

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace obsest {

/// Normalized pure state sum_n c_n |n> in the eigenbasis of the observable.
class PureState {
public:
  explicit PureState(std::vector<std::complex<double>> amplitudes);

  int dim() const { return static_cast<int>(amplitudes_.size()); }
  std::span<const std::complex<double>> amplitudes() const { return amplitudes_; }
  /// |c_n|^2
  std::vector<double> probabilities() const;
  /// Tr[Omega rho] = sum_n lambda_n |c_n|^2
  double expectation(const Observable& obs) const;

private:
  std::vector<std::complex<double>> amplitudes_;
};

using Engine = std::mt19937_64;

/// Haar-random state: normalized vector of independent standard complex Gaussians.
PureState sample_haar_state(int dim, Engine& rng);

/// |c_n|^2 ~ Dirichlet(alpha), independent uniform phases.
PureState sample_dirichlet_state(std::span<const double> alpha, Engine& rng);

/// Qubit state cos(theta/2)|0> + e^{i phi} sin(theta/2)|1> with theta drawn
/// from density ~ theta_density(theta) sin(theta) and phi uniform. Rejection
/// sampling against `bound` >= sup theta_density; throws std::domain_error if
/// a sample exceeds it.
PureState sample_bloch_symmetric_state(const std::function<double(double)>& theta_density,
                                       double bound, Engine& rng);

/// Occupation numbers of N independent projective measurements in the eigenbasis.
Composition measure_copies(const PureState& state, int copies, Engine& rng);

struct HaarStates {};

struct DirichletStates {
  std::vector<double> alpha;
};

/// Azimuthally symmetric qubit prior on the Bloch sphere.
struct BlochStates {
  std::function<double(double)> theta_density;
  double bound = 1.0;
  /// The same prior as a density over p = (|c_0|^2, |c_1|^2), for theory.
  SimplexPrior simplex_prior;
  std::string label;
};

using StatePrior = std::variant<HaarStates, DirichletStates, BlochStates>;

namespace bloch {
BlochStates uniform();
/// Northern hemisphere only (|c_0|^2 >= 1/2).
BlochStates upper_hemisphere();
/// theta density cos^2(theta/2), i.e. the Dirichlet(2, 1) tilt.
BlochStates cos_squared();
}  // namespace bloch

std::string describe(const StatePrior& prior);
SimplexPrior simplex_prior_of(const StatePrior& prior);
PureState sample_state(const StatePrior& prior, int dim, Engine& rng);

struct TrialRecord {
  Composition occupation;
  double estimate = 0.0;
  double true_value = 0.0;
  double deviation_value = 0.0;  // W(estimate - true_value)
};

/// One trial: draw a state, measure N copies, look the estimate up by occupation.
TrialRecord simulate_trial(int copies, const Observable& obs, const DeviationMeasure& w,
                           const EstimatorTable& table, const StatePrior& prior, Engine& rng);

struct TrialSummary {
  std::uint64_t trials = 0;
  double empirical_mean_error = 0.0;
  double standard_error = 0.0;
  std::map<Composition, std::uint64_t> occupation_counts;
};

/// Runs T independent trials; trial t uses stream (seed, t). Partial sums are
/// formed over fixed-size chunks and combined in chunk order, so the result is
/// bit-identical for any thread count. `threads` = 0 picks the hardware count.
TrialSummary run_trials(std::uint64_t trials, int copies, const Observable& obs,
                        const DeviationMeasure& w, const EstimatorTable& table,
                        const StatePrior& prior, std::uint64_t seed, unsigned threads = 0);

}  // namespace obsest
