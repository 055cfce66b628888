#pragma once

#include "obsest/core.hpp"
#include "obsest/measure.hpp"
#include "obsest/simplex.hpp"
#include "obsest/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace obsest {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Largest tensor-product dimension d^N the dense operators accept.
inline constexpr std::uint64_t kMaxTensorSpace = 16384;

/// d^N, throwing std::length_error above kMaxTensorSpace.
std::uint64_t tensor_space_dim(int dim, int copies);

/// Dense operator on the d^N-dimensional space of N copies. Basis index is
/// row-major over copies, copy 1 most significant.
struct TensorOperator {
  int dim = 0;
  int copies = 0;
  ComplexMatrix matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  /// max |A - A^dagger| entry.
  double hermiticity_error() const;
};

/// Sum over basis strings with occupation s, unnormalized: |Psi_s>.
ComplexVector occupation_vector(const Composition& s);

/// M_s = |Psi_s><Psi_s|: rank one, trace = multinomial_weight(s).
TensorOperator build_m_operator(const Composition& s, int dim, int copies);

/// P_s: diagonal projector onto basis strings with occupation s.
TensorOperator build_p_projector(const Composition& s, int dim, int copies);

struct Povm {
  std::vector<TensorOperator> elements;
  std::optional<std::vector<double>> estimators;

  std::size_t size() const { return elements.size(); }
  int dim() const { return elements.empty() ? 0 : elements.front().dim; }
  int copies() const { return elements.empty() ? 0 : elements.front().copies; }
};

inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kCompletenessTolerance = 1e-10;

struct PovmCheck {
  double min_eigenvalue = 0.0;          // over all elements
  double completeness_violation = 0.0;  // max |sum E_a - 1| entry
  bool valid() const {
    return min_eigenvalue >= -kPsdTolerance && completeness_violation <= kCompletenessTolerance;
  }
};

PovmCheck check_povm(const Povm& povm);
/// Throws std::invalid_argument when the POVM invariants fail.
void require_valid_povm(const Povm& povm);

/// {P_s} over all compositions, optionally with estimators from a table.
Povm projective_povm(int dim, int copies, const EstimatorTable* table = nullptr);

/// The fully separable measurement {|n_1><n_1| x ... x |n_N><n_N|}, each
/// outcome carrying the table estimator of its occupation numbers.
Povm separable_povm(int dim, int copies, const EstimatorTable* table = nullptr);

/// Single-element POVM {1}.
Povm trivial_povm(int dim, int copies, double estimator);

struct RelationReport {
  double completeness = 0.0;       // max |sum_s P_s - 1|
  double projector_product = 0.0;  // max |P_s P_s' - delta P_s|
  double m_p_relation = 0.0;       // max over |M_s P_s' - delta M_s| and |P_s' M_s - delta M_s|
  double m_rank_one = 0.0;         // max |spectrum(M_s) - {Tr M_s, 0, ...}|
  double m_trace = 0.0;            // max |Tr M_s - N!/prod s_n!|
  double max_violation() const;
  bool passed(double tol = 1e-12) const { return max_violation() <= tol; }
};

RelationReport verify_projector_relations(int dim, int copies);

/// Tr[M_s E] = <Psi_s|E|Psi_s>.
double m_trace_pairing(const Composition& s, const TensorOperator& element);

/// Mean error of a POVM with estimators: sum_a sum_s w_s(omega_a) Tr[M_s E_a].
double mean_error_of_povm(const Povm& povm, const Observable& obs, const DeviationMeasure& w,
                          const SimplexQuadratureConfig& cfg);

/// Same elements, each estimator minimizing sum_s w_s(omega) Tr[M_s E_a].
Povm optimal_estimators_for_povm(const Povm& povm, const Observable& obs,
                                 const DeviationMeasure& w, const SolverConfig& cfg);

/// k-element POVM E_a = S^{-1/2} G_a G_a^dagger S^{-1/2}, S = sum_a G_a G_a^dagger,
/// with G_a seeded complex Gaussian matrices.
Povm random_povm(int dim, int copies, int k, std::uint64_t seed);

struct BoundSweep {
  double bound = 0.0;              // min_mean_error from the estimator table
  double achievability_gap = 0.0;  // mean error of {P_s} with table estimators, minus bound
  double min_gap = 0.0;            // over the random POVMs
  double max_gap = 0.0;
  int povms = 0;
  int violations = 0;              // gaps below -tolerance
  double tolerance = 1e-9;

  bool passed() const { return violations == 0 && std::fabs(achievability_gap) <= tolerance; }
};

/// Mean error of `count` seeded random k-element POVMs, each with its own
/// optimal estimators, compared against the lower limit from `table`.
BoundSweep sweep_random_povms(const EstimatorTable& table, int copies, int count, int k,
                              std::uint64_t seed, const SolverConfig& cfg,
                              double tolerance = 1e-9);

}  // namespace obsest
