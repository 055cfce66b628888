#include "obsest/operators.hpp"

#include "obsest/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

namespace obsest {

std::uint64_t tensor_space_dim(int dim, int copies) {
  if (dim < 1 || copies < 0) throw std::invalid_argument("invalid tensor-product shape");
  std::uint64_t size = 1;
  for (int i = 0; i < copies; ++i) {
    size *= static_cast<std::uint64_t>(dim);
    if (size > kMaxTensorSpace)
      throw std::length_error("d^N exceeds the dense operator limit of " +
                              std::to_string(kMaxTensorSpace));
  }
  return size;
}

double TensorOperator::hermiticity_error() const {
  return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

namespace {

void check_composition(const Composition& s, int dim, int copies) {
  if (s.dim() != dim || s.copies() != copies)
    throw std::invalid_argument("composition " + s.to_string() + " does not match d = " +
                                std::to_string(dim) + ", N = " + std::to_string(copies));
}

TensorOperator make_operator(int dim, int copies, ComplexMatrix m) {
  return TensorOperator{dim, copies, std::move(m)};
}

}  // namespace

ComplexVector occupation_vector(const Composition& s) {
  const int dim = s.dim(), copies = s.copies();
  const auto size = tensor_space_dim(dim, copies);
  ComplexVector psi = ComplexVector::Zero(static_cast<Eigen::Index>(size));
  for (std::uint64_t i = 0; i < size; ++i)
    if (occupation_of_index(i, dim, copies) == s) psi(static_cast<Eigen::Index>(i)) = 1.0;
  return psi;
}

TensorOperator build_m_operator(const Composition& s, int dim, int copies) {
  check_composition(s, dim, copies);
  const ComplexVector psi = occupation_vector(s);
  return make_operator(dim, copies, psi * psi.adjoint());
}

TensorOperator build_p_projector(const Composition& s, int dim, int copies) {
  check_composition(s, dim, copies);
  const ComplexVector psi = occupation_vector(s);
  return make_operator(dim, copies, psi.asDiagonal());
}

PovmCheck check_povm(const Povm& povm) {
  if (povm.elements.empty()) throw std::invalid_argument("POVM has no elements");
  const auto n = povm.elements.front().matrix.rows();
  PovmCheck check;
  check.min_eigenvalue = std::numeric_limits<double>::infinity();
  ComplexMatrix total = ComplexMatrix::Zero(n, n);
  for (const auto& e : povm.elements) {
    if (e.matrix.rows() != n || e.matrix.cols() != n)
      throw std::invalid_argument("POVM elements have inconsistent sizes");
    const ComplexMatrix herm = 0.5 * (e.matrix + e.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(herm, Eigen::EigenvaluesOnly);
    check.min_eigenvalue = std::min(check.min_eigenvalue, es.eigenvalues().minCoeff());
    // Non-Hermitian parts count as a PSD violation too.
    check.min_eigenvalue = std::min(check.min_eigenvalue, -e.hermiticity_error());
    total += e.matrix;
  }
  check.completeness_violation = (total - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  return check;
}

void require_valid_povm(const Povm& povm) {
  const PovmCheck c = check_povm(povm);
  if (!c.valid())
    throw std::invalid_argument("invalid POVM: min eigenvalue " + std::to_string(c.min_eigenvalue) +
                                ", completeness violation " +
                                std::to_string(c.completeness_violation));
  if (povm.estimators && povm.estimators->size() != povm.elements.size())
    throw std::invalid_argument("POVM estimators do not match its elements");
}

Povm projective_povm(int dim, int copies, const EstimatorTable* table) {
  Povm povm;
  std::vector<double> est;
  for (const auto& s : enumerate_compositions(copies, dim)) {
    povm.elements.push_back(build_p_projector(s, dim, copies));
    if (table) est.push_back(table->estimator(s));
  }
  if (table) povm.estimators = std::move(est);
  return povm;
}

Povm separable_povm(int dim, int copies, const EstimatorTable* table) {
  const auto size = tensor_space_dim(dim, copies);
  const auto n = static_cast<Eigen::Index>(size);
  Povm povm;
  std::vector<double> est;
  for (std::uint64_t i = 0; i < size; ++i) {
    ComplexMatrix m = ComplexMatrix::Zero(n, n);
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    povm.elements.push_back(make_operator(dim, copies, std::move(m)));
    if (table) est.push_back(table->estimator(occupation_of_index(i, dim, copies)));
  }
  if (table) povm.estimators = std::move(est);
  return povm;
}

Povm trivial_povm(int dim, int copies, double estimator) {
  const auto n = static_cast<Eigen::Index>(tensor_space_dim(dim, copies));
  Povm povm;
  povm.elements.push_back(make_operator(dim, copies, ComplexMatrix::Identity(n, n)));
  povm.estimators = std::vector<double>{estimator};
  return povm;
}

double RelationReport::max_violation() const {
  return std::max({completeness, projector_product, m_p_relation, m_rank_one, m_trace});
}

RelationReport verify_projector_relations(int dim, int copies) {
  const auto n = static_cast<Eigen::Index>(tensor_space_dim(dim, copies));
  const auto comps = enumerate_compositions(copies, dim);
  std::vector<ComplexMatrix> ps, ms;
  for (const auto& s : comps) {
    ps.push_back(build_p_projector(s, dim, copies).matrix);
    ms.push_back(build_m_operator(s, dim, copies).matrix);
  }

  RelationReport r;
  ComplexMatrix total = ComplexMatrix::Zero(n, n);
  for (const auto& p : ps) total += p;
  r.completeness = (total - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();

  auto max_abs = [](const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); };
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (std::size_t j = 0; j < comps.size(); ++j) {
      const bool same = i == j;
      const ComplexMatrix pp = ps[i] * ps[j];
      r.projector_product =
          std::max(r.projector_product, max_abs(same ? ComplexMatrix(pp - ps[i]) : pp));
      const ComplexMatrix mp = ms[i] * ps[j];
      const ComplexMatrix pm = ps[j] * ms[i];
      r.m_p_relation = std::max(
          {r.m_p_relation, max_abs(same ? ComplexMatrix(mp - ms[i]) : mp),
           max_abs(same ? ComplexMatrix(pm - ms[i]) : pm)});
    }
    const double expected = static_cast<double>(multinomial_weight(comps[i]));
    r.m_trace = std::max(r.m_trace, std::abs(ms[i].trace() - expected));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(ms[i], Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues();  // ascending
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      const double target = k + 1 == ev.size() ? expected : 0.0;
      r.m_rank_one = std::max(r.m_rank_one, std::fabs(ev(k) - target));
    }
  }
  return r;
}

double m_trace_pairing(const Composition& s, const TensorOperator& element) {
  check_composition(s, element.dim, element.copies);
  const ComplexVector psi = occupation_vector(s);
  return (psi.adjoint() * element.matrix * psi)(0).real();
}

namespace {

// Tr[M_s E_a] for every composition and element, checked non-negative.
std::vector<std::vector<double>> pairings(const Povm& povm, std::span<const Composition> comps) {
  std::vector<ComplexVector> psis;
  for (const auto& s : comps) psis.push_back(occupation_vector(s));
  std::vector<std::vector<double>> out;
  for (std::size_t a = 0; a < povm.size(); ++a) {
    std::vector<double> row;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const double t = (psis[i].adjoint() * povm.elements[a].matrix * psis[i])(0).real();
      if (t < -kPsdTolerance)
        throw std::invalid_argument("negative Tr[M_s E_a] = " + std::to_string(t) +
                                    " for composition " + comps[i].to_string());
      row.push_back(std::max(t, 0.0));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

double mean_error_of_povm(const Povm& povm, const Observable& obs, const DeviationMeasure& w,
                          const SimplexQuadratureConfig& cfg) {
  if (!povm.estimators) throw std::invalid_argument("POVM has no estimators");
  require_valid_povm(povm);
  if (povm.dim() != obs.dim()) throw std::invalid_argument("POVM does not match observable");
  const auto comps = enumerate_compositions(povm.copies(), povm.dim());
  const auto traces = pairings(povm, comps);
  double total = 0.0;
  for (std::size_t a = 0; a < povm.size(); ++a) {
    const double omega = (*povm.estimators)[a];
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (traces[a][i] == 0.0) continue;
      total += traces[a][i] * w_function(comps[i], omega, obs, w, cfg);
    }
  }
  return total;
}

Povm optimal_estimators_for_povm(const Povm& povm, const Observable& obs,
                                 const DeviationMeasure& w, const SolverConfig& cfg) {
  require_valid_povm(povm);
  if (povm.dim() != obs.dim()) throw std::invalid_argument("POVM does not match observable");
  const auto comps = enumerate_compositions(povm.copies(), povm.dim());
  const auto traces = pairings(povm, comps);
  Povm out = povm;
  std::vector<double> est;
  for (std::size_t a = 0; a < povm.size(); ++a) {
    const Minimum m = minimize_mixture(comps, traces[a], obs, w, UniformPrior{}, cfg);
    est.push_back(m.omega);
  }
  out.estimators = std::move(est);
  return out;
}

Povm random_povm(int dim, int copies, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("POVM needs at least one element");
  const auto n = static_cast<Eigen::Index>(tensor_space_dim(dim, copies));
  if (k == 1) return Povm{{make_operator(dim, copies, ComplexMatrix::Identity(n, n))}, std::nullopt};

  constexpr int kAttempts = 5;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    auto rng = stream_engine(seed, static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<ComplexMatrix> parts;
    ComplexMatrix total = ComplexMatrix::Zero(n, n);
    for (int a = 0; a < k; ++a) {
      ComplexMatrix g(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) g(i, j) = {normal(rng), normal(rng)};
      parts.push_back(g * g.adjoint());
      total += parts.back();
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(total);
    const Eigen::VectorXd ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-8 * ev.maxCoeff())) continue;
    const ComplexMatrix inv_sqrt =
        es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
    Povm povm;
    for (const auto& part : parts) {
      ComplexMatrix e = inv_sqrt * part * inv_sqrt;
      e = 0.5 * (e + e.adjoint());
      povm.elements.push_back(make_operator(dim, copies, std::move(e)));
    }
    if (check_povm(povm).valid()) return povm;
  }
  throw std::runtime_error("random POVM construction failed after " + std::to_string(kAttempts) +
                           " attempts (ill-conditioned frame operator)");
}

BoundSweep sweep_random_povms(const EstimatorTable& table, int copies, int count, int k,
                              std::uint64_t seed, const SolverConfig& cfg, double tolerance) {
  const Observable& obs = table.observable();
  const DeviationMeasure& w = table.measure();
  const int dim = obs.dim();
  BoundSweep out;
  out.tolerance = tolerance;
  out.bound = table.min_mean_error();
  out.achievability_gap =
      mean_error_of_povm(projective_povm(dim, copies, &table), obs, w, cfg.quadrature) - out.bound;
  out.min_gap = std::numeric_limits<double>::infinity();
  out.max_gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const Povm povm = random_povm(dim, copies, k, stream_seed(seed, static_cast<std::uint64_t>(i)));
    const Povm tuned = optimal_estimators_for_povm(povm, obs, w, cfg);
    const double gap = mean_error_of_povm(tuned, obs, w, cfg.quadrature) - out.bound;
    out.min_gap = std::min(out.min_gap, gap);
    out.max_gap = std::max(out.max_gap, gap);
    if (gap < -tolerance) ++out.violations;
    ++out.povms;
  }
  return out;
}

}  // namespace obsest
