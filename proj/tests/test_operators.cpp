#include "obsest/operators.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace obsest;

namespace {

// Occupation numbers of a basis index, decoded digit by digit (copy 1 first).
std::vector<int> occupation(std::uint64_t index, int dim, int copies) {
  std::vector<int> digits(static_cast<std::size_t>(copies));
  for (int c = copies - 1; c >= 0; --c) {
    digits[static_cast<std::size_t>(c)] = static_cast<int>(index % static_cast<std::uint64_t>(dim));
    index /= static_cast<std::uint64_t>(dim);
  }
  std::vector<int> occ(static_cast<std::size_t>(dim), 0);
  for (int v : digits) ++occ[static_cast<std::size_t>(v)];
  return occ;
}

double max_abs(const ComplexMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Haar Monte Carlo of the mean error, sum_a <psi^N|E_a|psi^N> W(omega_a - <Omega>),
// from the state vector itself.
struct McResult {
  double mean;
  double se;
};

McResult haar_mean_error(const Povm& povm, const Observable& obs, const DeviationMeasure& w, int samples,
                         unsigned seed) {
  const int d = povm.dim(), copies = povm.copies();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < samples; ++t) {
    ComplexVector psi(d);
    for (int n = 0; n < d; ++n) psi(n) = {g(rng), g(rng)};
    psi.normalize();
    ComplexVector big = psi;
    for (int c = 1; c < copies; ++c) {
      ComplexVector next(big.size() * d);
      for (Eigen::Index i = 0; i < big.size(); ++i)
        for (int n = 0; n < d; ++n) next(i * d + n) = big(i) * psi(n);
      big = next;
    }
    double ev = 0.0;
    for (int n = 0; n < d; ++n) ev += obs.eigenvalue(n) * std::norm(psi(n));
    double v = 0.0;
    for (std::size_t a = 0; a < povm.size(); ++a)
      v += (big.adjoint() * povm.elements[a].matrix * big)(0, 0).real() * w((*povm.estimators)[a] - ev);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / samples;
  return {mean, std::sqrt((sum2 / samples - mean * mean) / (samples - 1))};
}

}  // namespace

TEST_CASE("tensor space guard") {
  CHECK(tensor_space_dim(2, 14) == 16384);
  CHECK_THROWS_AS(tensor_space_dim(2, 15), std::length_error);
  CHECK_THROWS_AS(tensor_space_dim(0, 2), std::invalid_argument);
  CHECK(tensor_space_dim(5, 0) == 1);
}

TEST_CASE("M and P operators against their basis-string definitions") {
  for (auto [d, copies] : {std::pair{2, 3}, std::pair{3, 2}, std::pair{4, 2}}) {
    const auto size = tensor_space_dim(d, copies);
    for (const auto& s : enumerate_compositions(copies, d)) {
      CAPTURE(s.to_string());
      const std::vector<int> key(s.counts().begin(), s.counts().end());
      ComplexMatrix m_ref = ComplexMatrix::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
      ComplexMatrix p_ref = m_ref;
      for (std::uint64_t i = 0; i < size; ++i) {
        if (occupation(i, d, copies) != key) continue;
        p_ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
        for (std::uint64_t j = 0; j < size; ++j)
          if (occupation(j, d, copies) == key) m_ref(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
      }
      CHECK(max_abs(build_m_operator(s, d, copies).matrix - m_ref) == 0.0);
      CHECK(max_abs(build_p_projector(s, d, copies).matrix - p_ref) == 0.0);
      CHECK(build_m_operator(s, d, copies).matrix.trace().real() == static_cast<double>(multinomial_weight(s)));
    }
  }
  CHECK_THROWS_AS(build_m_operator({1, 1}, 3, 2), std::invalid_argument);
}

TEST_CASE("projector relations") {
  for (auto [d, copies] : {std::pair{2, 1}, std::pair{2, 2}, std::pair{2, 5}, std::pair{3, 3}, std::pair{4, 2}}) {
    CAPTURE(d);
    CAPTURE(copies);
    const auto rel = verify_projector_relations(d, copies);
    CHECK(rel.passed());
    CHECK(rel.max_violation() <= 1e-12);
  }
}

TEST_CASE("POVM validity checks") {
  CHECK(check_povm(projective_povm(3, 2)).valid());
  CHECK(check_povm(separable_povm(2, 3)).valid());
  Povm broken = projective_povm(2, 2);
  broken.elements[0].matrix *= 1.5;
  CHECK_FALSE(check_povm(broken).valid());
  CHECK_THROWS_AS(require_valid_povm(broken), std::invalid_argument);
  Povm negative = trivial_povm(2, 1, 0.0);
  negative.elements[0].matrix(0, 0) = -0.5;
  CHECK(check_povm(negative).min_eigenvalue < 0.0);
  Povm mismatch = trivial_povm(2, 2, 0.0);
  mismatch.estimators = std::vector<double>{0.0, 1.0};
  CHECK_THROWS_AS(require_valid_povm(mismatch), std::invalid_argument);
}

TEST_CASE("no-measurement strategy for d = 2, N = 2, quadratic") {
  const Observable obs{1.0, -1.0};
  const auto q = SimplexQuadratureConfig::for_dimension(2);
  // E[<Omega>^2] over Haar states = 1/3.
  CHECK(mean_error_of_povm(trivial_povm(2, 2, 0.0), obs, measures::quadratic(), q) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const Povm tuned = optimal_estimators_for_povm(random_povm(2, 2, 1, 9), obs, measures::quadratic(),
                                                 SolverConfig::for_dimension(2));
  CHECK(std::fabs((*tuned.estimators)[0]) <= 1e-9);
}

TEST_CASE("separable and projective measurements reach the bound") {
  struct Case {
    std::vector<double> lambda;
    int copies;
    DeviationMeasure w;
  };
  const std::vector<Case> cases{{{1.0, -1.0}, 2, measures::quadratic()},
                                {{1.0, -1.0}, 3, measures::sinh_squared(0.7)},
                                {{1.0, 0.0, -1.0}, 2, measures::absolute_value()},
                                {{0.5, -1.0}, 3, measures::power(2.5)}};
  for (const auto& c : cases) {
    CAPTURE(c.w.name);
    const Observable obs(c.lambda);
    const auto cfg = SolverConfig::for_dimension(obs.dim());
    const auto table = build_estimator_table(c.copies, obs, c.w, cfg);
    const double bound = table.min_mean_error();
    const double proj = mean_error_of_povm(projective_povm(obs.dim(), c.copies, &table), obs, c.w, cfg.quadrature);
    const double sep = mean_error_of_povm(separable_povm(obs.dim(), c.copies, &table), obs, c.w, cfg.quadrature);
    CHECK(std::fabs(proj - bound) <= 1e-12 * std::max(1.0, bound));
    CHECK(std::fabs(sep - bound) <= 1e-12 * std::max(1.0, bound));
  }
}

TEST_CASE("operator mean error matches direct Haar sampling") {
  const Observable obs{1.0, -0.5};
  const auto w = measures::absolute_value();
  Povm povm = random_povm(2, 2, 3, 4242);
  povm.estimators = std::vector<double>{0.4, -0.1, 0.2};
  const double exact = mean_error_of_povm(povm, obs, w, SimplexQuadratureConfig::for_dimension(2));
  const auto mc = haar_mean_error(povm, obs, w, 200000, 5);
  CHECK(std::fabs(exact - mc.mean) <= 4 * mc.se);
}

TEST_CASE("random POVMs") {
  const Povm a = random_povm(3, 2, 4, 77);
  const Povm b = random_povm(3, 2, 4, 77);
  const Povm c = random_povm(3, 2, 4, 78);
  REQUIRE(a.size() == 4);
  CHECK(check_povm(a).valid());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.elements[i].matrix == b.elements[i].matrix);
    CHECK(a.elements[i].hermiticity_error() <= 1e-14);
  }
  CHECK_FALSE(a.elements[0].matrix == c.elements[0].matrix);
  const Povm one = random_povm(2, 2, 1, 3);
  CHECK(one.size() == 1);
  CHECK(max_abs(one.elements[0].matrix - ComplexMatrix::Identity(4, 4)) == 0.0);
  CHECK_THROWS_AS(random_povm(2, 2, 0, 3), std::invalid_argument);
}

TEST_CASE("bound sweep") {
  const Observable obs{1.0, -1.0};
  const auto cfg = SolverConfig::for_dimension(2);
  const auto table = build_estimator_table(2, obs, measures::quadratic(), cfg);
  const auto sweep = sweep_random_povms(table, 2, 10, 3, 1, cfg);
  CHECK(sweep.passed());
  CHECK(sweep.povms == 10);
  CHECK(sweep.min_gap >= -1e-9);
  CHECK(sweep.bound == doctest::Approx(1.0 / 6.0).epsilon(1e-10));

  // k = 1: the gap is the best single guess minus the bound, 1/3 - 1/6.
  const auto trivial = sweep_random_povms(table, 2, 2, 1, 1, cfg);
  CHECK(trivial.min_gap == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  CHECK(trivial.max_gap == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
}
