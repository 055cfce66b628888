#include "obsest/simulator.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace obsest;

namespace {

// Kolmogorov-Smirnov statistic of a sample against a continuous CDF.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

// Pearson chi-square of observed counts against expected probabilities.
double chi_square(const std::vector<double>& observed, const std::vector<double>& probs, double total) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = probs[i] * total;
    chi2 += (observed[i] - e) * (observed[i] - e) / e;
  }
  return chi2;
}

}  // namespace

TEST_CASE("pure states") {
  CHECK_THROWS_AS(PureState({{1.0, 0.0}, {1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(PureState(std::vector<std::complex<double>>{}), std::invalid_argument);
  const PureState s({{0.6, 0.0}, {0.0, 0.8}});
  CHECK(s.dim() == 2);
  CHECK(s.probabilities()[1] == doctest::Approx(0.64));
  CHECK(s.expectation(Observable{1.0, -1.0}) == doctest::Approx(0.36 - 0.64));
}

TEST_CASE("Haar states: |c_0|^2 follows Beta(1, d - 1)") {
  for (int d : {2, 3, 5}) {
    CAPTURE(d);
    Engine rng(100 + d);
    std::vector<double> p0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) p0.push_back(sample_haar_state(d, rng).probabilities()[0]);
    const double ks = ks_statistic(p0, [d](double x) { return 1.0 - std::pow(1.0 - x, d - 1); });
    // Critical value at alpha = 0.001 is 1.95 / sqrt(n).
    CHECK(ks < 1.95 / std::sqrt(n));
  }
  Engine rng(1);
  CHECK_THROWS_AS(sample_haar_state(1, rng), std::invalid_argument);
}

TEST_CASE("measurement of copies is multinomial") {
  const PureState s({{std::sqrt(0.2), 0.0}, {0.0, std::sqrt(0.5)}, {std::sqrt(0.3), 0.0}});
  Engine rng(5);
  std::vector<double> counts(3, 0.0);
  const int trials = 40000;
  for (int t = 0; t < trials; ++t) {
    const Composition c = measure_copies(s, 3, rng);
    REQUIRE(c.copies() == 3);
    for (int n = 0; n < 3; ++n) counts[static_cast<std::size_t>(n)] += c[n];
  }
  // chi-square with 2 degrees of freedom, alpha = 0.001: 13.82
  CHECK(chi_square(counts, {0.2, 0.5, 0.3}, 3.0 * trials) < 13.82);

  const PureState basis({{0.0, 0.0}, {1.0, 0.0}});
  CHECK(measure_copies(basis, 4, rng) == Composition({0, 4}));
}

TEST_CASE("Haar-averaged occupation law is uniform over compositions") {
  // Gamma(d) N! / Gamma(N + d) per composition; d = 3, N = 2 gives 1/6 each.
  Engine rng(8);
  const auto comps = enumerate_compositions(2, 3);
  std::map<Composition, double> counts;
  const int trials = 60000;
  for (int t = 0; t < trials; ++t) ++counts[measure_copies(sample_haar_state(3, rng), 2, rng)];
  std::vector<double> observed;
  for (const auto& s : comps) observed.push_back(counts[s]);
  // 5 degrees of freedom, alpha = 0.001: 20.52
  CHECK(chi_square(observed, std::vector<double>(6, 1.0 / 6.0), trials) < 20.52);
}

TEST_CASE("non-uniform state priors") {
  Engine rng(21);
  const int n = 40000;
  double dir_mean = 0.0, cos2_mean = 0.0, hemi_min = 1.0;
  const std::vector<double> alpha{2.0, 1.0, 1.0};
  for (int i = 0; i < n; ++i) {
    dir_mean += sample_state(DirichletStates{alpha}, 3, rng).probabilities()[0];
    cos2_mean += sample_state(bloch::cos_squared(), 2, rng).probabilities()[0];
    hemi_min = std::min(hemi_min, sample_state(bloch::upper_hemisphere(), 2, rng).probabilities()[0]);
  }
  // Dirichlet(2, 1, 1): E p_0 = 1/2, sd 1/sqrt(20). cos^2(theta/2) prior: p_0 ~ Beta(2, 1), mean 2/3, sd sqrt(1/18).
  CHECK(std::fabs(dir_mean / n - 0.5) < 4 * std::sqrt(1.0 / 20 / n));
  CHECK(std::fabs(cos2_mean / n - 2.0 / 3.0) < 4 * std::sqrt(1.0 / 18 / n));
  CHECK(hemi_min >= 0.5);

  CHECK_THROWS_AS(sample_state(bloch::uniform(), 3, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_state(DirichletStates{{1.0, 1.0}}, 3, rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_bloch_symmetric_state([](double) { return 2.0; }, 1.0, rng), std::domain_error);
  CHECK(describe(StatePrior{bloch::cos_squared()}) == "bloch:cos2");
  CHECK(std::holds_alternative<DirichletTilt>(simplex_prior_of(bloch::cos_squared())));
}

TEST_CASE("trials are seed-deterministic and independent of thread count") {
  const Observable obs{1.0, 0.0, -1.0};
  const auto table = build_estimator_table(2, obs, measures::sinh_squared(1.0), SolverConfig::for_dimension(3));
  const std::uint64_t trials = 30000;
  const auto a = run_trials(trials, 2, obs, table.measure(), table, HaarStates{}, 99, 1);
  const auto b = run_trials(trials, 2, obs, table.measure(), table, HaarStates{}, 99, 3);
  const auto c = run_trials(trials, 2, obs, table.measure(), table, HaarStates{}, 100, 1);
  CHECK(a.empirical_mean_error == b.empirical_mean_error);
  CHECK(a.standard_error == b.standard_error);
  CHECK(a.occupation_counts == b.occupation_counts);
  CHECK(a.empirical_mean_error != c.empirical_mean_error);
  std::uint64_t total = 0;
  for (const auto& [s, n] : a.occupation_counts) total += n;
  CHECK(total == trials);
}

TEST_CASE("simulated mean error agrees with the bound") {
  const Observable obs{1.0, -1.0};
  const auto table = build_estimator_table(2, obs, measures::quadratic(), SolverConfig::for_dimension(2));
  const auto sum = run_trials(200000, 2, obs, table.measure(), table, HaarStates{}, 2024);
  CHECK(std::fabs(sum.empirical_mean_error - 1.0 / 6.0) <= 4 * sum.standard_error);
  CHECK(sum.standard_error > 0.0);
}

TEST_CASE("trial inputs are validated") {
  const Observable obs{1.0, -1.0};
  const auto table = build_estimator_table(2, obs, measures::quadratic(), SolverConfig::for_dimension(2));
  CHECK_THROWS_AS(run_trials(0, 2, obs, table.measure(), table, HaarStates{}, 1), std::invalid_argument);
  CHECK_THROWS_AS(run_trials(10, 3, obs, table.measure(), table, HaarStates{}, 1), std::invalid_argument);
}
