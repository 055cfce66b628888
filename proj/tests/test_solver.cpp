#include "obsest/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

using namespace obsest;

namespace {

// omega_(2,0) for the sinh2 measure written exactly as the hyperbolic ratio.
double literal_omega20(double sigma) {
  const double sh = std::sinh(2.0 / sigma), ch = std::cosh(2.0 / sigma);
  const double num = (sigma * sigma - 2 * sigma + 4) * sh - 2 * (sigma - 2) * ch;
  const double den = (sigma * sigma + 2 * sigma + 4) * sh - 2 * (sigma + 2) * ch;
  return sigma / 4.0 * std::log(num / den);
}

// Independent quadratic oracle: minimizer is the Dirichlet(s+1) mean of lambda.p
// and the minimum is the prefactor times its variance.
struct QuadraticOracle {
  double omega;
  double value;
};

QuadraticOracle quadratic_oracle(const Composition& s, const std::vector<double>& lambda) {
  const int d = s.dim();
  const double A = s.copies() + d;
  double m = 0.0, e2 = 0.0;
  for (int n = 0; n < d; ++n) m += lambda[n] * (s[n] + 1) / A;
  for (int n = 0; n < d; ++n)
    for (int k = 0; k < d; ++k)
      e2 += lambda[n] * lambda[k] * (s[n] + 1) * (s[k] + 1 + (n == k)) / (A * (A + 1));
  double log_pref = std::lgamma(d) - std::lgamma(A);
  for (int n = 0; n < d; ++n) log_pref += std::lgamma(s[n] + 1.0);
  return {m, std::exp(log_pref) * (e2 - m * m)};
}

}  // namespace

TEST_CASE("golden-section search") {
  const auto m = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3) + 2.0; }, -1, 1, 1e-10, 200);
  CHECK(m.omega == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(m.value == doctest::Approx(2.0));
  // Monotone objective: minimum at the boundary.
  CHECK(golden_section_minimize([](double x) { return x; }, -1, 1, 1e-10, 200).omega ==
        doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(golden_section_minimize([](double x) { return x * x; }, 2, 2, 1e-10, 200).omega == 2.0);
  CHECK_THROWS_AS(golden_section_minimize([](double) { return std::nan(""); }, 0, 1, 1e-10, 200), SolverError);
  CHECK_THROWS_AS(golden_section_minimize([](double x) { return x; }, 0, 1, 0.0, 200), std::invalid_argument);
}

TEST_CASE("quadratic estimators and minima against moments") {
  const std::vector<double> lambda{0.9, -0.4, 0.1};
  const Observable obs(lambda);
  const auto cfg = SolverConfig::for_dimension(3);
  for (const auto& s : enumerate_compositions(3, 3)) {
    CAPTURE(s.to_string());
    const auto m = minimize_w(s, obs, measures::quadratic(), cfg);
    const auto o = quadratic_oracle(s, lambda);
    CHECK(std::fabs(m.omega - o.omega) <= 1e-9);
    CHECK(m.value == doctest::Approx(o.value).epsilon(1e-10));
    CHECK(quadratic_estimator_closed_form(s, obs) == doctest::Approx(o.omega).epsilon(1e-14));
  }
}

TEST_CASE("minimum mean error for the quadratic measure") {
  const Observable obs{1.0, -1.0};
  const auto cfg = SolverConfig::for_dimension(2);
  CHECK(std::fabs(min_mean_error(2, obs, measures::quadratic(), cfg) - 1.0 / 6.0) <= 1e-9);
  CHECK(std::fabs(min_mean_error(1, obs, measures::quadratic(), cfg) - 2.0 / 9.0) <= 1e-9);
  const auto table = build_estimator_table(2, obs, measures::quadratic(), cfg);
  CHECK(table.estimator({2, 0}) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::fabs(table.estimator({1, 1})) <= 1e-9);
  CHECK(table.estimator({0, 2}) == doctest::Approx(-0.5).epsilon(1e-9));

  // General N: sum over compositions of the oracle minima times multiplicities.
  const std::vector<double> lambda{1.0, 0.0, -1.0};
  for (int copies = 1; copies <= 3; ++copies) {
    double expected = 0.0;
    for (const auto& s : enumerate_compositions(copies, 3))
      expected += static_cast<double>(multinomial_weight(s)) * quadratic_oracle(s, lambda).value;
    CHECK(min_mean_error(copies, Observable(lambda), measures::quadratic(), SolverConfig::for_dimension(3)) ==
          doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("sinh2 closed form") {
  // Reference values computed with 30-digit arithmetic.
  const std::pair<double, double> reference[] = {
      {0.1, 0.165865833946542241}, {0.2, 0.259924874338474632}, {0.5, 0.404088979520536788},
      {1.0, 0.469428090763202628}, {2.0, 0.491844095941034793}, {5.0, 0.498671233928434765},
      {10.0, 0.499666952317053926}, {100.0, 0.499996666695238032}, {1000.0, 0.499999966666669524},
  };
  for (auto [sigma, value] : reference) {
    CAPTURE(sigma);
    const auto e = sinh_estimator_closed_form(sigma);
    CHECK(e.omega_20 == doctest::Approx(value).epsilon(1e-13));
    CHECK(e.omega_11 == 0.0);
    CHECK(e.omega_02 == -e.omega_20);
  }
  for (double sigma : {0.4, 0.8, 1.0, 1.7, 3.0, 6.0}) {
    CAPTURE(sigma);
    CHECK(sinh_estimator_closed_form(sigma).omega_20 == doctest::Approx(literal_omega20(sigma)).epsilon(1e-10));
  }
  // The literal form overflows where the stable one does not.
  CHECK(std::isfinite(sinh_estimator_closed_form(1e-3).omega_20));
  // For small sigma, e^{-4/sigma} terms vanish: omega_20 = (sigma/4) log(1 - x + x^2/2), x = 4/sigma.
  const double x = 4.0 / 1e-3;
  CHECK(sinh_estimator_closed_form(1e-3).omega_20 == doctest::Approx(0.25e-3 * std::log(1.0 - x + 0.5 * x * x)).epsilon(1e-13));
  CHECK(std::fabs(sinh_estimator_closed_form(1e6).omega_20 - 0.5) <= 1e-9);
  CHECK_THROWS_AS(sinh_estimator_closed_form(0.0), std::invalid_argument);
}

TEST_CASE("numerical sinh2 estimators agree with the closed form") {
  const Observable obs{1.0, -1.0};
  const auto cfg = SolverConfig::for_dimension(2);
  for (double sigma : {0.1, 0.3, 1.0, 4.0, 30.0, 100.0}) {
    CAPTURE(sigma);
    const auto w = measures::sinh_squared(sigma);
    const auto closed = sinh_estimator_closed_form(sigma);
    CHECK(std::fabs(minimize_w({2, 0}, obs, w, cfg).omega - closed.omega_20) <= 1e-8);
    CHECK(std::fabs(minimize_w({1, 1}, obs, w, cfg).omega) <= 1e-8);
    CHECK(std::fabs(minimize_w({0, 2}, obs, w, cfg).omega - closed.omega_02) <= 1e-8);
  }
}

TEST_CASE("unimodal measure: minimizer matches a fine grid") {
  const Observable obs{1.0, 0.2, -1.0};
  const auto cfg = SolverConfig::for_dimension(3);
  const auto w = measures::absolute_value();
  for (const auto& s : {Composition{2, 0, 0}, Composition{0, 1, 1}}) {
    CAPTURE(s.to_string());
    const auto m = minimize_w(s, obs, w, cfg);
    CHECK(m.omega >= obs.lambda_min());
    CHECK(m.omega <= obs.lambda_max());
    double grid_min = std::numeric_limits<double>::infinity();
    const int points = 2000;
    for (int i = 0; i <= points; ++i) {
      const double omega = obs.lambda_min() + (obs.lambda_max() - obs.lambda_min()) * i / points;
      grid_min = std::min(grid_min, w_function(s, omega, obs, w, cfg.quadrature));
    }
    CHECK(m.value <= grid_min + 1e-12);
  }
}

TEST_CASE("shift equivariance of the estimators") {
  const Observable obs{0.7, -0.3, -1.1};
  const auto cfg = SolverConfig::for_dimension(3);
  for (const auto& w : {measures::sinh_squared(0.6), measures::absolute_value()}) {
    const auto base = build_estimator_table(2, obs, w, cfg);
    const auto moved = build_estimator_table(2, obs.shifted(2.5), w, cfg);
    for (const auto& e : base.entries()) {
      CAPTURE(e.composition.to_string());
      CHECK(moved.estimator(e.composition) == doctest::Approx(e.estimator + 2.5).epsilon(1e-8));
      CHECK(moved.at(e.composition).min_weight == doctest::Approx(e.min_weight).epsilon(1e-9));
    }
  }
}

TEST_CASE("convexity of the weight function for smooth measures") {
  const Observable obs{1.0, -0.2, -1.0};
  const auto q = SimplexQuadratureConfig::for_dimension(3);
  for (const auto& w : {measures::quadratic(), measures::sinh_squared(0.5), measures::power(3.0)}) {
    for (const auto& s : enumerate_compositions(2, 3)) {
      const double h = 0.05;
      for (double omega = obs.lambda_min() - 1.0 + h; omega <= obs.lambda_max() + 1.0 - h; omega += 0.2) {
        const double d2 = w_function(s, omega + h, obs, w, q) - 2 * w_function(s, omega, obs, w, q) +
                          w_function(s, omega - h, obs, w, q);
        CHECK(d2 / (h * h) >= -1e-9);
      }
    }
  }
}

TEST_CASE("constant observable") {
  const Observable obs{0.4, 0.4};
  const auto table = build_estimator_table(3, obs, measures::sinh_squared(1.0), SolverConfig::for_dimension(2));
  CHECK(table.min_mean_error() == 0.0);
  for (const auto& e : table.entries()) CHECK(e.estimator == 0.4);
}

TEST_CASE("estimator table bookkeeping") {
  const Observable obs{1.0, -1.0};
  const auto table = build_estimator_table(2, obs, measures::absolute_value(), SolverConfig::for_dimension(2));
  CHECK(table.entries().size() == 3);
  CHECK(table.copies() == 2);
  CHECK_FALSE(table.at({2, 0}).unique);
  CHECK(table.find({1, 0}) == nullptr);
  CHECK_THROWS_AS(table.at({3, 0}), std::out_of_range);
  CHECK_THROWS_AS(build_estimator_table(0, obs, measures::quadratic(), SolverConfig::for_dimension(2)),
                  std::invalid_argument);
  CHECK(build_estimator_table(1, obs, measures::quadratic(), SolverConfig::for_dimension(2)).at({1, 0}).unique);
}

TEST_CASE("solver failures name the composition") {
  const Observable obs{1.0, -1.0};
  DeviationMeasure broken{"broken", [](double x) { return x > 0.3 ? std::nan("") : x * x; }};
  try {
    build_estimator_table(1, obs, broken, SolverConfig::for_dimension(2));
    FAIL("expected a SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("(1,0)") != std::string::npos);
  }
}

TEST_CASE("Dirichlet tilt prior: estimators and mean error against moments") {
  // Tilt p_1^(alpha_1 - 1) p_2^(alpha_2 - 1) with alpha = (2, 1) turns
  // w'_s into the uniform weight of s + (1, 0); the prior mass is 1/2.
  const std::vector<double> lambda{1.0, -1.0};
  const Observable obs(lambda);
  const auto table = build_estimator_table(2, obs, measures::quadratic(), SolverConfig::for_dimension(2),
                                           DirichletTilt{{2.0, 1.0}});
  CHECK(table.prior_mass() == doctest::Approx(0.5).epsilon(1e-13));
  double expected = 0.0;
  for (const auto& e : table.entries()) {
    const Composition shifted{e.composition[0] + 1, e.composition[1]};
    const auto o = quadratic_oracle(shifted, lambda);
    CHECK(std::fabs(e.estimator - o.omega) <= 1e-9);
    expected += static_cast<double>(multinomial_weight(e.composition)) * o.value;
  }
  CHECK(table.min_mean_error() == doctest::Approx(expected / 0.5).epsilon(1e-10));
}
