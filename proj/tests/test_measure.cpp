#include "obsest/measure.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>

using namespace obsest;

namespace {

std::vector<double> grid() { return symmetric_grid(3.0, 60); }

}  // namespace

TEST_CASE("catalog measures pass their declared conditions") {
  for (const auto& w : {measures::quadratic(), measures::sinh_squared(0.3), measures::sinh_squared(5.0),
                        measures::power(2.0), measures::power(3.5), measures::power(4.0)}) {
    CAPTURE(w.name);
    const auto v = validate_measure(w, grid());
    CHECK(w.regularity == Regularity::SmoothConvex);
    CHECK(v.check("a").passed);
    CHECK(v.check("b").passed);
    CHECK(v.check("c").passed);
    CHECK(v.consistent);
  }
}

TEST_CASE("absolute value is unimodal and fails twice differentiability at the origin") {
  const auto w = measures::absolute_value();
  CHECK(w.regularity == Regularity::Unimodal);
  const auto v = validate_measure(w, grid());
  CHECK(v.check("a").passed);
  CHECK(v.check("b'").passed);
  CHECK_FALSE(v.check("c").passed);
  CHECK(v.check("c").worst_x == 0.0);
  CHECK(v.consistent);
  CHECK(w.kinks == std::vector<double>{0.0});
}

TEST_CASE("power measure classification") {
  CHECK(measures::power(1.5).regularity == Regularity::Unimodal);
  CHECK(measures::power(1.5).fractional_kinks);
  CHECK(measures::power(3.0).kinks == std::vector<double>{0.0});
  CHECK_FALSE(measures::power(3.0).fractional_kinks);
  CHECK(measures::power(4.0).kinks.empty());
  CHECK_THROWS_AS(measures::power(0.5), std::invalid_argument);
  CHECK_THROWS_AS(measures::sinh_squared(0.0), std::invalid_argument);
  CHECK_THROWS_AS(measures::sinh_squared(-1.0), std::invalid_argument);
}

TEST_CASE("declared derivatives agree with central differences") {
  for (const auto& w : {measures::quadratic(), measures::sinh_squared(0.7), measures::power(2.5),
                        measures::absolute_value()}) {
    CAPTURE(w.name);
    REQUIRE(w.has_derivative());
    for (double x : {-1.7, -0.4, 0.3, 1.1, 2.6}) {
      const double h = 1e-6;
      const double fd = (w(x + h) - w(x - h)) / (2 * h);
      CHECK(w.derivative(x) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("sinh2 matches its literal definition and tends to x^2") {
  const auto w = measures::sinh_squared(2.0);
  for (double x : {-1.0, 0.25, 1.5}) CHECK(w(x) == doctest::Approx(4.0 * std::pow(std::sinh(x / 2.0), 2)));
  const auto wide = measures::sinh_squared(1e4);
  CHECK(wide(0.8) == doctest::Approx(0.64).epsilon(1e-8));
  CHECK(w.parameters.at("sigma") == 2.0);
}

TEST_CASE("validation flags broken measures") {
  DeviationMeasure offset{"offset", [](double x) { return x * x + 1.0; }};
  CHECK_FALSE(validate_measure(offset, grid()).check("a").passed);
  CHECK_FALSE(validate_measure(offset, grid()).consistent);

  DeviationMeasure wiggly{"wiggly", [](double x) { return x * x * (1.5 + std::cos(8.0 * x)); }};
  const auto v = validate_measure(wiggly, grid());
  CHECK(v.check("a").passed);
  CHECK_FALSE(v.check("b").passed);
  CHECK_FALSE(v.consistent);

  DeviationMeasure concave{"sqrt", [](double x) { return std::sqrt(std::fabs(x)); }};
  concave.regularity = Regularity::Unimodal;
  CHECK(validate_measure(concave, grid()).consistent);
  concave.regularity = Regularity::SmoothConvex;
  CHECK_FALSE(validate_measure(concave, grid()).consistent);
}

TEST_CASE("validation grid requirements") {
  const auto w = measures::quadratic();
  CHECK_THROWS_AS(validate_measure(w, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(validate_measure(w, std::vector<double>{-1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_measure(w, std::vector<double>{0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(symmetric_grid(1.0, 0), std::invalid_argument);
  CHECK(symmetric_grid(2.0, 4).size() == 9);
}
