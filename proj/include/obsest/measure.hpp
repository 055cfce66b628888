#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace obsest {

/// How much regularity a deviation measure W is declared to have.
///  SmoothConvex: W(0) = 0, W > 0 elsewhere, W' has the sign of x, W'' >= 0.
///  Unimodal:     W(0) = 0, W > 0 elsewhere, non-increasing left of 0 and
///                non-decreasing right of 0 (continuity assumed, not checked).
enum class Regularity { SmoothConvex, Unimodal };

std::string to_string(Regularity r);

/// A measure of deviation W(x) between estimate and true expectation value.
struct DeviationMeasure {
  std::string name;
  std::function<double(double)> eval;
  /// Optional W'(x); used to polish minimizers. May be empty.
  std::function<double(double)> derivative;
  Regularity regularity = Regularity::SmoothConvex;
  std::map<std::string, double> parameters;
  /// Points where W is not smooth; integrators split panels there.
  std::vector<double> kinks;
  /// W behaves like |x - kink|^q with non-integer q at its kinks; integrators
  /// grade panels geometrically towards them.
  bool fractional_kinks = false;

  double operator()(double x) const { return eval(x); }
  bool has_derivative() const { return static_cast<bool>(derivative); }
};

namespace measures {

DeviationMeasure quadratic();
/// sigma^2 sinh^2(x / sigma); tends to x^2 as sigma grows.
DeviationMeasure sinh_squared(double sigma);
DeviationMeasure absolute_value();
/// |x|^p with p >= 1. Declared SmoothConvex for p >= 2, Unimodal otherwise.
DeviationMeasure power(double p);

}  // namespace measures

struct ConditionCheck {
  std::string condition;  // "a", "b", "c" or "b'"
  bool passed = true;
  double worst_x = 0.0;   // grid point of the first failure
  std::string detail;
};

struct MeasureValidation {
  std::vector<ConditionCheck> checks;
  /// Declared regularity agrees with what the grid shows.
  bool consistent = false;

  const ConditionCheck& check(const std::string& condition) const;
  bool passed(const std::string& condition) const { return check(condition).passed; }
};

/// Spot-check conditions (a), (b), (c) and (b') on a grid using central
/// differences with relative step 1e-5. The grid must contain 0 and points on
/// both sides of it.
MeasureValidation validate_measure(const DeviationMeasure& w, std::span<const double> grid);

/// Uniform grid on [lo, hi] with `points` points that always includes 0.
std::vector<double> symmetric_grid(double half_width, int points_per_side);

}  // namespace obsest
