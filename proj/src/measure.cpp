#include "obsest/measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace obsest {

std::string to_string(Regularity r) {
  return r == Regularity::SmoothConvex ? "smooth-convex" : "unimodal";
}

namespace measures {

DeviationMeasure quadratic() {
  DeviationMeasure w;
  w.name = "quadratic";
  w.eval = [](double x) { return x * x; };
  w.derivative = [](double x) { return 2.0 * x; };
  w.regularity = Regularity::SmoothConvex;
  return w;
}

DeviationMeasure sinh_squared(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::invalid_argument("sinh2 measure needs sigma > 0");
  DeviationMeasure w;
  w.name = "sinh2";
  w.eval = [sigma](double x) {
    const double s = std::sinh(x / sigma);
    return sigma * sigma * s * s;
  };
  w.derivative = [sigma](double x) { return sigma * std::sinh(2.0 * x / sigma); };
  w.regularity = Regularity::SmoothConvex;
  w.parameters["sigma"] = sigma;
  return w;
}

DeviationMeasure absolute_value() {
  DeviationMeasure w;
  w.name = "abs";
  w.eval = [](double x) { return std::fabs(x); };
  w.derivative = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
  w.regularity = Regularity::Unimodal;
  w.kinks = {0.0};
  return w;
}

DeviationMeasure power(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("power measure needs p >= 1");
  DeviationMeasure w;
  w.name = "power";
  w.eval = [p](double x) { return std::pow(std::fabs(x), p); };
  w.derivative = [p](double x) {
    if (x == 0.0) return 0.0;
    const double g = p * std::pow(std::fabs(x), p - 1.0);
    return x > 0.0 ? g : -g;
  };
  w.regularity = p >= 2.0 ? Regularity::SmoothConvex : Regularity::Unimodal;
  w.parameters["p"] = p;
  const bool even_integer = p == std::floor(p) && static_cast<long long>(p) % 2 == 0;
  if (!even_integer) w.kinks = {0.0};
  w.fractional_kinks = p != std::floor(p);
  return w;
}

}  // namespace measures

const ConditionCheck& MeasureValidation::check(const std::string& condition) const {
  for (const auto& c : checks)
    if (c.condition == condition) return c;
  throw std::out_of_range("no such condition: " + condition);
}

namespace {

void fail(ConditionCheck& c, double x, const std::string& why) {
  if (!c.passed) return;
  c.passed = false;
  c.worst_x = x;
  std::ostringstream os;
  os.precision(17);
  os << why << " at x = " << x;
  c.detail = os.str();
}

}  // namespace

MeasureValidation validate_measure(const DeviationMeasure& w, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("validation grid is empty");
  std::vector<double> xs(grid.begin(), grid.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (!std::binary_search(xs.begin(), xs.end(), 0.0))
    throw std::invalid_argument("validation grid must contain 0");
  if (xs.front() >= 0.0 || xs.back() <= 0.0)
    throw std::invalid_argument("validation grid must span negative and positive values");

  ConditionCheck a, b, c, bp;
  a.condition = "a";
  b.condition = "b";
  c.condition = "c";
  bp.condition = "b'";

  if (w(0.0) != 0.0) fail(a, 0.0, "W(0) != 0");
  for (double x : xs) {
    const double v = w(x);
    if (!std::isfinite(v)) {
      fail(a, x, "W not finite");
      continue;
    }
    if (x != 0.0 && !(v > 0.0)) fail(a, x, "W(x) <= 0 for x != 0");

    const double h = 1e-5 * std::max(1.0, std::fabs(x));
    if (x != 0.0) {
      const double d1 = (w(x + h) - w(x - h)) / (2.0 * h);
      if (x > 0.0 && !(d1 > 0.0)) fail(b, x, "W' <= 0 for x > 0");
      if (x < 0.0 && !(d1 < 0.0)) fail(b, x, "W' >= 0 for x < 0");
    }

    // Second differences at two step sizes; a kink shows up as an O(1/h)
    // value that does not settle when h is halved.
    const double d2 = (w(x + h) - 2.0 * v + w(x - h)) / (h * h);
    const double h2 = 0.5 * h;
    const double d2_half = (w(x + h2) - 2.0 * v + w(x - h2)) / (h2 * h2);
    const double noise = 1e-3 * std::max({1.0, std::fabs(d2), std::fabs(d2_half)});
    const double roundoff = 64.0 * 2.2e-16 * std::max(1.0, std::fabs(v)) / (h2 * h2);
    if (d2 < -roundoff) fail(c, x, "W'' < 0");
    else if (std::fabs(d2 - d2_half) > noise + roundoff) fail(c, x, "W not twice differentiable");
  }

  // (b'): monotone on each side of the origin, checked on consecutive grid points.
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double lo = xs[i], hi = xs[i + 1];
    if (hi <= 0.0 && w(lo) < w(hi)) fail(bp, hi, "W increasing for x < 0");
    if (lo >= 0.0 && w(hi) < w(lo)) fail(bp, hi, "W decreasing for x > 0");
  }

  MeasureValidation report;
  report.checks = {a, b, c, bp};
  if (w.regularity == Regularity::SmoothConvex)
    report.consistent = a.passed && b.passed && c.passed;
  else
    report.consistent = a.passed && bp.passed;
  return report;
}

std::vector<double> symmetric_grid(double half_width, int points_per_side) {
  if (points_per_side < 1 || !(half_width > 0.0))
    throw std::invalid_argument("invalid grid shape");
  std::vector<double> xs;
  xs.reserve(static_cast<std::size_t>(2 * points_per_side + 1));
  for (int i = -points_per_side; i <= points_per_side; ++i)
    xs.push_back(half_width * i / points_per_side);
  return xs;
}

}  // namespace obsest
