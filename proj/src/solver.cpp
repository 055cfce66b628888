#include "obsest/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace obsest {

SolverConfig SolverConfig::for_dimension(int dim) {
  SolverConfig cfg;
  cfg.quadrature = SimplexQuadratureConfig::for_dimension(dim);
  return cfg;
}

Minimum golden_section_minimize(const std::function<double(double)>& objective, double lo,
                                double hi, double tol, int max_iters) {
  if (!(tol > 0.0)) throw std::invalid_argument("golden-section tolerance must be positive");
  if (hi < lo) std::swap(lo, hi);
  if (hi == lo) return {lo, objective(lo)};

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < max_iters && (b - a) > tol; ++it) {
    if (!std::isfinite(fc) || !std::isfinite(fd))
      throw SolverError("objective is not finite during golden-section search");
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double x = 0.5 * (a + b);
  const double fx = objective(x);
  if (!std::isfinite(fx)) throw SolverError("objective is not finite at the minimizer");
  // The interior probes can beat the midpoint on a flat minimum.
  if (fc < fx && fc <= fd) return {c, fc};
  if (fd < fx) return {d, fd};
  return {x, fx};
}

namespace {

using ScalarFn = std::function<double(double)>;

Minimum minimize_with(const ScalarFn& objective, const ScalarFn* slope, double lo, double hi,
                      const SolverConfig& cfg) {
  if (!(cfg.omega_tol > 0.0)) throw std::invalid_argument("omega_tol must be positive");
  const Minimum golden = golden_section_minimize(objective, lo, hi, cfg.omega_tol, cfg.max_iters);
  if (!slope) return golden;

  // Grow a bracket around the golden-section point until the slope changes sign.
  const double x0 = golden.omega;
  const double g0 = (*slope)(x0);
  if (!std::isfinite(g0)) throw SolverError("objective derivative is not finite");
  if (g0 == 0.0) return golden;
  const double dir = g0 > 0.0 ? -1.0 : 1.0;
  double near = x0, far = x0;
  double step = 4.0 * cfg.omega_tol;
  bool bracketed = false;
  for (int it = 0; it < 64; ++it) {
    far = std::clamp(x0 + dir * step, lo, hi);
    const double g = (*slope)(far);
    if ((g0 > 0.0 && g <= 0.0) || (g0 < 0.0 && g >= 0.0)) {
      bracketed = true;
      break;
    }
    near = far;
    if (far == lo || far == hi) break;
    step *= 4.0;
  }
  double x = far;
  if (bracketed) {
    double a = near, b = far;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid == a || mid == b) break;
      const double g = (*slope)(mid);
      if (g == 0.0) {
        a = b = mid;
        break;
      }
      if ((g > 0.0) == (g0 > 0.0)) a = mid;
      else b = mid;
    }
    x = 0.5 * (a + b);
  }
  const double fx = objective(x);
  if (std::isfinite(fx) && fx <= golden.value + 1e-12 * std::fabs(golden.value)) return {x, fx};
  return golden;
}

// The polish only reads the sign of the slope, and every accepted point is
// re-checked against the objective at full accuracy. Slopes of measures with
// fractional kinks (|x|^p, 1 < p < 3) converge more slowly than the objective.
SimplexQuadratureConfig slope_quadrature(SimplexQuadratureConfig q) {
  q.rel_tol = std::max(q.rel_tol, 1e-9);
  return q;
}

std::string failure_message(const Composition& s, const std::exception& e) {
  return "minimization failed for composition " + s.to_string() + ": " + e.what();
}

}  // namespace

Minimum minimize_mixture(std::span<const Composition> comps, std::span<const double> coeffs,
                         const Observable& obs, const DeviationMeasure& w,
                         const SimplexPrior& prior, const SolverConfig& cfg) {
  const double lo = obs.lambda_min(), hi = obs.lambda_max();
  if (obs.is_constant()) return {lo, 0.0};
  const ScalarFn objective = [&](double omega) {
    return mixed_w_function(comps, coeffs, omega, obs, w, prior, cfg.quadrature).value;
  };
  const SimplexQuadratureConfig slope_cfg = slope_quadrature(cfg.quadrature);
  const ScalarFn slope = [&](double omega) {
    return mixed_w_function(comps, coeffs, omega, obs, w, prior, slope_cfg, true).value;
  };
  return minimize_with(objective, w.has_derivative() ? &slope : nullptr, lo, hi, cfg);
}

Minimum minimize_w(const Composition& s, const Observable& obs, const DeviationMeasure& w,
                   const SolverConfig& cfg) {
  if (s.dim() != obs.dim()) throw std::invalid_argument("composition does not match observable");
  if (obs.is_constant()) return {obs.lambda_min(), 0.0};
  const ScalarFn objective = [&](double omega) {
    return w_function(s, omega, obs, w, cfg.quadrature);
  };
  const SimplexQuadratureConfig slope_cfg = slope_quadrature(cfg.quadrature);
  const ScalarFn slope = [&](double omega) {
    return w_derivative(s, omega, obs, w, slope_cfg);
  };
  return minimize_with(objective, w.has_derivative() ? &slope : nullptr, obs.lambda_min(),
                       obs.lambda_max(), cfg);
}

Minimum minimize_w_nonuniform(const Composition& s, const Observable& obs,
                              const DeviationMeasure& w, const SimplexPrior& prior,
                              const SolverConfig& cfg) {
  if (std::holds_alternative<UniformPrior>(prior)) return minimize_w(s, obs, w, cfg);
  const Composition comps[] = {s};
  const double coeffs[] = {1.0};
  return minimize_mixture(comps, coeffs, obs, w, prior, cfg);
}

double quadratic_estimator_closed_form(const Composition& s, const Observable& obs) {
  if (s.dim() != obs.dim()) throw std::invalid_argument("composition does not match observable");
  const double denom = s.copies() + s.dim();
  double acc = 0.0;
  for (int n = 0; n < s.dim(); ++n) acc += obs.eigenvalue(n) * (s[n] + 1.0) / denom;
  return acc;
}

namespace {

// With x = 4 / sigma the ratio of sinh/cosh combinations in omega_20 equals
// e^x * A(x) / B(x), where
//   A(x) = 1 - x + x^2/2 - e^{-x} = sum_{k>=3} (-1)^{k+1} x^k / k!
//   B(x) = e^x - 1 - x - x^2/2   = sum_{k>=3} x^k / k!
// Both share the x^3/6 leading term, which cancels in the ratio.
double log_ratio_a_over_b(double x) {
  if (x < 2.0) {
    double sa = 0.0, sb = 0.0, term = 1.0;  // term = 6 x^j / (j+3)!
    for (int j = 0; j < 60; ++j) {
      if (j > 0) term *= x / (j + 3.0);
      sa += (j % 2 == 0 ? term : -term);
      sb += term;
      if (term < 1e-18 * sb) break;
    }
    return std::log(sa) - std::log(sb);
  }
  const double log_a = std::log(1.0 - x + 0.5 * x * x - std::exp(-x));
  const double log_b = x + std::log1p(-std::exp(-x) * (1.0 + x + 0.5 * x * x));
  return log_a - log_b;
}

}  // namespace

SinhEstimators sinh_estimator_closed_form(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be positive");
  const double x = 4.0 / sigma;
  const double omega20 = 0.25 * sigma * (x + log_ratio_a_over_b(x));
  return {omega20, 0.0, -omega20};
}

EstimatorTable::EstimatorTable(Observable obs, DeviationMeasure measure, SimplexPrior prior,
                               double prior_mass, std::vector<EstimatorEntry> entries)
    : obs_(std::move(obs)), measure_(std::move(measure)), prior_(std::move(prior)),
      prior_mass_(prior_mass), entries_(std::move(entries)) {
  if (!(prior_mass_ > 0.0)) throw std::invalid_argument("prior mass must be positive");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& c = entries_[i].composition;
    if (c.dim() != obs_.dim()) throw std::invalid_argument("table entry does not match observable");
    if (!index_.emplace(c, i).second)
      throw std::invalid_argument("duplicate composition " + c.to_string() + " in table");
  }
}

const EstimatorEntry* EstimatorTable::find(const Composition& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

const EstimatorEntry& EstimatorTable::at(const Composition& s) const {
  if (const auto* e = find(s)) return *e;
  throw std::out_of_range("no estimator for composition " + s.to_string());
}

double EstimatorTable::min_mean_error() const {
  double acc = 0.0;
  for (const auto& e : entries_)
    acc += static_cast<double>(multinomial_weight(e.composition)) * e.min_weight;
  return acc / prior_mass_;
}

EstimatorTable build_estimator_table(int copies, const Observable& obs, const DeviationMeasure& w,
                                     const SolverConfig& cfg, const SimplexPrior& prior) {
  if (copies < 1) throw std::invalid_argument("need at least one copy");
  std::vector<EstimatorEntry> entries;
  for (const auto& s : enumerate_compositions(copies, obs.dim())) {
    try {
      const Minimum m = minimize_w_nonuniform(s, obs, w, prior, cfg);
      entries.push_back({s, m.omega, m.value, w.regularity == Regularity::SmoothConvex});
    } catch (const std::exception& e) {
      throw SolverError(failure_message(s, e));
    }
  }
  const double mass = prior_mass(prior, obs.dim(), cfg.quadrature).value;
  return EstimatorTable(obs, w, prior, mass, std::move(entries));
}

double min_mean_error(int copies, const Observable& obs, const DeviationMeasure& w,
                      const SolverConfig& cfg) {
  return build_estimator_table(copies, obs, w, cfg).min_mean_error();
}

}  // namespace obsest
