#include "obsest/simplex.hpp"

#include "obsest/gauss_rules.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <tuple>

namespace obsest {

SimplexQuadratureConfig SimplexQuadratureConfig::monte_carlo(std::uint64_t samples,
                                                             std::uint64_t seed) {
  SimplexQuadratureConfig cfg;
  cfg.method = SimplexMethod::MonteCarlo;
  cfg.mc_samples = samples;
  cfg.seed = seed;
  return cfg;
}

SimplexQuadratureConfig SimplexQuadratureConfig::for_dimension(int dim) {
  SimplexQuadratureConfig cfg;
  if (dim > kMaxTensorDimension) cfg.method = SimplexMethod::MonteCarlo;
  return cfg;
}

namespace {

bool is_nonnegative_integer(double v) { return v >= 0.0 && v == std::floor(v); }

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

void check_alpha(std::span<const double> alpha) {
  if (alpha.empty()) throw std::invalid_argument("Dirichlet parameters are empty");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("Dirichlet parameters must be positive and finite");
}

// One fixed-order pass of the stick-breaking tensor rule.
class TensorPass {
public:
  TensorPass(const SimplexFunction& f, std::span<const double> alpha, int order,
             const KinkPlanes* kinks)
      : f_(f), alpha_(alpha), order_(order), kinks_(kinks), dim_(alpha.size()),
        p_(alpha.size(), 0.0), tail_(alpha.size(), 0.0) {
    for (std::size_t k = dim_; k-- > 0;) tail_[k] = alpha_[k] + (k + 1 < dim_ ? tail_[k + 1] : 0.0);
  }

  // Returns (integral of f, integral of |f|).
  std::pair<double, double> run() { return level(0, 1.0, 0.0); }

private:
  struct PanelRule {
    std::vector<double> u;
    std::vector<double> weight;
  };

  const quad::GaussRule& jacobi(double right_exp, double left_exp) {
    const auto key = std::make_tuple(order_, right_exp, left_exp);
    auto it = jacobi_cache_.find(key);
    if (it == jacobi_cache_.end())
      it = jacobi_cache_.emplace(key, quad::gauss_jacobi(order_, right_exp, left_exp)).first;
    return it->second;
  }

  std::vector<double> breakpoints(std::size_t k, double mass, double acc) const {
    std::vector<double> pts{0.0, 1.0};
    if (!kinks_) return pts;
    const auto& dir = kinks_->direction;
    std::vector<double> kink_pts;
    for (double level : kinks_->levels) {
      // Vertices of the remaining simplex: all remaining mass on component j > k.
      for (std::size_t j = k + 1; j < dim_; ++j) {
        const double slope = mass * (dir[k] - dir[j]);
        if (slope == 0.0) continue;
        const double u = (level - acc - dir[j] * mass) / slope;
        if (u > 0.0 && u < 1.0) kink_pts.push_back(u);
      }
    }
    if (kink_pts.empty()) return pts;
    pts.insert(pts.end(), kink_pts.begin(), kink_pts.end());
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (kinks_->graded) {
      // Geometric refinement towards every kink point, on both sides.
      std::vector<double> graded = pts;
      for (double kp : kink_pts) {
        auto it = std::lower_bound(pts.begin(), pts.end(), kp);
        const double left = *(it - 1), right = *(it + 1);
        for (int j = 1; j <= kGradingLevels; ++j) {
          const double r = std::pow(kGradingRatio, j);
          graded.push_back(kp - (kp - left) * r);
          graded.push_back(kp + (right - kp) * r);
        }
      }
      std::sort(graded.begin(), graded.end());
      graded.erase(std::unique(graded.begin(), graded.end()), graded.end());
      return graded;
    }
    return pts;
  }

  std::pair<double, double> level(std::size_t k, double mass, double acc) {
    if (k + 1 == dim_) {
      p_[k] = mass;
      const double v = f_(p_);
      return {v, std::fabs(v)};
    }
    const double a = alpha_[k];
    const double b = tail_[k + 1];
    const double lnb = log_beta(a, b);
    const bool left_smooth = is_nonnegative_integer(a - 1.0);
    const bool right_smooth = is_nonnegative_integer(b - 1.0);
    const double dir_k = kinks_ ? kinks_->direction[k] : 0.0;

    const std::vector<double> pts = breakpoints(k, mass, acc);
    double sum = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double lo = pts[i], hi = pts[i + 1];
      const double half = 0.5 * (hi - lo);
      const double el = (lo == 0.0 && !left_smooth) ? a - 1.0 : 0.0;
      const double er = (hi == 1.0 && !right_smooth) ? b - 1.0 : 0.0;
      const quad::GaussRule& rule =
          (el == 0.0 && er == 0.0) ? quad::gauss_legendre(order_) : jacobi(er, el);
      const double scale = std::pow(half, 1.0 + el + er);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const double u = lo + half * (rule.nodes[q] + 1.0);
        const double dens =
            std::exp((a - 1.0 - el) * std::log(u) + (b - 1.0 - er) * std::log1p(-u) - lnb);
        const double wq = rule.weights[q] * scale * dens;
        if (wq == 0.0) continue;
        p_[k] = mass * u;
        const auto [v, av] = level(k + 1, mass * (1.0 - u), acc + dir_k * mass * u);
        sum += wq * v;
        abs_sum += wq * av;
      }
    }
    return {sum, abs_sum};
  }

  static constexpr int kGradingLevels = 12;
  static constexpr double kGradingRatio = 0.25;

  const SimplexFunction& f_;
  std::span<const double> alpha_;
  int order_;
  const KinkPlanes* kinks_;
  std::size_t dim_;
  std::vector<double> p_;
  std::vector<double> tail_;
  std::map<std::tuple<int, double, double>, quad::GaussRule> jacobi_cache_;
};

int max_order(std::size_t dim) {
  switch (dim) {
    case 1:
    case 2: return 256;
    case 3: return 64;
    default: return 32;
  }
}

IntegralEstimate tensor_expectation(const SimplexFunction& f, std::span<const double> alpha,
                                    const SimplexQuadratureConfig& cfg, const KinkPlanes* kinks) {
  if (alpha.size() > static_cast<std::size_t>(kMaxTensorDimension))
    throw std::invalid_argument("tensor quadrature is limited to d <= " +
                                std::to_string(kMaxTensorDimension) + "; use Monte Carlo");
  if (kinks && kinks->direction.size() != alpha.size())
    throw std::invalid_argument("kink direction does not match simplex dimension");
  if (alpha.size() == 1) {
    const std::array<double, 1> vertex{1.0};
    return {f(vertex), 0.0};
  }

  double prev = TensorPass(f, alpha, 8, kinks).run().first;
  double last_err = 0.0;
  for (int order = 16; order <= max_order(alpha.size()); order *= 2) {
    const auto [cur, abs_cur] = TensorPass(f, alpha, order, kinks).run();
    if (!std::isfinite(cur)) throw QuadratureError("simplex quadrature produced a non-finite value");
    last_err = std::fabs(cur - prev);
    if (last_err <= cfg.rel_tol * abs_cur) return {cur, last_err};
    prev = cur;
  }
  std::ostringstream os;
  os.precision(17);
  os << "simplex quadrature did not reach rel_tol " << cfg.rel_tol << " (d = " << alpha.size()
     << ", max order " << max_order(alpha.size()) << ", last estimate " << prev
     << ", last difference " << last_err << ")";
  throw QuadratureError(os.str());
}

IntegralEstimate mc_expectation(const SimplexFunction& f, std::span<const double> alpha,
                                const SimplexQuadratureConfig& cfg) {
  if (cfg.mc_samples < 2) throw std::invalid_argument("Monte Carlo needs at least two samples");
  std::mt19937_64 rng(cfg.seed);
  std::vector<double> p(alpha.size());
  double mean = 0.0, m2 = 0.0;
  for (std::uint64_t i = 0; i < cfg.mc_samples; ++i) {
    sample_dirichlet(alpha, rng, std::span<double>(p));
    const double v = f(p);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  if (!std::isfinite(mean)) throw QuadratureError("Monte Carlo estimate is not finite");
  const auto n = static_cast<double>(cfg.mc_samples);
  return {mean, std::sqrt(m2 / (n - 1.0) / n)};
}

KinkPlanes measure_kinks(const DeviationMeasure& w, const Observable& obs, double omega) {
  // W(omega - lambda.p) is non-smooth where lambda.p = omega - kink.
  KinkPlanes planes;
  planes.direction.assign(obs.eigenvalues().begin(), obs.eigenvalues().end());
  for (double kink : w.kinks) planes.levels.push_back(omega - kink);
  planes.graded = w.fractional_kinks;
  return planes;
}

void check_shape(std::size_t dim, const Observable& obs) {
  if (dim != static_cast<std::size_t>(obs.dim()))
    throw std::invalid_argument("composition dimension does not match observable");
}

double log_dirichlet_normalizer(std::span<const double> alpha) {
  double acc = -std::lgamma(std::accumulate(alpha.begin(), alpha.end(), 0.0));
  for (double a : alpha) acc += std::lgamma(a);
  return acc;
}

// Gamma(d) prod Gamma(e+1)/Gamma(sum e + d) E_{Dir(e+1)}[h(omega - lambda.p) * extra(p)].
IntegralEstimate weighted_integral(std::span<const double> exponents, double omega,
                                   const Observable& obs, const std::function<double(double)>& h,
                                   const DeviationMeasure& w, const SimplexQuadratureConfig& cfg,
                                   const std::function<double(std::span<const double>)>* extra) {
  check_shape(exponents.size(), obs);
  std::vector<double> alpha(exponents.size());
  for (std::size_t n = 0; n < alpha.size(); ++n) {
    if (!(exponents[n] > -1.0)) throw std::invalid_argument("exponents must exceed -1");
    alpha[n] = exponents[n] + 1.0;
  }
  const auto lambdas = obs.eigenvalues();
  SimplexFunction integrand = [&](std::span<const double> p) {
    double x = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) x += lambdas[n] * p[n];
    const double v = h(omega - x);
    return extra ? v * (*extra)(p) : v;
  };
  const double prefactor =
      std::exp(std::lgamma(static_cast<double>(alpha.size())) + log_dirichlet_normalizer(alpha));

  IntegralEstimate e;
  if (cfg.method == SimplexMethod::MonteCarlo) {
    e = mc_expectation(integrand, alpha, cfg);
  } else {
    if (extra) throw std::invalid_argument("callable priors require Monte Carlo integration");
    const KinkPlanes planes = measure_kinks(w, obs, omega);
    e = tensor_expectation(integrand, alpha, cfg, planes.levels.empty() ? nullptr : &planes);
  }
  return {prefactor * e.value, prefactor * e.error_estimate};
}

std::vector<double> as_exponents(const Composition& s) {
  return {s.counts().begin(), s.counts().end()};
}

}  // namespace

IntegralEstimate dirichlet_expectation(const SimplexFunction& f, std::span<const double> alpha,
                                       const SimplexQuadratureConfig& cfg,
                                       const KinkPlanes* kinks) {
  check_alpha(alpha);
  if (!(cfg.rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
  if (cfg.method == SimplexMethod::MonteCarlo) return mc_expectation(f, alpha, cfg);
  return tensor_expectation(f, alpha, cfg, kinks);
}

std::string describe(const SimplexPrior& prior) {
  struct Visitor {
    std::string operator()(const UniformPrior&) const { return "haar"; }
    std::string operator()(const DirichletTilt& t) const {
      std::ostringstream os;
      os.precision(17);
      os << "dirichlet:";
      for (std::size_t n = 0; n < t.alpha.size(); ++n) os << (n ? "," : "") << t.alpha[n];
      return os.str();
    }
    std::string operator()(const CallablePrior& c) const { return c.label; }
  };
  return std::visit(Visitor{}, prior);
}

IntegralEstimate prior_mass(const SimplexPrior& prior, int dim, const SimplexQuadratureConfig& cfg) {
  if (std::holds_alternative<UniformPrior>(prior)) return {1.0, 0.0};
  if (const auto* tilt = std::get_if<DirichletTilt>(&prior)) {
    check_alpha(tilt->alpha);
    if (tilt->alpha.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("Dirichlet tilt does not match dimension");
    // E_Haar[prod p^(alpha-1)] = Gamma(d) B(alpha).
    return {std::exp(std::lgamma(static_cast<double>(dim)) + log_dirichlet_normalizer(tilt->alpha)),
            0.0};
  }
  const auto& callable = std::get<CallablePrior>(prior);
  if (cfg.method != SimplexMethod::MonteCarlo)
    throw std::invalid_argument("callable priors require Monte Carlo integration");
  const std::vector<double> ones(static_cast<std::size_t>(dim), 1.0);
  SimplexFunction g = [&](std::span<const double> p) {
    const double v = callable.density(p);
    if (!(v >= 0.0)) throw std::domain_error("prior density is negative or NaN");
    return v;
  };
  return mc_expectation(g, ones, cfg);
}

IntegralEstimate w_function_exponents(std::span<const double> exponents, double omega,
                                      const Observable& obs, const DeviationMeasure& w,
                                      const SimplexQuadratureConfig& cfg) {
  return weighted_integral(exponents, omega, obs, w.eval, w, cfg, nullptr);
}

IntegralEstimate w_function_estimate(const Composition& s, double omega, const Observable& obs,
                                     const DeviationMeasure& w,
                                     const SimplexQuadratureConfig& cfg) {
  const auto e = as_exponents(s);
  return w_function_exponents(e, omega, obs, w, cfg);
}

double w_function(const Composition& s, double omega, const Observable& obs,
                  const DeviationMeasure& w, const SimplexQuadratureConfig& cfg) {
  return w_function_estimate(s, omega, obs, w, cfg).value;
}

double w_derivative(const Composition& s, double omega, const Observable& obs,
                    const DeviationMeasure& w, const SimplexQuadratureConfig& cfg) {
  if (!w.has_derivative()) throw std::invalid_argument("measure '" + w.name + "' has no derivative");
  const auto e = as_exponents(s);
  return weighted_integral(e, omega, obs, w.derivative, w, cfg, nullptr).value;
}

IntegralEstimate w_function_nonuniform(const Composition& s, double omega, const Observable& obs,
                                       const DeviationMeasure& w, const SimplexPrior& prior,
                                       const SimplexQuadratureConfig& cfg) {
  check_shape(static_cast<std::size_t>(s.dim()), obs);
  if (std::holds_alternative<UniformPrior>(prior)) return w_function_estimate(s, omega, obs, w, cfg);
  if (const auto* tilt = std::get_if<DirichletTilt>(&prior)) {
    check_alpha(tilt->alpha);
    if (tilt->alpha.size() != static_cast<std::size_t>(s.dim()))
      throw std::invalid_argument("Dirichlet tilt does not match dimension");
    // prod p^(alpha-1) folds into the exponents.
    std::vector<double> e = as_exponents(s);
    for (std::size_t n = 0; n < e.size(); ++n) e[n] += tilt->alpha[n] - 1.0;
    return w_function_exponents(e, omega, obs, w, cfg);
  }
  const auto& callable = std::get<CallablePrior>(prior);
  if (cfg.method != SimplexMethod::MonteCarlo)
    throw std::invalid_argument("callable priors require Monte Carlo integration");
  const std::function<double(std::span<const double>)> g = [&](std::span<const double> p) {
    const double v = callable.density(p);
    if (!(v >= 0.0)) throw std::domain_error("prior density is negative or NaN");
    return v;
  };
  const auto e = as_exponents(s);
  return weighted_integral(e, omega, obs, w.eval, w, cfg, &g);
}

IntegralEstimate mixed_w_function(std::span<const Composition> comps, std::span<const double> coeffs,
                                  double omega, const Observable& obs, const DeviationMeasure& w,
                                  const SimplexPrior& prior, const SimplexQuadratureConfig& cfg,
                                  bool derivative) {
  if (comps.size() != coeffs.size())
    throw std::invalid_argument("one coefficient per composition required");
  if (derivative && !w.has_derivative())
    throw std::invalid_argument("measure '" + w.name + "' has no derivative");
  const std::size_t dim = static_cast<std::size_t>(obs.dim());
  for (const auto& s : comps) check_shape(static_cast<std::size_t>(s.dim()), obs);

  // q(p) = sum_s c_s prod p^s, integrated against g(p) W(omega - lambda.p) on
  // the Haar (Dirichlet(1,...,1)) measure, or the tilted one.
  std::vector<double> base(dim, 0.0);
  const CallablePrior* callable = std::get_if<CallablePrior>(&prior);
  if (const auto* tilt = std::get_if<DirichletTilt>(&prior)) {
    check_alpha(tilt->alpha);
    if (tilt->alpha.size() != dim) throw std::invalid_argument("Dirichlet tilt does not match dimension");
    for (std::size_t n = 0; n < dim; ++n) base[n] = tilt->alpha[n] - 1.0;
  }
  if (callable && cfg.method != SimplexMethod::MonteCarlo)
    throw std::invalid_argument("callable priors require Monte Carlo integration");

  const std::function<double(std::span<const double>)> poly = [&](std::span<const double> p) {
    double q = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (coeffs[i] == 0.0) continue;
      double term = coeffs[i];
      for (std::size_t n = 0; n < dim; ++n) {
        const int c = comps[i][static_cast<int>(n)];
        for (int r = 0; r < c; ++r) term *= p[n];
      }
      q += term;
    }
    if (callable) {
      const double g = callable->density(p);
      if (!(g >= 0.0)) throw std::domain_error("prior density is negative or NaN");
      q *= g;
    }
    return q;
  };
  if (cfg.method == SimplexMethod::MonteCarlo) {
    return weighted_integral(base, omega, obs, derivative ? w.derivative : w.eval, w, cfg, &poly);
  }
  // Tensor path: fold q into the integrand without the callable guard.
  const auto lambdas = obs.eigenvalues();
  const auto& h = derivative ? w.derivative : w.eval;
  SimplexFunction integrand = [&](std::span<const double> p) {
    double x = 0.0;
    for (std::size_t n = 0; n < p.size(); ++n) x += lambdas[n] * p[n];
    return h(omega - x) * poly(p);
  };
  std::vector<double> alpha(dim);
  for (std::size_t n = 0; n < dim; ++n) alpha[n] = base[n] + 1.0;
  const double prefactor =
      std::exp(std::lgamma(static_cast<double>(dim)) + log_dirichlet_normalizer(alpha));
  const KinkPlanes planes = measure_kinks(w, obs, omega);
  const auto e = tensor_expectation(integrand, alpha, cfg, planes.levels.empty() ? nullptr : &planes);
  return {prefactor * e.value, prefactor * e.error_estimate};
}

}  // namespace obsest
