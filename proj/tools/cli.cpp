#include "cli.hpp"

#include "obsest/core.hpp"
#include "obsest/measure.hpp"
#include "obsest/operators.hpp"
#include "obsest/simplex.hpp"
#include "obsest/simulator.hpp"
#include "obsest/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace obsest::cli {

namespace {

using json = nlohmann::ordered_json;

/// Bad flag values detected after CLI11 has parsed them.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string quoted(const std::string& s) {
  std::string q = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') q += '\\';
    q += c;
  }
  return q + '"';
}

/// Flat JSON object with numbers rendered as %.17g; keys keep insertion order.
class FlatJson {
public:
  FlatJson& num(const std::string& key, double v) {
    return raw(key, std::isfinite(v) ? fmt(v) : quoted(fmt(v)));
  }
  FlatJson& integer(const std::string& key, std::int64_t v) { return raw(key, std::to_string(v)); }
  FlatJson& str(const std::string& key, const std::string& v) { return raw(key, quoted(v)); }
  FlatJson& boolean(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }

  std::string render() const {
    std::string s = "{\n";
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      s += "  " + quoted(fields_[i].first) + ": " + fields_[i].second;
      s += i + 1 < fields_.size() ? ",\n" : "\n";
    }
    return s + "}\n";
  }

private:
  FlatJson& raw(const std::string& key, std::string v) {
    fields_.emplace_back(key, std::move(v));
    return *this;
  }
  std::vector<std::pair<std::string, std::string>> fields_;
};

// ---------------------------------------------------------------------------
// Flag parsing.

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() ||
        !std::isfinite(v))
      throw UsageError("invalid number '" + item + "' in " + what);
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

struct Setting {
  int d = 0;
  int copies = 1;
  std::string eigenvalues;
  std::string measure = "quadratic";
  std::optional<double> sigma;
  std::optional<double> p;
  std::string prior = "haar";
  std::uint64_t seed = 20240611;
  std::string out;
};

void add_setting_flags(CLI::App* cmd, Setting& s, bool with_prior) {
  cmd->add_option("--d", s.d, "Hilbert-space dimension (default: number of eigenvalues)");
  cmd->add_option("--N", s.copies, "number of copies")->required();
  cmd->add_option("--eigenvalues", s.eigenvalues,
                  "comma-separated eigenvalues (default: d evenly spaced values from 1 to -1)");
  cmd->add_option("--measure", s.measure, "quadratic | abs | sinh2 | power")->capture_default_str();
  cmd->add_option("--sigma", s.sigma, "scale of the sinh2 measure");
  cmd->add_option("--p", s.p, "exponent of the power measure");
  if (with_prior)
    cmd->add_option("--prior", s.prior,
                    "haar | dirichlet:a1,...,ad | bloch:uniform|hemisphere|cos2")
        ->capture_default_str();
  cmd->add_option("--out", s.out, "output file; a manifest is written next to it");
}

Observable make_observable(Setting& s) {
  std::vector<double> lambda;
  if (!s.eigenvalues.empty()) {
    lambda = parse_reals(s.eigenvalues, "--eigenvalues");
    if (s.d == 0) s.d = static_cast<int>(lambda.size());
    if (static_cast<int>(lambda.size()) != s.d)
      throw UsageError("--d " + std::to_string(s.d) + " does not match " +
                       std::to_string(lambda.size()) + " eigenvalues");
  } else {
    if (s.d == 0) throw UsageError("give --d or --eigenvalues");
    if (s.d < 2) throw UsageError("--d must be at least 2");
    for (int n = 0; n < s.d; ++n) lambda.push_back(1.0 - 2.0 * n / (s.d - 1));
  }
  if (s.d < 2) throw UsageError("--d must be at least 2");
  if (s.copies < 1) throw UsageError("--N must be at least 1");
  if (s.copies > kMaxExactCopies)
    throw UsageError("--N must be at most " + std::to_string(kMaxExactCopies));
  return Observable(std::move(lambda));
}

DeviationMeasure make_measure(const Setting& s) {
  if (s.sigma && s.measure != "sinh2") throw UsageError("--sigma only applies to --measure sinh2");
  if (s.p && s.measure != "power") throw UsageError("--p only applies to --measure power");
  if (s.measure == "quadratic") return measures::quadratic();
  if (s.measure == "abs") return measures::absolute_value();
  if (s.measure == "sinh2") {
    if (!s.sigma) throw UsageError("--measure sinh2 needs --sigma");
    if (!(*s.sigma > 0.0) || !std::isfinite(*s.sigma)) throw UsageError("--sigma must be positive");
    return measures::sinh_squared(*s.sigma);
  }
  if (s.measure == "power") {
    if (!s.p) throw UsageError("--measure power needs --p");
    if (!(*s.p >= 1.0) || !std::isfinite(*s.p)) throw UsageError("--p must be at least 1");
    return measures::power(*s.p);
  }
  throw UsageError("unknown measure '" + s.measure + "'");
}

StatePrior make_prior(const Setting& s) {
  const std::string& text = s.prior;
  if (text == "haar") return HaarStates{};
  if (text.rfind("dirichlet:", 0) == 0) {
    auto alpha = parse_reals(text.substr(10), "--prior");
    if (static_cast<int>(alpha.size()) != s.d)
      throw UsageError("dirichlet prior needs " + std::to_string(s.d) + " parameters");
    for (double a : alpha)
      if (!(a > 0.0)) throw UsageError("dirichlet parameters must be positive");
    return DirichletStates{std::move(alpha)};
  }
  if (text.rfind("bloch:", 0) == 0) {
    if (s.d != 2) throw UsageError("bloch priors need --d 2");
    const std::string kind = text.substr(6);
    if (kind == "uniform") return bloch::uniform();
    if (kind == "hemisphere") return bloch::upper_hemisphere();
    if (kind == "cos2") return bloch::cos_squared();
  }
  throw UsageError("unknown prior '" + text + "'");
}

SolverConfig solver_config(int d, const SimplexPrior& prior, std::uint64_t seed) {
  SolverConfig cfg = SolverConfig::for_dimension(d);
  if (std::holds_alternative<CallablePrior>(prior))
    cfg.quadrature = SimplexQuadratureConfig::monte_carlo(1'000'000, seed);
  return cfg;
}

json setting_parameters(const Setting& s, const Observable& obs) {
  json p;
  p["d"] = s.d;
  p["N"] = s.copies;
  p["eigenvalues"] = std::vector<double>(obs.eigenvalues().begin(), obs.eigenvalues().end());
  p["measure"] = s.measure;
  if (s.sigma) p["sigma"] = *s.sigma;
  if (s.p) p["p"] = *s.p;
  return p;
}

// ---------------------------------------------------------------------------
// Output.

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Run {
  std::string command;
  std::vector<std::string> argv;
  std::ostream& out;
  std::ostream& err;

  /// Sends `data` to stdout and, with --out, to the file plus its manifest.
  void emit(const std::string& data, const std::string& path, json parameters,
            std::optional<std::uint64_t> seed) const {
    out << data;
    if (path.empty()) return;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << data;
    json m;
    m["command"] = command;
    m["argv"] = argv;
    m["parameters"] = std::move(parameters);
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["tool_version"] = kToolVersion;
    m["timestamp"] = utc_timestamp();
    std::ofstream mf(path + ".manifest.json", std::ios::binary);
    if (!mf) throw std::runtime_error("cannot write " + path + ".manifest.json");
    mf << m.dump(2) << '\n';
  }
};

// ---------------------------------------------------------------------------
// Commands.

int cmd_estimators(const Run& run, Setting s) {
  const Observable obs = make_observable(s);
  const DeviationMeasure w = make_measure(s);
  const StatePrior state_prior = make_prior(s);
  const SimplexPrior prior = simplex_prior_of(state_prior);
  const EstimatorTable table =
      build_estimator_table(s.copies, obs, w, solver_config(s.d, prior, s.seed), prior);

  std::string csv = "s,omega_min,w_min,unique\n";
  for (const auto& e : table.entries())
    csv += quoted(e.composition.to_string()) + ',' + fmt(e.estimator) + ',' + fmt(e.min_weight) +
           ',' + (e.unique ? "true" : "false") + '\n';
  json params = setting_parameters(s, obs);
  params["prior"] = s.prior;
  run.emit(csv, s.out, std::move(params), std::nullopt);
  return kOk;
}

int cmd_mean_error(const Run& run, Setting s) {
  const Observable obs = make_observable(s);
  const DeviationMeasure w = make_measure(s);
  const EstimatorTable table =
      build_estimator_table(s.copies, obs, w, SolverConfig::for_dimension(s.d));

  std::string csv = "s,multiplicity,omega_min,w_min,contribution\n";
  for (const auto& e : table.entries()) {
    const auto mult = multinomial_weight(e.composition);
    csv += quoted(e.composition.to_string()) + ',' + std::to_string(mult) + ',' +
           fmt(e.estimator) + ',' + fmt(e.min_weight) + ',' +
           fmt(static_cast<double>(mult) * e.min_weight) + '\n';
  }
  csv += "\"total\",,,," + fmt(table.min_mean_error()) + '\n';
  run.emit(csv, s.out, setting_parameters(s, obs), std::nullopt);
  return kOk;
}

struct FigureFlags {
  double sigma_min = 0.1;
  double sigma_max = 100.0;
  int points = 64;
  std::string spacing = "log";
  std::string out;
};

int cmd_figure1(const Run& run, const FigureFlags& f) {
  if (!(f.sigma_min > 0.0) || !(f.sigma_max > f.sigma_min) || !std::isfinite(f.sigma_max))
    throw UsageError("need 0 < --sigma-min < --sigma-max");
  if (f.points < 2) throw UsageError("--points must be at least 2");
  if (f.spacing != "log" && f.spacing != "linear")
    throw UsageError("--spacing must be log or linear");

  const Observable obs{1.0, -1.0};
  const Composition s20{2, 0};
  const SolverConfig cfg = SolverConfig::for_dimension(2);
  std::string csv = "sigma,omega20_closed_form,omega20_numeric,abs_diff\n";
  double worst = 0.0;
  double worst_sigma = 0.0;
  for (int i = 0; i < f.points; ++i) {
    const double t = static_cast<double>(i) / (f.points - 1);
    double sigma = f.spacing == "log"
                       ? std::exp(std::log(f.sigma_min) + t * (std::log(f.sigma_max) - std::log(f.sigma_min)))
                       : f.sigma_min + t * (f.sigma_max - f.sigma_min);
    if (i == 0) sigma = f.sigma_min;
    if (i == f.points - 1) sigma = f.sigma_max;
    const double closed = sinh_estimator_closed_form(sigma).omega_20;
    double numeric = 0.0;
    try {
      numeric = minimize_w(s20, obs, measures::sinh_squared(sigma), cfg).omega;
    } catch (const std::exception& e) {
      throw SolverError("sigma = " + fmt(sigma) + ": " + e.what());
    }
    const double diff = std::fabs(closed - numeric);
    if (!(diff <= worst)) {
      worst = diff;
      worst_sigma = sigma;
    }
    csv += fmt(sigma) + ',' + fmt(closed) + ',' + fmt(numeric) + ',' + fmt(diff) + '\n';
  }
  json params;
  params["sigma_min"] = f.sigma_min;
  params["sigma_max"] = f.sigma_max;
  params["points"] = f.points;
  params["spacing"] = f.spacing;
  run.emit(csv, f.out, std::move(params), std::nullopt);
  if (!(worst <= 1e-7)) {
    run.err << "figure1: abs_diff " << fmt(worst) << " at sigma = " << fmt(worst_sigma)
            << " exceeds 1e-7\n";
    return kSolverFailure;
  }
  return kOk;
}

int cmd_verify(const Run& run, Setting s, int povms, int elements) {
  if (povms < 0) throw UsageError("--povms must be non-negative");
  if (elements < 1) throw UsageError("--elements must be at least 1");
  const Observable obs = make_observable(s);
  const DeviationMeasure w = make_measure(s);
  tensor_space_dim(s.d, s.copies);

  const SolverConfig cfg = SolverConfig::for_dimension(s.d);
  const RelationReport rel = verify_projector_relations(s.d, s.copies);
  const EstimatorTable table = build_estimator_table(s.copies, obs, w, cfg);
  const BoundSweep sweep = sweep_random_povms(table, s.copies, povms, elements, s.seed, cfg);
  const bool passed = rel.passed() && sweep.passed();

  FlatJson doc;
  doc.integer("d", s.d)
      .integer("N", s.copies)
      .str("measure", w.name)
      .num("relations_max_violation", rel.max_violation())
      .boolean("relations_passed", rel.passed())
      .num("bound", sweep.bound)
      .num("achievability_gap", sweep.achievability_gap)
      .integer("povms", sweep.povms)
      .integer("elements", elements)
      .num("min_gap", sweep.min_gap)
      .num("max_gap", sweep.max_gap)
      .integer("violations", sweep.violations)
      .num("tolerance", sweep.tolerance)
      .boolean("passed", passed);
  json params = setting_parameters(s, obs);
  params["povms"] = povms;
  params["elements"] = elements;
  run.emit(doc.render(), s.out, std::move(params), s.seed);

  if (!passed) {
    if (sweep.violations > 0)
      run.err << "verify: BOUND VIOLATED by " << sweep.violations << " of " << sweep.povms
              << " POVMs, min gap " << fmt(sweep.min_gap) << '\n';
    if (std::fabs(sweep.achievability_gap) > sweep.tolerance)
      run.err << "verify: projective measurement misses the bound by "
              << fmt(sweep.achievability_gap) << '\n';
    if (!rel.passed())
      run.err << "verify: projector relations violated by " << fmt(rel.max_violation()) << '\n';
    return kVerificationFailure;
  }
  return kOk;
}

int cmd_simulate(const Run& run, Setting s, std::uint64_t trials, unsigned threads) {
  if (trials < 1) throw UsageError("--trials must be at least 1");
  const Observable obs = make_observable(s);
  const DeviationMeasure w = make_measure(s);
  const StatePrior state_prior = make_prior(s);
  const SimplexPrior prior = simplex_prior_of(state_prior);
  const EstimatorTable table =
      build_estimator_table(s.copies, obs, w, solver_config(s.d, prior, s.seed), prior);
  const TrialSummary sum = run_trials(trials, s.copies, obs, w, table, state_prior, s.seed, threads);

  const double theory = table.min_mean_error();
  const double diff = sum.empirical_mean_error - theory;
  double z = 0.0;
  if (sum.standard_error > 0.0)
    z = diff / sum.standard_error;
  else if (diff != 0.0)
    z = std::copysign(std::numeric_limits<double>::infinity(), diff);

  FlatJson doc;
  doc.integer("d", s.d)
      .integer("N", s.copies)
      .str("measure", w.name)
      .str("prior", describe(state_prior))
      .integer("trials", static_cast<std::int64_t>(sum.trials))
      .integer("seed", static_cast<std::int64_t>(s.seed))
      .num("empirical_mean_error", sum.empirical_mean_error)
      .num("standard_error", sum.standard_error)
      .num("theoretical_min", theory)
      .num("z_score", z);
  for (const auto& e : table.entries()) {
    const auto it = sum.occupation_counts.find(e.composition);
    const double count = it == sum.occupation_counts.end() ? 0.0 : static_cast<double>(it->second);
    doc.num("frequency" + e.composition.to_string(), count / static_cast<double>(sum.trials));
  }
  json params = setting_parameters(s, obs);
  params["prior"] = s.prior;
  params["trials"] = trials;
  run.emit(doc.render(), s.out, std::move(params), s.seed);

  if (!(std::fabs(z) <= 4.0)) {
    run.err << "simulate: |z| = " << fmt(std::fabs(z)) << " exceeds 4\n";
    return kVerificationFailure;
  }
  return kOk;
}

int cmd_replay(const std::string& manifest, const std::string& out_override, std::ostream& out,
               std::ostream& err) {
  std::ifstream f(manifest);
  if (!f) throw UsageError("cannot read manifest " + manifest);
  json m;
  try {
    m = json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError("malformed manifest " + manifest + ": " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw UsageError("manifest has no argv");
  auto argv = m["argv"].get<std::vector<std::string>>();
  if (argv.empty() || argv.front() == "replay") throw UsageError("manifest argv is not replayable");
  if (!out_override.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i < argv.size(); ++i) {
      if (argv[i] == "--out" && i + 1 < argv.size()) {
        argv[i + 1] = out_override;
        replaced = true;
      } else if (argv[i].rfind("--out=", 0) == 0) {
        argv[i] = "--out=" + out_override;
        replaced = true;
      }
    }
    if (!replaced) {
      argv.push_back("--out");
      argv.push_back(out_override);
    }
  }
  return run(argv, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optimal estimation of an observable's expectation value from N copies"};
  app.name("obsest");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Setting setting;
  std::uint64_t trials = 1'000'000;
  unsigned threads = 0;
  int povms = 200;
  int elements = 3;
  FigureFlags figure;
  std::string manifest;
  std::string replay_out;

  auto* est = app.add_subcommand("estimators", "optimal estimator for every composition (CSV)");
  add_setting_flags(est, setting, true);

  auto* mean = app.add_subcommand("mean-error", "minimum mean error and its breakdown (CSV)");
  add_setting_flags(mean, setting, false);

  auto* fig = app.add_subcommand("figure1", "omega_(2,0) of the sinh2 measure against sigma (CSV)");
  fig->add_option("--sigma-min", figure.sigma_min, "smallest sigma")->capture_default_str();
  fig->add_option("--sigma-max", figure.sigma_max, "largest sigma")->capture_default_str();
  fig->add_option("--points", figure.points, "number of sigma values")->capture_default_str();
  fig->add_option("--spacing", figure.spacing, "log | linear")->capture_default_str();
  fig->add_option("--out", figure.out, "output file; a manifest is written next to it");

  auto* ver = app.add_subcommand("verify", "check the mean-error bound against random POVMs (JSON)");
  add_setting_flags(ver, setting, false);
  ver->add_option("--povms", povms, "number of random POVMs")->capture_default_str();
  ver->add_option("--elements", elements, "elements per random POVM")->capture_default_str();
  ver->add_option("--seed", setting.seed, "seed for the random POVMs")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimate of the mean error (JSON)");
  add_setting_flags(sim, setting, true);
  sim->add_option("--trials", trials, "number of simulated experiments")->capture_default_str();
  sim->add_option("--seed", setting.seed, "seed for states and outcomes")->capture_default_str();
  sim->add_option("--threads", threads, "worker threads, 0 for all cores")->capture_default_str();

  auto* rep = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  rep->add_option("manifest", manifest)->required();
  rep->add_option("--out", replay_out, "write to this file instead of the recorded one");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kInvalidArguments;
  }

  const Run ctx{app.get_subcommands().front()->get_name(), args, out, err};
  try {
    if (est->parsed()) return cmd_estimators(ctx, setting);
    if (mean->parsed()) return cmd_mean_error(ctx, setting);
    if (fig->parsed()) return cmd_figure1(ctx, figure);
    if (ver->parsed()) return cmd_verify(ctx, setting, povms, elements);
    if (sim->parsed()) return cmd_simulate(ctx, setting, trials, threads);
    if (rep->parsed()) return cmd_replay(manifest, replay_out, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidArguments;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const QuadratureError& e) {
    err << "quadrature failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidArguments;
  } catch (const std::length_error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidArguments;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kInvalidArguments;
}

}  // namespace obsest::cli
