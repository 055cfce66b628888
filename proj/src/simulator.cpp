#include "obsest/simulator.hpp"

#include "obsest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace obsest {

PureState::PureState(std::vector<std::complex<double>> amplitudes)
    : amplitudes_(std::move(amplitudes)) {
  if (amplitudes_.empty()) throw std::invalid_argument("state needs at least one amplitude");
  double norm = 0.0;
  for (const auto& c : amplitudes_) norm += std::norm(c);
  if (std::fabs(norm - 1.0) > 1e-12) throw std::invalid_argument("state is not normalized");
}

std::vector<double> PureState::probabilities() const {
  std::vector<double> p;
  p.reserve(amplitudes_.size());
  for (const auto& c : amplitudes_) p.push_back(std::norm(c));
  return p;
}

double PureState::expectation(const Observable& obs) const {
  if (obs.dim() != dim()) throw std::invalid_argument("state does not match observable");
  double acc = 0.0;
  for (int n = 0; n < dim(); ++n) acc += obs.eigenvalue(n) * std::norm(amplitudes_[static_cast<std::size_t>(n)]);
  return acc;
}

namespace {

PureState normalized(std::vector<std::complex<double>> amps) {
  double norm = 0.0;
  for (const auto& c : amps) norm += std::norm(c);
  const double inv = 1.0 / std::sqrt(norm);
  for (auto& c : amps) c *= inv;
  return PureState(std::move(amps));
}

}  // namespace

PureState sample_haar_state(int dim, Engine& rng) {
  if (dim < 2) throw std::invalid_argument("Haar states need d >= 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::complex<double>> amps(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& c : amps) {
      const double re = normal(rng);
      const double im = normal(rng);
      c = {re, im};
      norm += re * re + im * im;
    }
  } while (norm == 0.0);
  return normalized(std::move(amps));
}

PureState sample_dirichlet_state(std::span<const double> alpha, Engine& rng) {
  std::vector<double> p(alpha.size());
  sample_dirichlet(alpha, rng, std::span<double>(p));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<std::complex<double>> amps(alpha.size());
  for (std::size_t n = 0; n < alpha.size(); ++n) amps[n] = std::polar(std::sqrt(p[n]), phase(rng));
  return normalized(std::move(amps));
}

PureState sample_bloch_symmetric_state(const std::function<double(double)>& theta_density,
                                       double bound, Engine& rng) {
  if (!(bound > 0.0)) throw std::invalid_argument("rejection bound must be positive");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    // cos(theta) uniform on [-1, 1] is the sphere measure sin(theta) dtheta.
    const double cos_theta = 2.0 * unit(rng) - 1.0;
    const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
    const double h = theta_density(theta);
    if (!(h >= 0.0)) throw std::domain_error("theta density is negative or NaN");
    if (h > bound) {
      std::ostringstream os;
      os << "theta density " << h << " exceeds rejection bound " << bound << " at theta = " << theta;
      throw std::domain_error(os.str());
    }
    if (unit(rng) * bound >= h) continue;
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double c0 = std::sqrt(std::max(0.0, 0.5 * (1.0 + cos_theta)));
    const double s0 = std::sqrt(std::max(0.0, 0.5 * (1.0 - cos_theta)));
    return normalized({{c0, 0.0}, std::polar(s0, phi)});
  }
  throw std::domain_error("rejection sampler accepted nothing in 10^6 proposals");
}

Composition measure_copies(const PureState& state, int copies, Engine& rng) {
  if (copies < 0) throw std::invalid_argument("number of copies must be non-negative");
  const auto probs = state.probabilities();
  std::vector<double> cumulative(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> counts(probs.size(), 0);
  for (int i = 0; i < copies; ++i) {
    const double u = unit(rng) * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    if (idx >= probs.size()) idx = probs.size() - 1;
    // Never report an outcome of probability zero.
    while (probs[idx] == 0.0 && idx > 0) --idx;
    ++counts[idx];
  }
  return Composition(std::move(counts));
}

namespace bloch {

BlochStates uniform() {
  return {[](double) { return 1.0; }, 1.0, UniformPrior{}, "bloch:uniform"};
}

BlochStates upper_hemisphere() {
  CallablePrior g{[](std::span<const double> p) { return p[0] >= 0.5 ? 1.0 : 0.0; },
                  "bloch:hemisphere"};
  return {[](double theta) { return theta <= 0.5 * std::numbers::pi ? 1.0 : 0.0; }, 1.0, g,
          "bloch:hemisphere"};
}

BlochStates cos_squared() {
  return {[](double theta) {
            const double c = std::cos(0.5 * theta);
            return c * c;
          },
          1.0, DirichletTilt{{2.0, 1.0}}, "bloch:cos2"};
}

}  // namespace bloch

std::string describe(const StatePrior& prior) {
  if (std::holds_alternative<HaarStates>(prior)) return "haar";
  if (const auto* d = std::get_if<DirichletStates>(&prior)) return describe(SimplexPrior{DirichletTilt{d->alpha}});
  return std::get<BlochStates>(prior).label;
}

SimplexPrior simplex_prior_of(const StatePrior& prior) {
  if (std::holds_alternative<HaarStates>(prior)) return UniformPrior{};
  if (const auto* d = std::get_if<DirichletStates>(&prior)) return DirichletTilt{d->alpha};
  return std::get<BlochStates>(prior).simplex_prior;
}

PureState sample_state(const StatePrior& prior, int dim, Engine& rng) {
  if (std::holds_alternative<HaarStates>(prior)) return sample_haar_state(dim, rng);
  if (const auto* d = std::get_if<DirichletStates>(&prior)) {
    if (d->alpha.size() != static_cast<std::size_t>(dim))
      throw std::invalid_argument("Dirichlet state prior does not match dimension");
    return sample_dirichlet_state(d->alpha, rng);
  }
  if (dim != 2) throw std::invalid_argument("Bloch-sphere priors need d = 2");
  const auto& b = std::get<BlochStates>(prior);
  return sample_bloch_symmetric_state(b.theta_density, b.bound, rng);
}

TrialRecord simulate_trial(int copies, const Observable& obs, const DeviationMeasure& w,
                           const EstimatorTable& table, const StatePrior& prior, Engine& rng) {
  const PureState state = sample_state(prior, obs.dim(), rng);
  Composition occ = measure_copies(state, copies, rng);
  const EstimatorEntry* entry = table.find(occ);
  if (!entry) throw std::out_of_range("estimator table has no entry for composition " + occ.to_string());
  TrialRecord rec;
  rec.estimate = entry->estimator;
  rec.true_value = state.expectation(obs);
  rec.deviation_value = w(rec.estimate - rec.true_value);
  rec.occupation = std::move(occ);
  return rec;
}

namespace {

constexpr std::uint64_t kChunk = 8192;

struct ChunkStats {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::map<Composition, std::uint64_t> counts;
};

ChunkStats run_chunk(std::uint64_t begin, std::uint64_t end, int copies, const Observable& obs,
                     const DeviationMeasure& w, const EstimatorTable& table,
                     const StatePrior& prior, std::uint64_t seed) {
  ChunkStats s;
  for (std::uint64_t t = begin; t < end; ++t) {
    Engine rng = stream_engine(seed, t);
    const TrialRecord rec = simulate_trial(copies, obs, w, table, prior, rng);
    ++s.n;
    const double delta = rec.deviation_value - s.mean;
    s.mean += delta / static_cast<double>(s.n);
    s.m2 += delta * (rec.deviation_value - s.mean);
    ++s.counts[rec.occupation];
  }
  return s;
}

}  // namespace

TrialSummary run_trials(std::uint64_t trials, int copies, const Observable& obs,
                        const DeviationMeasure& w, const EstimatorTable& table,
                        const StatePrior& prior, std::uint64_t seed, unsigned threads) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  if (table.copies() != copies || table.observable().dim() != obs.dim())
    throw std::invalid_argument("estimator table does not match the simulated setting");

  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<ChunkStats> stats(chunks);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, chunks));

  auto work = [&](unsigned worker) {
    for (std::uint64_t c = worker; c < chunks; c += threads)
      stats[c] = run_chunk(c * kChunk, std::min(trials, (c + 1) * kChunk), copies, obs, w, table,
                           prior, seed);
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i)
      pool.emplace_back([&, i] {
        try {
          work(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Chan et al. pairwise merge, in chunk order.
  TrialSummary out;
  double mean = 0.0, m2 = 0.0;
  std::uint64_t n = 0;
  for (const auto& s : stats) {
    const std::uint64_t total = n + s.n;
    const double delta = s.mean - mean;
    mean += delta * static_cast<double>(s.n) / static_cast<double>(total);
    m2 += s.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(s.n) /
                     static_cast<double>(total);
    n = total;
    for (const auto& [comp, count] : s.counts) out.occupation_counts[comp] += count;
  }
  out.trials = n;
  out.empirical_mean_error = mean;
  out.standard_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  return out;
}

}  // namespace obsest
