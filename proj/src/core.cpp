#include "obsest/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace obsest {

Observable::Observable(std::vector<double> eigenvalues)
    : eigenvalues_(std::move(eigenvalues)) {
  if (eigenvalues_.size() < 2)
    throw std::invalid_argument("observable needs at least two eigenvalues");
  for (double v : eigenvalues_)
    if (!std::isfinite(v))
      throw std::invalid_argument("observable eigenvalues must be finite");
  auto [lo, hi] = std::minmax_element(eigenvalues_.begin(), eigenvalues_.end());
  lambda_min_ = *lo;
  lambda_max_ = *hi;
}

double Observable::expectation(std::span<const double> probs) const {
  if (probs.size() != eigenvalues_.size())
    throw std::invalid_argument("probability vector does not match observable dimension");
  double acc = 0.0;
  for (std::size_t n = 0; n < probs.size(); ++n) acc += eigenvalues_[n] * probs[n];
  return acc;
}

Observable Observable::shifted(double offset) const {
  std::vector<double> ev = eigenvalues_;
  for (double& v : ev) v += offset;
  return Observable(std::move(ev));
}

Composition::Composition(std::vector<int> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw std::invalid_argument("composition needs at least one part");
  for (int c : counts_) {
    if (c < 0) throw std::invalid_argument("occupation numbers must be non-negative");
    total_ += c;
  }
}

std::string Composition::to_string() const {
  std::string out = "(";
  for (std::size_t n = 0; n < counts_.size(); ++n) {
    if (n) out += ",";
    out += std::to_string(counts_[n]);
  }
  return out + ")";
}

std::vector<Composition> enumerate_compositions(int copies, int dim) {
  if (dim < 1) throw std::invalid_argument("dimension must be at least 1");
  if (copies < 0) throw std::invalid_argument("number of copies must be non-negative");

  std::vector<Composition> out;
  std::vector<int> current(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int)> fill = [&](int pos, int remaining) {
    if (pos == dim - 1) {
      current[static_cast<std::size_t>(pos)] = remaining;
      out.emplace_back(current);
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      current[static_cast<std::size_t>(pos)] = c;
      fill(pos + 1, remaining - c);
    }
  };
  fill(0, copies);
  return out;
}

namespace {

std::uint64_t checked_binomial(int n, int k) {
  // C(n, k) built incrementally; every intermediate is itself a binomial.
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    const auto num = static_cast<std::uint64_t>(n - k + i);
    const std::uint64_t g = std::gcd(result, static_cast<std::uint64_t>(i));
    const std::uint64_t r = result / g;
    const std::uint64_t den = static_cast<std::uint64_t>(i) / g;
    if (r > std::numeric_limits<std::uint64_t>::max() / num)
      throw std::overflow_error("binomial coefficient overflows 64 bits");
    result = r * num / den;
  }
  return result;
}

}  // namespace

std::uint64_t multinomial_weight(const Composition& s) {
  if (s.copies() > kMaxExactCopies)
    throw std::overflow_error("multinomial weight only supported exactly for N <= " +
                              std::to_string(kMaxExactCopies) + ", got N = " +
                              std::to_string(s.copies()));
  // N!/(s_1!...s_d!) = prod_k C(s_1 + ... + s_k, s_k)
  std::uint64_t result = 1;
  int running = 0;
  for (int c : s.counts()) {
    running += c;
    result *= checked_binomial(running, c);
  }
  return result;
}

std::uint64_t composition_count(int copies, int dim) {
  if (dim < 1 || copies < 0) throw std::invalid_argument("invalid composition shape");
  return checked_binomial(copies + dim - 1, dim - 1);
}

Composition occupation_of_index(std::uint64_t index, int dim, int copies) {
  std::vector<int> counts(static_cast<std::size_t>(dim), 0);
  for (int i = 0; i < copies; ++i) {
    ++counts[index % static_cast<std::uint64_t>(dim)];
    index /= static_cast<std::uint64_t>(dim);
  }
  return Composition(std::move(counts));
}

}  // namespace obsest
