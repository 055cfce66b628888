#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace obsest {

/// Observable given by its eigenvalues; the eigenbasis is the standard basis.
class Observable {
public:
  explicit Observable(std::vector<double> eigenvalues);
  Observable(std::initializer_list<double> eigenvalues)
      : Observable(std::vector<double>(eigenvalues)) {}

  int dim() const { return static_cast<int>(eigenvalues_.size()); }
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  double eigenvalue(int n) const { return eigenvalues_[static_cast<std::size_t>(n)]; }
  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }
  bool is_constant() const { return lambda_min_ == lambda_max_; }

  /// Tr[Omega rho] for a state with outcome probabilities `probs`.
  double expectation(std::span<const double> probs) const;

  /// Same observable with every eigenvalue shifted by `offset`.
  Observable shifted(double offset) const;

private:
  std::vector<double> eigenvalues_;
  double lambda_min_ = 0.0;
  double lambda_max_ = 0.0;
};

/// Occupation numbers (s_1, ..., s_d) of N copies over the d eigenstates.
class Composition {
public:
  Composition() = default;
  explicit Composition(std::vector<int> counts);
  Composition(std::initializer_list<int> counts)
      : Composition(std::vector<int>(counts)) {}

  int dim() const { return static_cast<int>(counts_.size()); }
  int copies() const { return total_; }
  int operator[](int n) const { return counts_[static_cast<std::size_t>(n)]; }
  std::span<const int> counts() const { return counts_; }

  std::string to_string() const;

  friend bool operator==(const Composition&, const Composition&) = default;
  friend auto operator<=>(const Composition& a, const Composition& b) {
    return a.counts_ <=> b.counts_;
  }

private:
  std::vector<int> counts_;
  int total_ = 0;
};

/// All compositions of N into d parts, lexicographically descending.
std::vector<Composition> enumerate_compositions(int copies, int dim);

/// Largest copy count for which multinomial weights are computed exactly.
inline constexpr int kMaxExactCopies = 20;

/// N! / (s_1! ... s_d!), i.e. the number of basis strings with occupation s.
/// Throws std::overflow_error for N > kMaxExactCopies.
std::uint64_t multinomial_weight(const Composition& s);

/// Number of compositions of N into d parts, C(N + d - 1, d - 1).
std::uint64_t composition_count(int copies, int dim);

/// Occupation numbers of a tensor-product basis index (copy 1 most significant).
Composition occupation_of_index(std::uint64_t index, int dim, int copies);

}  // namespace obsest
