#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rigidity {

/// Exact number (P + sqrt(D)) / Q with integer P, Q != 0 and D >= 0.
///
/// Canonical form keeps Q | (D - P^2), which is the state invariant the
/// continued-fraction recurrence needs, with the common factor removed where
/// possible. When D is a perfect square the value is rational and is stored
/// as (n*q + sqrt(0)) / q^2 for the reduced fraction n/q.
class QuadraticSurd {
 public:
  /// Canonicalizes (p + sqrt(d)) / q. Throws InvalidArgument if q == 0 or d < 0.
  static QuadraticSurd make(std::int64_t p, std::int64_t d, std::int64_t q);

  /// (a + c*sqrt(radicand)) / q for arbitrary integer c.
  static QuadraticSurd from_parts(std::int64_t a, std::int64_t c, std::int64_t radicand,
                                  std::int64_t q);

  static QuadraticSurd rational(std::int64_t num, std::int64_t den);

  std::int64_t p() const { return p_; }
  std::int64_t d() const { return d_; }
  std::int64_t q() const { return q_; }

  bool is_rational() const;
  double value() const;

  /// Exact floor of the value.
  std::int64_t floor() const;

  /// x - k for integer k, exact.
  QuadraticSurd minus_integer(std::int64_t k) const;

  /// Fractional part x - floor(x), exact.
  QuadraticSurd fractional_part() const { return minus_integer(floor()); }

  std::string to_string() const;

  friend bool operator==(const QuadraticSurd& a, const QuadraticSurd& b);

 private:
  QuadraticSurd(std::int64_t p, std::int64_t d, std::int64_t q) : p_(p), d_(d), q_(q) {}
  std::int64_t p_;
  std::int64_t d_;
  std::int64_t q_;
};

/// Simple continued fraction [a0; a1, ...] split into a preperiod and a
/// repeating block. Rationals have an empty period.
struct CFExpansion {
  std::vector<std::int64_t> preperiod;
  std::vector<std::int64_t> period;

  /// The first n partial quotients, unrolling the period as needed.
  std::vector<std::int64_t> terms(std::size_t n) const;

  /// Convergents p_k / q_k for the first n partial quotients.
  std::vector<std::pair<std::int64_t, std::int64_t>> convergents(std::size_t n) const;
};

CFExpansion surd_cf(const QuadraticSurd& x);

/// True iff the surd is an irrational algebraic number of degree two.
bool is_degree_two(const QuadraticSurd& x);

bool is_perfect_square(std::int64_t n);
std::int64_t isqrt(std::int64_t n);

}  // namespace rigidity
