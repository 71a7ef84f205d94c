#include "rigidity/surd.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "rigidity/common.hpp"

namespace rigidity {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v) {
  if (v > INT64_MAX || v < INT64_MIN) {
    throw Error(ErrorCode::InvalidArgument, "surd arithmetic overflow");
  }
  return static_cast<std::int64_t>(v);
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

i128 abs128(i128 v) { return v < 0 ? -v : v; }

}  // namespace

std::int64_t isqrt(std::int64_t n) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "isqrt of negative number");
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (static_cast<i128>(r) * r > n) --r;
  while (static_cast<i128>(r + 1) * (r + 1) <= n) ++r;
  return r;
}

bool is_perfect_square(std::int64_t n) {
  if (n < 0) return false;
  const std::int64_t r = isqrt(n);
  return r * r == n;
}

QuadraticSurd QuadraticSurd::rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return QuadraticSurd(narrow(static_cast<i128>(num) * den), 0,
                       narrow(static_cast<i128>(den) * den));
}

QuadraticSurd QuadraticSurd::make(std::int64_t p, std::int64_t d, std::int64_t q) {
  if (q == 0) throw Error(ErrorCode::InvalidArgument, "surd with Q = 0");
  if (d < 0) throw Error(ErrorCode::InvalidArgument, "surd with negative radicand");
  if (is_perfect_square(d)) return rational(narrow(static_cast<i128>(p) + isqrt(d)), q);

  i128 P = p, D = d, Q = q;
  if ((D - P * P) % Q != 0) {
    const i128 aq = abs128(Q);
    P *= aq;
    D *= Q * Q;
    Q *= aq;
  }
  // Largest g with g | P, g | Q, g^2 | D and (Q/g) | (D/g^2 - (P/g)^2).
  const auto G = static_cast<std::int64_t>(
      std::gcd(static_cast<std::int64_t>(abs128(P) > 0 ? narrow(abs128(P)) : 0),
               narrow(abs128(Q))));
  for (std::int64_t g = G; g > 1; --g) {
    if (G % g != 0) continue;
    const i128 g2 = static_cast<i128>(g) * g;
    if (D % g2 != 0) continue;
    const i128 P2 = P / g, Q2 = Q / g, D2 = D / g2;
    if ((D2 - P2 * P2) % Q2 != 0) continue;
    P = P2;
    Q = Q2;
    D = D2;
    break;
  }
  return QuadraticSurd(narrow(P), narrow(D), narrow(Q));
}

QuadraticSurd QuadraticSurd::from_parts(std::int64_t a, std::int64_t c, std::int64_t radicand,
                                        std::int64_t q) {
  if (q == 0) throw Error(ErrorCode::InvalidArgument, "surd with Q = 0");
  if (c == 0 || radicand == 0) return rational(a, q);
  if (c < 0) {
    a = -a;
    c = -c;
    q = -q;
  }
  return make(a, narrow(static_cast<i128>(c) * c * radicand), q);
}

bool QuadraticSurd::is_rational() const { return is_perfect_square(d_); }

double QuadraticSurd::value() const {
  return (static_cast<double>(p_) + std::sqrt(static_cast<double>(d_))) /
         static_cast<double>(q_);
}

std::int64_t QuadraticSurd::floor() const {
  const std::int64_t s = isqrt(d_);
  if (s * s == d_) return floor_div(p_ + s, q_);
  // sqrt(D) lies strictly inside (s, s+1); no multiple of Q falls strictly
  // between consecutive integers, so the floor is decided by the endpoints.
  if (q_ > 0) return floor_div(p_ + s, q_);
  return floor_div(-p_ - s - 1, -q_);
}

QuadraticSurd QuadraticSurd::minus_integer(std::int64_t k) const {
  return QuadraticSurd(narrow(static_cast<i128>(p_) - static_cast<i128>(k) * q_), d_, q_);
}

std::string QuadraticSurd::to_string() const {
  std::ostringstream os;
  os << "(" << p_ << "+sqrt(" << d_ << "))/" << q_;
  return os.str();
}

bool operator==(const QuadraticSurd& a, const QuadraticSurd& b) {
  const bool ra = a.is_rational();
  const bool rb = b.is_rational();
  if (ra != rb) return false;
  if (ra) {
    const i128 na = static_cast<i128>(a.p_) + isqrt(a.d_);
    const i128 nb = static_cast<i128>(b.p_) + isqrt(b.d_);
    return na * b.q_ == nb * a.q_;
  }
  // 1 and sqrt(D) are linearly independent over Q, so rational and
  // irrational parts must agree separately.
  return static_cast<i128>(a.p_) * b.q_ == static_cast<i128>(b.p_) * a.q_ &&
         static_cast<i128>(a.d_) * b.q_ * b.q_ == static_cast<i128>(b.d_) * a.q_ * a.q_ &&
         ((a.q_ > 0) == (b.q_ > 0));
}

CFExpansion surd_cf(const QuadraticSurd& x) {
  CFExpansion out;
  if (x.is_rational()) {
    std::int64_t num = x.p() + isqrt(x.d());
    std::int64_t den = x.q();
    while (den != 0) {
      const std::int64_t a = floor_div(num, den);
      out.preperiod.push_back(a);
      const std::int64_t r = num - a * den;
      num = den;
      den = r;
    }
    return out;
  }

  const std::int64_t D = x.d();
  std::int64_t P = x.p();
  std::int64_t Q = x.q();
  std::vector<std::int64_t> terms;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> seen;
  while (true) {
    const auto state = std::make_pair(P, Q);
    if (auto it = seen.find(state); it != seen.end()) {
      out.preperiod.assign(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(it->second));
      out.period.assign(terms.begin() + static_cast<std::ptrdiff_t>(it->second), terms.end());
      return out;
    }
    seen.emplace(state, terms.size());
    const std::int64_t a = QuadraticSurd::make(P, D, Q).floor();
    terms.push_back(a);
    const std::int64_t Pn = narrow(static_cast<i128>(a) * Q - P);
    const i128 num = static_cast<i128>(D) - static_cast<i128>(Pn) * Pn;
    if (num % Q != 0) throw Error(ErrorCode::InvalidArgument, "non-canonical surd state");
    Q = narrow(num / Q);
    P = Pn;
  }
}

bool is_degree_two(const QuadraticSurd& x) { return !is_perfect_square(x.d()); }

std::vector<std::int64_t> CFExpansion::terms(std::size_t n) const {
  std::vector<std::int64_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < preperiod.size()) {
      out.push_back(preperiod[i]);
    } else if (!period.empty()) {
      out.push_back(period[(i - preperiod.size()) % period.size()]);
    } else {
      break;
    }
  }
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> CFExpansion::convergents(std::size_t n) const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  i128 p_prev = 1, p = 0, q_prev = 0, q = 1;
  for (std::int64_t a : terms(n)) {
    const i128 pn = a * p_prev + p;
    const i128 qn = a * q_prev + q;
    p = p_prev;
    q = q_prev;
    p_prev = pn;
    q_prev = qn;
    out.emplace_back(narrow(pn), narrow(qn));
  }
  return out;
}

}  // namespace rigidity
