#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rigidity {

enum class ErrorCode {
  NotUnimodular,
  NotHyperbolic,
  DegenerateProjection,
  InvalidArgument,
  NonZeroAtOrigin,
  NoConvergence,
  CertificationFailed,
  CountMismatch,
  NonHyperbolicOrbit,
  DepthExceeded,
  NoIntersectionInWindow,
  OffLeaf,
  NonMonotoneBlend,
  MonotonicityViolation,
  ToleranceNotReached,
  IdentityViolation,
  InsufficientSamples,
  NonMonotone,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

// Every failure in the library surfaces as this exception; `code()` carries
// the condition, `what()` a human-readable diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

inline constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
inline double norm_inf(const Vec2& a) { return std::max(std::abs(a.x), std::abs(a.y)); }
inline Vec2 normalized(const Vec2& a) { return a / norm(a); }

/// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 from_columns(const Vec2& c0, const Vec2& c1) {
    return {c0.x, c1.x, c0.y, c1.y};
  }

  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }
  constexpr Mat2 inverse() const {
    const double k = 1.0 / det();
    return {d * k, -b * k, -c * k, a * k};
  }
  constexpr Vec2 column(int j) const { return j == 0 ? Vec2{a, c} : Vec2{b, d}; }

  friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend constexpr Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d, m.c * n.a + m.d * n.c,
            m.c * n.b + m.d * n.d};
  }
  friend constexpr Mat2 operator+(const Mat2& m, const Mat2& n) {
    return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
  }
  friend constexpr Mat2 operator-(const Mat2& m, const Mat2& n) {
    return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& m) {
    return {s * m.a, s * m.b, s * m.c, s * m.d};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

inline double norm_inf(const Mat2& m) {
  return std::max(std::abs(m.a) + std::abs(m.b), std::abs(m.c) + std::abs(m.d));
}

/// Integer 2x2 matrix, row-major.
using IMat2 = std::array<std::array<std::int64_t, 2>, 2>;
using IVec2 = std::array<std::int64_t, 2>;

inline Mat2 to_real(const IMat2& m) {
  return {static_cast<double>(m[0][0]), static_cast<double>(m[0][1]),
          static_cast<double>(m[1][0]), static_cast<double>(m[1][1])};
}
inline Vec2 to_real(const IVec2& v) {
  return {static_cast<double>(v[0]), static_cast<double>(v[1])};
}

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Representative of x modulo Z^2 in [0,1)^2.
inline Vec2 wrap_unit(const Vec2& p) {
  Vec2 r{p.x - std::floor(p.x), p.y - std::floor(p.y)};
  if (r.x >= 1.0) r.x = 0.0;
  if (r.y >= 1.0) r.y = 0.0;
  return r;
}

/// Shortest representative of v modulo Z^2, components in [-1/2, 1/2].
inline Vec2 wrap_centered(const Vec2& v) {
  return {v.x - std::nearbyint(v.x), v.y - std::nearbyint(v.y)};
}

/// Distance on the flat torus R^2 / Z^2.
inline double torus_distance(const Vec2& p, const Vec2& q) {
  return norm(wrap_centered(p - q));
}

}  // namespace rigidity
