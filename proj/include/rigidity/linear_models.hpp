#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "rigidity/common.hpp"
#include "rigidity/surd.hpp"

namespace rigidity {

using IntMatrix = std::vector<std::vector<std::int64_t>>;

/// An element (x + y*sqrt(disc)) / 2 of Q(sqrt(disc)) with integer x, y.
struct HalfIntSurd {
  std::int64_t x = 0;
  std::int64_t y = 0;
};

/// Exact eigendata of a hyperbolic 2x2 integer matrix [[a, b], [c, d]].
/// Eigenvalues are (trace +/- sqrt(disc)) / 2; the eigenvector for mu is
/// (b, mu - a), stored with both components in Q(sqrt(disc)).
struct ExactEigen2 {
  std::int64_t trace = 0;
  std::int64_t det = 0;
  std::int64_t disc = 0;          // trace^2 - 4 det, never a perfect square
  int unstable_sign = 1;          // mu_u = (trace + unstable_sign*sqrt(disc)) / 2
  std::array<HalfIntSurd, 2> stable_vector;
  std::array<HalfIntSurd, 2> unstable_vector;
};

/// Linear model A of an Anosov map: a unimodular integer matrix with no
/// eigenvalue on the unit circle.
struct HyperbolicAutomorphism {
  IntMatrix matrix;
  int determinant = 1;
  std::vector<std::complex<double>> eigenvalues;  // sorted by decreasing modulus
  std::vector<Eigen::VectorXd> stable_basis;
  std::vector<Eigen::VectorXd> unstable_basis;
  double unstable_log_volume = 0.0;

  // Populated for d = 2 only.
  std::optional<ExactEigen2> exact;
  double mu_unstable = 0.0;
  double mu_stable = 0.0;
  Vec2 e_unstable;  // unit vectors, first nonzero component positive
  Vec2 e_stable;

  std::size_t dim() const { return matrix.size(); }

  // d = 2 helpers.
  IMat2 imat2() const;
  Mat2 mat2() const { return to_real(imat2()); }
  Mat2 inverse2() const;
  Mat2 eigenbasis() const { return Mat2::from_columns(e_unstable, e_stable); }
  /// Coordinates (unstable, stable) of v in the eigenbasis.
  Vec2 eigen_coordinates(const Vec2& v) const;
  Vec2 from_eigen_coordinates(const Vec2& c) const {
    return c.x * e_unstable + c.y * e_stable;
  }
  /// Projection onto E^u along E^s.
  Vec2 project_unstable(const Vec2& v) const { return eigen_coordinates(v).x * e_unstable; }
  /// Projection onto E^s along E^u.
  Vec2 project_stable(const Vec2& v) const { return eigen_coordinates(v).y * e_stable; }
};

HyperbolicAutomorphism analyze_automorphism(const IntMatrix& matrix);
HyperbolicAutomorphism analyze_automorphism(const IMat2& matrix);

/// alpha = pi_u(transverse) / pi_u(normalizer), exact, for d = 2.
QuadraticSurd linear_rotation_number(const HyperbolicAutomorphism& a,
                                     const IVec2& transverse = {1, 0},
                                     const IVec2& normalizer = {0, 1});

/// |det(A^n - I)|, the number of points of the torus fixed by A^n.
std::int64_t lattice_fixed_count(const HyperbolicAutomorphism& a, int n);

std::int64_t integer_determinant(const IntMatrix& m);
IntMatrix integer_power(const IntMatrix& m, int n);

}  // namespace rigidity
