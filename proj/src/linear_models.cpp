#include "rigidity/linear_models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rigidity {

namespace {

using i128 = __int128;

std::int64_t checked(i128 v, const char* what) {
  if (v > INT64_MAX || v < INT64_MIN) {
    throw Error(ErrorCode::InvalidArgument, std::string("integer overflow in ") + what);
  }
  return static_cast<std::int64_t>(v);
}

void require_square(const IntMatrix& m) {
  if (m.empty()) throw Error(ErrorCode::InvalidArgument, "empty matrix");
  for (const auto& row : m) {
    if (row.size() != m.size()) throw Error(ErrorCode::InvalidArgument, "matrix is not square");
  }
}

Vec2 orient(Vec2 v) {
  v = normalized(v);
  if (v.x < 0.0 || (v.x == 0.0 && v.y < 0.0)) v = -v;
  return v;
}

Eigen::VectorXd to_eigen(const Vec2& v) {
  Eigen::VectorXd out(2);
  out << v.x, v.y;
  return out;
}

void analyze_2x2(HyperbolicAutomorphism& out) {
  const IMat2 m = out.imat2();
  const std::int64_t a = m[0][0], b = m[0][1], c = m[1][0], d = m[1][1];
  ExactEigen2 ex;
  ex.trace = a + d;
  ex.det = checked(static_cast<i128>(a) * d - static_cast<i128>(b) * c, "determinant");
  ex.disc = checked(static_cast<i128>(ex.trace) * ex.trace - 4 * static_cast<i128>(ex.det),
                    "discriminant");
  if (ex.disc < 0 || is_perfect_square(ex.disc) || b == 0) {
    // Complex or rational eigenvalues of a unimodular integer matrix lie on
    // the unit circle.
    throw Error(ErrorCode::NotHyperbolic, "2x2 matrix has eigenvalues of modulus 1");
  }
  ex.unstable_sign = ex.trace >= 0 ? 1 : -1;

  const double t = static_cast<double>(ex.trace);
  const double sq = std::sqrt(static_cast<double>(ex.disc));
  out.mu_unstable = 0.5 * (t + ex.unstable_sign * sq);
  out.mu_stable = static_cast<double>(ex.det) / out.mu_unstable;
  if (std::abs(std::abs(out.mu_unstable) - 1.0) < 1e-9 ||
      std::abs(std::abs(out.mu_stable) - 1.0) < 1e-9) {
    throw Error(ErrorCode::NotHyperbolic, "eigenvalue modulus within 1e-9 of 1");
  }

  const Mat2 A = to_real(m);
  auto eigvec = [&](double mu) {
    const Vec2 v1{A.b, mu - A.a};
    const Vec2 v2{mu - A.d, A.c};
    return orient(norm(v1) >= norm(v2) ? v1 : v2);
  };
  out.e_unstable = eigvec(out.mu_unstable);
  out.e_stable = eigvec(out.mu_stable);

  ex.unstable_vector = {HalfIntSurd{2 * b, 0}, HalfIntSurd{ex.trace - 2 * a, ex.unstable_sign}};
  ex.stable_vector = {HalfIntSurd{2 * b, 0}, HalfIntSurd{ex.trace - 2 * a, -ex.unstable_sign}};
  out.exact = ex;

  out.eigenvalues = {out.mu_unstable, out.mu_stable};
  out.unstable_basis = {to_eigen(out.e_unstable)};
  out.stable_basis = {to_eigen(out.e_stable)};
  out.unstable_log_volume = std::log(std::abs(out.mu_unstable));
}

void analyze_general(HyperbolicAutomorphism& out) {
  const auto n = static_cast<Eigen::Index>(out.dim());
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      M(i, j) = static_cast<double>(out.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "eigen decomposition failed");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  const auto& values = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return std::abs(values(i)) > std::abs(values(j));
  });
  out.unstable_log_volume = 0.0;
  for (Eigen::Index idx : order) {
    const std::complex<double> mu = values(idx);
    const double modulus = std::abs(mu);
    if (std::abs(modulus - 1.0) < 1e-9) {
      throw Error(ErrorCode::NotHyperbolic, "eigenvalue modulus within 1e-9 of 1");
    }
    out.eigenvalues.push_back(mu);
    auto& basis = modulus > 1.0 ? out.unstable_basis : out.stable_basis;
    if (modulus > 1.0) out.unstable_log_volume += std::log(modulus);
    const Eigen::VectorXcd v = solver.eigenvectors().col(idx);
    if (std::abs(mu.imag()) < 1e-14) {
      basis.push_back(v.real().normalized());
    } else if (mu.imag() > 0.0) {
      basis.push_back(v.real().normalized());
      basis.push_back(v.imag().normalized());
    }
  }
}

}  // namespace

IMat2 HyperbolicAutomorphism::imat2() const {
  if (dim() != 2) throw Error(ErrorCode::InvalidArgument, "operation requires d = 2");
  return {{{matrix[0][0], matrix[0][1]}, {matrix[1][0], matrix[1][1]}}};
}

Mat2 HyperbolicAutomorphism::inverse2() const {
  const IMat2 m = imat2();
  const double s = static_cast<double>(determinant);
  // Exact for |det| = 1.
  return {s * static_cast<double>(m[1][1]), -s * static_cast<double>(m[0][1]),
          -s * static_cast<double>(m[1][0]), s * static_cast<double>(m[0][0])};
}

Vec2 HyperbolicAutomorphism::eigen_coordinates(const Vec2& v) const {
  // Cramer's rule for v = cu * e_u + cs * e_s.
  const double den = cross(e_unstable, e_stable);
  return {cross(v, e_stable) / den, cross(e_unstable, v) / den};
}

std::int64_t integer_determinant(const IntMatrix& m) {
  require_square(m);
  const std::size_t n = m.size();
  std::vector<std::vector<i128>> w(n, std::vector<i128>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) w[i][j] = m[i][j];
  }
  // Fraction-free Bareiss elimination.
  i128 prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (w[k][k] == 0) {
      std::size_t pivot = k + 1;
      while (pivot < n && w[pivot][k] == 0) ++pivot;
      if (pivot == n) return 0;
      std::swap(w[k], w[pivot]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      for (std::size_t j = k + 1; j < n; ++j) {
        w[i][j] = (w[i][j] * w[k][k] - w[i][k] * w[k][j]) / prev;
        checked(w[i][j], "determinant");
      }
    }
    prev = w[k][k];
  }
  return checked(sign * w[n - 1][n - 1], "determinant");
}

IntMatrix integer_power(const IntMatrix& m, int n) {
  require_square(m);
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "negative power");
  const std::size_t d = m.size();
  IntMatrix result(d, std::vector<std::int64_t>(d, 0));
  for (std::size_t i = 0; i < d; ++i) result[i][i] = 1;
  for (int step = 0; step < n; ++step) {
    IntMatrix next(d, std::vector<std::int64_t>(d, 0));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        i128 acc = 0;
        for (std::size_t k = 0; k < d; ++k) acc += static_cast<i128>(result[i][k]) * m[k][j];
        next[i][j] = checked(acc, "matrix power");
      }
    }
    result = std::move(next);
  }
  return result;
}

HyperbolicAutomorphism analyze_automorphism(const IntMatrix& matrix) {
  require_square(matrix);
  HyperbolicAutomorphism out;
  out.matrix = matrix;
  const std::int64_t det = integer_determinant(matrix);
  if (det != 1 && det != -1) {
    std::ostringstream os;
    os << "determinant " << det << " is not +/-1";
    throw Error(ErrorCode::NotUnimodular, os.str());
  }
  out.determinant = static_cast<int>(det);
  if (matrix.size() == 2) {
    analyze_2x2(out);
  } else {
    analyze_general(out);
  }
  return out;
}

HyperbolicAutomorphism analyze_automorphism(const IMat2& m) {
  return analyze_automorphism(IntMatrix{{m[0][0], m[0][1]}, {m[1][0], m[1][1]}});
}

QuadraticSurd linear_rotation_number(const HyperbolicAutomorphism& a, const IVec2& transverse,
                                     const IVec2& normalizer) {
  if (!a.exact) throw Error(ErrorCode::InvalidArgument, "rotation number requires d = 2");
  const ExactEigen2& ex = *a.exact;
  const HalfIntSurd w1 = ex.stable_vector[0];
  const HalfIntSurd w2 = ex.stable_vector[1];
  // Twice cross(w, e) = (x + y sqrt(disc)), the coefficient of e along E^u
  // up to the common factor 1 / cross(w, e_u).
  auto twice_cross = [&](const IVec2& e) {
    const i128 x = static_cast<i128>(w1.x) * e[1] - static_cast<i128>(w2.x) * e[0];
    const i128 y = static_cast<i128>(w1.y) * e[1] - static_cast<i128>(w2.y) * e[0];
    return std::make_pair(x, y);
  };
  const auto [x1, y1] = twice_cross(transverse);
  const auto [x2, y2] = twice_cross(normalizer);
  if (x2 == 0 && y2 == 0) {
    throw Error(ErrorCode::DegenerateProjection, "normalizer projects to zero on E^u");
  }
  const i128 D = ex.disc;
  const i128 den = x2 * x2 - y2 * y2 * D;
  const i128 rat = x1 * x2 - y1 * y2 * D;
  const i128 irr = y1 * x2 - x1 * y2;
  return QuadraticSurd::from_parts(checked(rat, "rotation number"),
                                   checked(irr, "rotation number"), ex.disc,
                                   checked(den, "rotation number"));
}

std::int64_t lattice_fixed_count(const HyperbolicAutomorphism& a, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "period must be >= 1");
  IntMatrix p = integer_power(a.matrix, n);
  for (std::size_t i = 0; i < p.size(); ++i) p[i][i] -= 1;
  const std::int64_t det = integer_determinant(p);
  return det < 0 ? -det : det;
}

}  // namespace rigidity
