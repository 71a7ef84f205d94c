#pragma once

#include <filesystem>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "rigidity/leaves.hpp"

namespace rigidity {

/// Finite-difference weights for the `order`-th derivative at x0 from the
/// given nodes (Fornberg's recursion).
std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int order);

enum class ChartFlavor { Nonlinear, Linear };

struct SeamReport {
  std::vector<double> mismatch;  // |left - right| of s^(j) at t = 1, j = 0..m
  double max() const;
};

/// Chart t -> h(t) of the unstable leaf through 0, with h(0) = 0 and
/// h(t + 1) = T^{e2}(h(t)). Points of the leaf are addressed by their
/// arclength s from 0; on [0, 1] the chart is s = sigma(t), a polynomial of
/// degree 2m+1 matching the T^{e2} pullback to order m at both ends.
class ChartMap {
 public:
  ChartFlavor flavor() const { return flavor_; }
  int gluing_order() const { return order_; }
  double scale() const { return scale_; }
  /// Arclength of T^{e2}(0).
  double period_arclength() const { return s1_; }
  /// tau^(j)(0) for tau = T^{e2} in arclength, j = 0..m.
  const std::vector<double>& tau_derivatives() const { return tau_; }
  /// Monomial coefficients of sigma on [0, 1].
  const std::vector<double>& sigma_coefficients() const { return sigma_; }
  /// pi^u(e1) / pi^u(e2) of the linear model, the rotation T^{e1} induces
  /// when f = A.
  double linear_rotation() const { return alpha_; }

  double sigma(double t, int derivative = 0) const;
  double arclength(double t) const;
  double parameter(double s) const;
  Vec2 point(double t) const;
  Vec2 point_at_arclength(double s) const;
  /// T^n on the leaf, in arclength.
  double translate(const IVec2& n, double s) const;
  std::vector<double> fundamental_nodes(int count) const;
  SeamReport seam_mismatch() const;
  /// max |h(t + 1) - T^{e2}(h(t))| over `count` points of [0, 1), checked
  /// through the extension at t - 1 and t + 1.
  double deck_defect(int count) const;

  friend ChartMap build_chart_f(const LeafContext& ctx, int order);
  friend ChartMap build_chart_A(const HyperbolicAutomorphism& a);

 private:
  ChartMap() = default;
  double inverse_sigma(double s) const;

  ChartFlavor flavor_ = ChartFlavor::Linear;
  int order_ = 0;
  double scale_ = 0.0;
  double s1_ = 0.0;
  double alpha_ = 0.0;
  Vec2 e_u_;
  Vec2 coord_u_;  // pi^u coordinates of e1, e2
  std::vector<double> tau_;
  std::vector<double> sigma_;
  std::shared_ptr<const LeafCurve> leaf_;
  std::shared_ptr<const LineField> stable_;
};

/// Chart of the nonlinear unstable leaf. Throws NonMonotoneBlend if no
/// scale in the fallback scan gives a monotone sigma.
ChartMap build_chart_f(const LeafContext& ctx, int order = 2);
/// The linear chart h_A(t) = t pi^u(e2).
ChartMap build_chart_A(const HyperbolicAutomorphism& a);

/// Degree-one lift sampled at t_i = i / M with first and second derivative
/// samples, evaluated by monotone cubic Hermite interpolation. T(x + 1) =
/// T(x) + 1 is built into the evaluation.
struct CircleMapLift {
  std::vector<double> values;
  std::vector<double> d1;
  std::vector<double> d2;
  double commutation_defect = 0.0;  // raw pipeline |T(t + 1) - T(t) - 1|
  double degree_defect = 0.0;       // raw |T(1) - T(0) - 1|

  int samples() const { return static_cast<int>(values.size()); }
  double operator()(double x) const;
  double derivative(double x) const;
  double min_derivative() const;
  /// Columns t, T, T', T''.
  void write_csv(const std::filesystem::path& path) const;
};

/// Samples a lift given pointwise with derivative rules as in the chart
/// pipeline: central differences with Richardson extrapolation (step 1e-5)
/// and second differences (step 1e-4). Throws MonotonicityViolation.
CircleMapLift sample_circle_map(const std::function<double(double)>& lift, int samples);

/// T_f = h^{-1} o T^{e1} o h on the chart, unsampled.
double circle_map_value(const ChartMap& chart, double t);
CircleMapLift induce_circle_map(const ChartMap& chart, int samples = 4096);

struct RotationResult {
  double rho = 0.0;
  double error_estimate = 0.0;
  long iterations = 0;
  bool periodic = false;  // exact return detected
  std::int64_t p = 0;     // last closest return: T^q(x0) - x0 near p
  std::int64_t q = 0;
};

/// Rotation number from the closest returns of the orbit of x0. At a record
/// return time q the estimate is (T^q(x0) - x0) / q, whose error shrinks
/// like the return distance over q; the error estimate is the spread of the
/// last three record estimates. An exact return gives p / q. Throws
/// ToleranceNotReached.
RotationResult rotation_number(const std::function<double(double)>& lift, double tol,
                               long max_iterations = 1000000, double x0 = 0.0);

struct ReducedConjugacy {
  std::vector<double> values;       // H-hat(i / M)
  double alpha = 0.0;
  double commutation_defect = 0.0;  // sup |H(t + 1) - H(t) - 1|
  double rotation_defect = 0.0;     // sup |H(T(t)) - H(t) - alpha|
  double leaf_defect = 0.0;         // sup |pi^s(H(h_f(t)))|
  double min_increment = 0.0;
};

/// H-hat = h_A^{-1} o H o h_f sampled on [0, 1). Throws IdentityViolation if
/// either identity fails by more than `tol`.
ReducedConjugacy reduced_conjugacy(const ConjugacyMap& h, const ChartMap& chart_f,
                                   const ChartMap& chart_A, const CircleMapLift& circle,
                                   int samples = 4096, double tol = 1e-6);

struct BirkhoffConjugacy {
  std::vector<double> grid;
  std::vector<double> values;  // phi on the grid, phi(0) = 0
  double defect = 0.0;         // sup |phi(T x) - phi(x) - rho| on the grid
  int terms = 0;
};

/// phi(x) = x + sum_{n<N} w_n (T^n x - x - n rho) with Fejer weights
/// w_n proportional to N - n, normalized so phi(0) = 0.
BirkhoffConjugacy birkhoff_conjugacy(const std::function<double(double)>& lift, double rho,
                                     int terms, int grid = 256);
double birkhoff_value(const std::function<double(double)>& lift, double rho, int terms,
                      double x);

}  // namespace rigidity
