#pragma once

#include <vector>

#include "rigidity/common.hpp"
#include "rigidity/linear_models.hpp"

namespace rigidity {

/// One trigonometric term c*cos(2 pi k.x) + s*sin(2 pi k.x) of the perturbation.
struct TrigTerm {
  IVec2 k{0, 0};
  Vec2 cos_coef;
  Vec2 sin_coef;
};

/// Lift F(x) = A x + eps * psi(x) of a perturbed hyperbolic toral automorphism,
/// psi a Z^2-periodic trigonometric polynomial with psi(0) = 0.
class PerturbedMap {
 public:
  /// Throws NonZeroAtOrigin unless the cosine coefficients sum to zero, and
  /// InvalidArgument unless the linear part is 2x2.
  PerturbedMap(HyperbolicAutomorphism linear, std::vector<TrigTerm> terms, double amplitude);

  /// The repo's default test family psi = ((1/2pi) sin 2pi(x1 + x2), 0) on
  /// the cat map [[2,1],[1,1]].
  static PerturbedMap default_family(double amplitude);

  const HyperbolicAutomorphism& linear() const { return linear_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  double amplitude() const { return amplitude_; }
  const Mat2& matrix() const { return a_; }
  const Mat2& matrix_inverse() const { return a_inv_; }

  Vec2 psi(const Vec2& x) const;
  Mat2 psi_derivative(const Vec2& x) const;

  Vec2 evaluate(const Vec2& x) const;
  Mat2 derivative(const Vec2& x) const;
  /// F(x) and DF(x) from a single pass over the terms.
  void evaluate_with_derivative(const Vec2& x, Vec2& value, Mat2& jacobian) const;

  /// Newton solve of F(x) = y seeded at A^{-1} y. Throws NoConvergence after
  /// 50 steps.
  Vec2 inverse_evaluate(const Vec2& y, double tol = 1e-14) const;

  /// Bound L with ||D psi(x) - D psi(y)|| <= L |x - y| (operator 2-norm).
  double psi_derivative_lipschitz() const;
  /// Bound on sup |psi|.
  double psi_sup_bound() const;

 private:
  HyperbolicAutomorphism linear_;
  std::vector<TrigTerm> terms_;
  double amplitude_;
  Mat2 a_;
  Mat2 a_inv_;
};

/// Constant cone families around E^u_A and E^s_A, certified on a grid with a
/// Lipschitz interpolation margin so the statement covers all of T^2.
/// Half-widths are angles measured in eigen-coordinates (u, s).
struct ConeCertificate {
  double cone_half_width_unstable = 0.0;
  double cone_half_width_stable = 0.0;
  double expansion_factor = 0.0;    // min |(Df v)_u| / |v_u| over the unstable cone
  double contraction_factor = 0.0;  // max |(Df v)_s| / |v_s| over the stable cone
  int grid_resolution = 0;
  double margin = 0.0;              // min slack of strict cone invariance (slope units)
  double interpolation_bound = 0.0; // perturbation radius covered between grid nodes
  double det_min = 0.0;
  double det_max = 0.0;
};

/// Slack of the cone conditions at a single point, without interpolation
/// margin. Used to re-verify certificates on random samples.
struct ConePointCheck {
  double unstable_slack = 0.0;  // kappa - max image slope, unstable cone
  double stable_slack = 0.0;
  double expansion = 0.0;
  double contraction = 0.0;
};

ConeCertificate verify_anosov(const PerturbedMap& f, int grid_resolution = 256);

ConePointCheck check_cones_at(const PerturbedMap& f, const ConeCertificate& cert,
                              const Vec2& x);

}  // namespace rigidity
