#include "rigidity/anosov_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

inline void sin_cos(double theta, double& s, double& c) { ::sincos(theta, &s, &c); }

double frobenius(const Mat2& m) { return std::sqrt(m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d); }

struct ConeSlack {
  double ratio = 0.0;  // max |image transverse| / |image leading| at the cone edges
  double lead = 0.0;   // min |image leading coordinate|
  bool ok = false;
};

// Cone {(1, t) : |t| <= kappa} in (lead, transverse) coordinates mapped by
// [[m11, m12], [m21, m22]] perturbed by at most delta in operator norm. The
// image slope is a Moebius function of t, so extremes sit at t = +/-kappa.
ConeSlack cone_image(double m11, double m12, double m21, double m22, double kappa,
                     double delta) {
  ConeSlack out;
  const double pad = delta * std::sqrt(1.0 + kappa * kappa);
  const double lead_lo = m11 - m12 * kappa;
  const double lead_hi = m11 + m12 * kappa;
  if ((lead_lo > 0.0) != (lead_hi > 0.0)) return out;
  const double lead = std::min(std::abs(lead_lo), std::abs(lead_hi)) - pad;
  if (lead <= 0.0) return out;
  const double trans = std::max(std::abs(m21 - m22 * kappa), std::abs(m21 + m22 * kappa)) + pad;
  out.lead = lead;
  out.ratio = trans / lead;
  out.ok = true;
  return out;
}

}  // namespace

PerturbedMap::PerturbedMap(HyperbolicAutomorphism linear, std::vector<TrigTerm> terms,
                           double amplitude)
    : linear_(std::move(linear)), terms_(std::move(terms)), amplitude_(amplitude) {
  if (linear_.dim() != 2) throw Error(ErrorCode::InvalidArgument, "perturbed maps require d = 2");
  Vec2 at_origin;
  for (const auto& t : terms_) at_origin += t.cos_coef;
  if (norm_inf(at_origin) > 1e-14) {
    std::ostringstream os;
    os << "perturbation must vanish at the origin; psi(0) = (" << at_origin.x << ", "
       << at_origin.y << ")";
    throw Error(ErrorCode::NonZeroAtOrigin, os.str());
  }
  a_ = linear_.mat2();
  a_inv_ = linear_.inverse2();
}

PerturbedMap PerturbedMap::default_family(double amplitude) {
  TrigTerm t;
  t.k = {1, 1};
  t.sin_coef = {1.0 / kTwoPi, 0.0};
  return PerturbedMap(analyze_automorphism(IMat2{{{2, 1}, {1, 1}}}), {t}, amplitude);
}

Vec2 PerturbedMap::psi(const Vec2& x) const {
  Vec2 out;
  for (const auto& t : terms_) {
    double s, c;
    sin_cos(kTwoPi * (static_cast<double>(t.k[0]) * x.x + static_cast<double>(t.k[1]) * x.y), s, c);
    out += c * t.cos_coef + s * t.sin_coef;
  }
  return out;
}

Mat2 PerturbedMap::psi_derivative(const Vec2& x) const {
  Mat2 out{};
  for (const auto& t : terms_) {
    const double k0 = static_cast<double>(t.k[0]), k1 = static_cast<double>(t.k[1]);
    double s, c;
    sin_cos(kTwoPi * (k0 * x.x + k1 * x.y), s, c);
    const Vec2 g = kTwoPi * (c * t.sin_coef - s * t.cos_coef);
    out = out + Mat2{g.x * k0, g.x * k1, g.y * k0, g.y * k1};
  }
  return out;
}

Vec2 PerturbedMap::evaluate(const Vec2& x) const {
  if (amplitude_ == 0.0) return a_ * x;
  return a_ * x + amplitude_ * psi(x);
}

Mat2 PerturbedMap::derivative(const Vec2& x) const {
  if (amplitude_ == 0.0) return a_;
  return a_ + amplitude_ * psi_derivative(x);
}

void PerturbedMap::evaluate_with_derivative(const Vec2& x, Vec2& value, Mat2& jacobian) const {
  value = a_ * x;
  jacobian = a_;
  if (amplitude_ == 0.0) return;
  for (const auto& t : terms_) {
    const double k0 = static_cast<double>(t.k[0]), k1 = static_cast<double>(t.k[1]);
    double s, c;
    sin_cos(kTwoPi * (k0 * x.x + k1 * x.y), s, c);
    value += amplitude_ * (c * t.cos_coef + s * t.sin_coef);
    const Vec2 g = (amplitude_ * kTwoPi) * (c * t.sin_coef - s * t.cos_coef);
    jacobian = jacobian + Mat2{g.x * k0, g.x * k1, g.y * k0, g.y * k1};
  }
}

Vec2 PerturbedMap::inverse_evaluate(const Vec2& y, double tol) const {
  // F^{-1}(y0 + n) = F^{-1}(y0) + A^{-1} n for integer n, and A^{-1} n is
  // exact, so solve on the unit-square representative.
  const Vec2 shift{std::floor(y.x), std::floor(y.y)};
  const Vec2 y0 = y - shift;
  const Vec2 back = a_inv_ * shift;
  Vec2 x = a_inv_ * y0;
  if (amplitude_ == 0.0) return x + back;
  Vec2 fx;
  Mat2 j;
  for (int it = 0; it < 50; ++it) {
    evaluate_with_derivative(x, fx, j);
    const Vec2 r = fx - y0;
    const double rn = norm_inf(r);
    const Vec2 step = j.inverse() * r;
    x -= step;
    if (rn < tol || norm_inf(step) < 4.0 * std::numeric_limits<double>::epsilon()) {
      return x + back;
    }
  }
  throw Error(ErrorCode::NoConvergence, "inverse Newton iteration did not converge in 50 steps");
}

double PerturbedMap::psi_derivative_lipschitz() const {
  double l = 0.0;
  for (const auto& t : terms_) {
    const double k2 = static_cast<double>(t.k[0] * t.k[0] + t.k[1] * t.k[1]);
    l += kTwoPi * kTwoPi * k2 * (norm(t.cos_coef) + norm(t.sin_coef));
  }
  return l;
}

double PerturbedMap::psi_sup_bound() const {
  double s = 0.0;
  for (const auto& t : terms_) s += norm(t.cos_coef) + norm(t.sin_coef);
  return s;
}

ConeCertificate verify_anosov(const PerturbedMap& f, int grid_resolution) {
  if (grid_resolution < 64) {
    throw Error(ErrorCode::InvalidArgument, "certification grid must be at least 64");
  }
  const HyperbolicAutomorphism& lin = f.linear();
  const Mat2 basis = lin.eigenbasis();
  const Mat2 basis_inv = basis.inverse();
  const double h = 1.0 / grid_resolution;
  const double cond = frobenius(basis) * frobenius(basis_inv);
  // Any point of T^2 lies within h/sqrt(2) of a grid node.
  const double delta = cond * std::abs(f.amplitude()) * f.psi_derivative_lipschitz() * h *
                       std::sqrt(0.5);

  const auto n = static_cast<std::size_t>(grid_resolution) * grid_resolution;
  std::vector<Mat2> forward(n), backward(n);
  std::vector<double> dets(n);
  parallel_for(n, [&](std::size_t idx) {
    const Vec2 x{static_cast<double>(idx % grid_resolution) * h,
                 static_cast<double>(idx / grid_resolution) * h};
    const Mat2 df = f.derivative(x);
    dets[idx] = df.det();
    forward[idx] = basis_inv * df * basis;
    backward[idx] = forward[idx].inverse();
  });

  double det_min = std::numeric_limits<double>::infinity();
  double det_max = -det_min;
  for (double d : dets) {
    det_min = std::min(det_min, d);
    det_max = std::max(det_max, d);
  }
  if (det_min <= 0.0 && det_max >= 0.0) {
    throw Error(ErrorCode::CertificationFailed, "det Df changes sign or vanishes on the grid");
  }

  std::ostringstream failure;
  for (double theta = 0.2; theta >= 1e-3; theta *= 0.5) {
    const double kappa = std::tan(theta);
    double margin = std::numeric_limits<double>::infinity();
    double expansion = margin;
    double contraction = 0.0;
    std::size_t worst = 0;
    bool ok = true;
    for (std::size_t idx = 0; idx < n && ok; ++idx) {
      const Mat2& m = forward[idx];
      const Mat2& inv = backward[idx];
      const double inv_norm = frobenius(inv);
      const double delta_inv = inv_norm * inv_norm * delta / std::max(1e-300, 1.0 - inv_norm * delta);
      const ConeSlack u = cone_image(m.a, m.b, m.c, m.d, kappa, delta);
      const ConeSlack s = cone_image(inv.d, inv.c, inv.b, inv.a, kappa, delta_inv);
      if (!u.ok || !s.ok || inv_norm * delta >= 1.0) {
        ok = false;
        worst = idx;
        break;
      }
      const double slack = std::min(kappa - u.ratio, kappa - s.ratio);
      if (slack < margin) {
        margin = slack;
        worst = idx;
      }
      expansion = std::min(expansion, u.lead);
      contraction = std::max(contraction, 1.0 / s.lead);
    }
    if (ok && margin > 0.0 && expansion > 1.0 && contraction < 1.0) {
      ConeCertificate cert;
      cert.cone_half_width_unstable = theta;
      cert.cone_half_width_stable = theta;
      cert.expansion_factor = expansion;
      cert.contraction_factor = contraction;
      cert.grid_resolution = grid_resolution;
      cert.margin = margin;
      cert.interpolation_bound = delta;
      cert.det_min = det_min;
      cert.det_max = det_max;
      return cert;
    }
    failure.str("");
    failure << "cone invariance fails at half-width " << theta << ", worst grid point ("
            << static_cast<double>(worst % grid_resolution) * h << ", "
            << static_cast<double>(worst / grid_resolution) * h << "), margin "
            << (ok ? margin : -std::numeric_limits<double>::infinity())
            << ", expansion " << expansion << ", contraction " << contraction;
  }
  throw Error(ErrorCode::CertificationFailed, failure.str());
}

ConePointCheck check_cones_at(const PerturbedMap& f, const ConeCertificate& cert,
                              const Vec2& x) {
  const Mat2 basis = f.linear().eigenbasis();
  const Mat2 m = basis.inverse() * f.derivative(x) * basis;
  const Mat2 inv = m.inverse();
  const double ku = std::tan(cert.cone_half_width_unstable);
  const double ks = std::tan(cert.cone_half_width_stable);
  const ConeSlack u = cone_image(m.a, m.b, m.c, m.d, ku, 0.0);
  const ConeSlack s = cone_image(inv.d, inv.c, inv.b, inv.a, ks, 0.0);
  ConePointCheck out;
  out.unstable_slack = u.ok ? ku - u.ratio : -1.0;
  out.stable_slack = s.ok ? ks - s.ratio : -1.0;
  out.expansion = u.lead;
  out.contraction = s.ok ? 1.0 / s.lead : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace rigidity
