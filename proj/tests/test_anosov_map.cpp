#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rigidity/anosov_map.hpp"

using namespace rigidity;

namespace {

Mat2 numeric_derivative(const PerturbedMap& f, const Vec2& x) {
  const double h = 1e-6;
  const Vec2 dx = (f.evaluate(x + Vec2{h, 0}) - f.evaluate(x - Vec2{h, 0})) / (2 * h);
  const Vec2 dy = (f.evaluate(x + Vec2{0, h}) - f.evaluate(x - Vec2{0, h})) / (2 * h);
  return Mat2::from_columns(dx, dy);
}

}  // namespace

TEST(AnosovMap, RejectsPerturbationNotVanishingAtOrigin) {
  TrigTerm t;
  t.k = {1, 0};
  t.cos_coef = {0.1, 0.0};
  try {
    PerturbedMap(analyze_automorphism(IMat2{{{2, 1}, {1, 1}}}), {t}, 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonZeroAtOrigin);
  }
  // Cosine terms that cancel at the origin are fine.
  TrigTerm u = t;
  u.k = {0, 1};
  u.cos_coef = {-0.1, 0.0};
  EXPECT_NO_THROW(PerturbedMap(analyze_automorphism(IMat2{{{2, 1}, {1, 1}}}), {t, u}, 0.01));
}

TEST(AnosovMap, DerivativeMatchesFiniteDifferences) {
  const auto f = PerturbedMap::default_family(0.03);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x{unit(rng), unit(rng)};
    const Mat2 d = f.derivative(x);
    const Mat2 n = numeric_derivative(f, x);
    EXPECT_NEAR(d.a, n.a, 1e-8);
    EXPECT_NEAR(d.b, n.b, 1e-8);
    EXPECT_NEAR(d.c, n.c, 1e-8);
    EXPECT_NEAR(d.d, n.d, 1e-8);
    // The default family is area preserving: det Df = 1 identically.
    EXPECT_NEAR(d.det(), 1.0, 1e-14);
  }
}

TEST(AnosovMap, InverseRoundTripAndEquivariance) {
  const auto f = PerturbedMap::default_family(0.03);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 y{unit(rng), unit(rng)};
    const Vec2 x = f.inverse_evaluate(y);
    EXPECT_LT(norm_inf(f.evaluate(x) - y), 1e-13);
  }
  // F(x + m) = F(x) + A m.
  const Vec2 x{0.37, 0.81};
  const Vec2 m{3, -2};
  EXPECT_LT(norm_inf(f.evaluate(x + m) - f.evaluate(x) - f.matrix() * m), 1e-13);
  EXPECT_EQ(f.evaluate({0, 0}).x, 0.0);
}

TEST(AnosovMap, CertifiesDefaultFamily) {
  const auto f = PerturbedMap::default_family(0.03);
  const ConeCertificate cert = verify_anosov(f, 256);
  EXPECT_GT(cert.expansion_factor, 1.0);
  EXPECT_LT(cert.contraction_factor, 1.0);
  EXPECT_GT(cert.margin, 0.0);
  EXPECT_GT(cert.det_min, 0.0);
  EXPECT_NEAR(cert.det_min, 1.0, 1e-12);
  EXPECT_NEAR(cert.det_max, 1.0, 1e-12);
  // Off-grid points satisfy the cone conditions without any margin.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const ConePointCheck c = check_cones_at(f, cert, {unit(rng), unit(rng)});
    EXPECT_GT(c.unstable_slack, 0.0);
    EXPECT_GT(c.stable_slack, 0.0);
    EXPECT_GE(c.expansion, cert.expansion_factor);
    EXPECT_LE(c.contraction, cert.contraction_factor);
  }
}

TEST(AnosovMap, LinearMapCertificateIsSharp) {
  const auto f = PerturbedMap::default_family(0.0);
  const ConeCertificate cert = verify_anosov(f, 64);
  // With no perturbation the cone image slope shrinks by mu_s / mu_u.
  const double mu = (3.0 + std::sqrt(5.0)) / 2.0;
  const double kappa = std::tan(cert.cone_half_width_unstable);
  EXPECT_NEAR(cert.margin, kappa - kappa / (mu * mu), 1e-12);
  EXPECT_NEAR(cert.expansion_factor, mu, 1e-12);
  EXPECT_NEAR(cert.contraction_factor, 1.0 / mu, 1e-12);
}

TEST(AnosovMap, LargePerturbationFailsCertification) {
  const auto f = PerturbedMap::default_family(3.0);
  try {
    verify_anosov(f, 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CertificationFailed);
    EXPECT_NE(std::string(e.what()).find("worst grid point"), std::string::npos);
  }
  EXPECT_THROW(verify_anosov(PerturbedMap::default_family(0.03), 32), Error);
}
