#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <vector>

#include "rigidity/regularity.hpp"

using namespace rigidity;

namespace {

std::vector<double> sample(const std::function<double(double)>& g, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = g(static_cast<double>(i) / n);
  return v;
}

double weierstrass(double x) {
  double s = x;
  for (int k = 1; k <= 12; ++k) s += std::pow(2.0, -0.5 * k) * std::cos(std::ldexp(M_PI, k) * x);
  return s;
}

// Level-n approximation of the Cantor function: linear on the 2^n surviving
// intervals, flat on the removed ones.
double cantor(double x, int level) {
  double value = 0.0;
  double weight = 0.5;
  for (int l = 0; l < level; ++l) {
    const double y = 3.0 * x;
    if (y < 1.0) {
      x = y;
    } else if (y < 2.0) {
      return value + weight;
    } else {
      value += weight;
      x = y - 2.0;
    }
    weight *= 0.5;
  }
  return value + 2.0 * weight * x;
}

double cantor_lift(double x) {
  const double k = std::floor(x);
  return k + 0.5 * (x - k) + 0.5 * cantor(x - k, 10);
}

// Lift with T' = c |sin(pi (x - x0))|^{1/2}, built with analytic derivative
// samples and cumulative quadrature for the values.
CircleMapLift degenerate_lift(int n) {
  const double x0 = 4.0 / (3.0 * 4096.0);
  const auto shape = [&](double x) { return std::sqrt(std::abs(std::sin(M_PI * (x - x0)))); };
  const int fine = 64;
  double total = 0.0;
  std::vector<double> cum(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    double cell = 0.0;
    for (int j = 0; j < fine; ++j) cell += shape((i + (j + 0.5) / fine) / n) / (fine * n);
    total += cell;
    cum[static_cast<std::size_t>(i) + 1] = total;
  }
  CircleMapLift t;
  for (int i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / n;
    const double s = std::sin(M_PI * (x - x0));
    const double c = std::cos(M_PI * (x - x0));
    t.values.push_back(cum[static_cast<std::size_t>(i)] / total);
    t.d1.push_back(shape(x) / total);
    // d/dx |s|^{1/2} = (pi/2) c sign(s) |s|^{-1/2}
    t.d2.push_back(0.5 * M_PI * c * (s < 0 ? -1.0 : 1.0) / std::sqrt(std::abs(s)) / total);
  }
  return t;
}

QuadraticSurd golden() { return QuadraticSurd::make(1, 5, 2); }

}  // namespace

TEST(Holder, SmoothFunctionIsLipschitz) {
  const auto h = holder_exponent(sample([](double x) { return x + 0.1 * std::sin(2 * M_PI * x); }, 4096));
  EXPECT_GE(h.exponent, 0.95);
  EXPECT_TRUE(h.saturated);
}

TEST(Holder, AffineSaturates) {
  const auto h = holder_exponent(sample([](double x) { return 3.0 * x + 1.0; }, 2048));
  EXPECT_EQ(h.exponent, 1.0);
  EXPECT_TRUE(h.saturated);
  EXPECT_EQ(holder_exponent(std::vector<double>(1024, 2.0)).exponent, 1.0);
}

TEST(Holder, WeierstrassHasExponentOneHalf) {
  const auto h = holder_exponent(sample(weierstrass, 8192));
  EXPECT_NEAR(h.exponent, 0.5, 0.05);
  EXPECT_FALSE(h.saturated);
  const auto h2 = holder_exponent(sample(weierstrass, 16384));
  EXPECT_LT(std::abs(h2.exponent - h.exponent), 0.02);
}

TEST(Holder, TooFewSamplesRejected) {
  try {
    (void)holder_exponent(std::vector<double>(512, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientSamples);
  }
}

TEST(AcDiagnostic, IdentityScoresOne) {
  EXPECT_EQ(ac_diagnostic(sample([](double x) { return x; }, 1024)), 1.0);
}

TEST(AcDiagnostic, SmoothDiffeoScoresHigh) {
  const auto v = sample([](double x) { return x + 0.2 * std::sin(2 * M_PI * x) / (2 * M_PI); }, 4096);
  EXPECT_GT(ac_diagnostic(v), 0.95);
}

TEST(AcDiagnostic, CantorStaircaseScoresLow) {
  EXPECT_LT(ac_diagnostic(sample(cantor_lift, 4096)), 0.5);
}

TEST(AcDiagnostic, DecreasingSamplesRejected) {
  try {
    (void)ac_diagnostic(sample([](double x) { return x - 0.3 * std::sin(2 * M_PI * x); }, 256));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonMonotone);
  }
}

TEST(KoReport, RigidRotationIsTrivial) {
  const double alpha = golden().fractional_part().value();
  const CircleMapLift t = sample_circle_map([&](double x) { return x + alpha; }, 1024);
  const RegularityReport r = ko_condition_report(t, golden());
  EXPECT_EQ(r.lp_norm, 0.0);
  EXPECT_EQ(r.ac_score, 1.0);
  EXPECT_TRUE(r.degree_two);
  EXPECT_EQ(r.refinement_delta, 0.0);
  EXPECT_EQ(r.derivative_holder.exponent, 1.0);
}

TEST(KoReport, SmoothMapIsStableUnderRefinement) {
  const CircleMapLift t = sample_circle_map(
      [](double x) { return x + 0.618 + 0.05 * std::sin(2 * M_PI * x) / (2 * M_PI); }, 2048);
  const RegularityReport r = ko_condition_report(t, golden());
  EXPECT_GT(r.lp_norm, 0.0);
  EXPECT_LT(r.refinement_delta, 0.05);
  EXPECT_GT(r.ac_score, 0.95);
  EXPECT_NE(std::find(r.tags.begin(), r.tags.end(), "T''/T' in L2 finite"), r.tags.end());
  EXPECT_NE(std::find(r.tags.begin(), r.tags.end(), "deg(alpha)=2"), r.tags.end());
}

TEST(KoReport, VanishingDerivativeIsFlagged) {
  const RegularityReport r = ko_condition_report(degenerate_lift(4096), golden());
  EXPECT_GT(r.refinement_delta, 0.5);
  EXPECT_NE(std::find(r.tags.begin(), r.tags.end(), "T''/T' in L2 unstable under refinement"),
            r.tags.end());
}

TEST(KoReport, RationalRotationIsNotDegreeTwo) {
  const CircleMapLift t = sample_circle_map([](double x) { return x + 0.25; }, 1024);
  EXPECT_FALSE(ko_condition_report(t, QuadraticSurd::rational(1, 4)).degree_two);
  EXPECT_THROW(ko_condition_report(t, golden(), 1.0), Error);
}
