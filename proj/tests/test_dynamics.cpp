#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "rigidity/dynamics.hpp"

using namespace rigidity;

namespace {

// Eigenvalue of largest modulus of the Jacobian product, recomputed from the
// orbit points with a dense solver.
double dense_exponent(const PerturbedMap& f, const PeriodicOrbit& o) {
  Eigen::Matrix2d jac = Eigen::Matrix2d::Identity();
  for (const Vec2& p : orbit_points(f, o.base_point, o.period)) {
    const Mat2 d = f.derivative(p);
    Eigen::Matrix2d m;
    m << d.a, d.b, d.c, d.d;
    jac = m * jac;
  }
  const auto ev = jac.eigenvalues();
  return std::log(std::max(std::abs(ev(0)), std::abs(ev(1)))) / o.period;
}

}  // namespace

TEST(Dynamics, LinearCountsAndPoints) {
  const auto f = PerturbedMap::default_family(0.0);
  const std::size_t expected[] = {1, 5, 16};
  for (int n = 1; n <= 3; ++n) {
    const auto orbits = find_periodic_orbits(f, n);
    ASSERT_EQ(orbits.size(), expected[n - 1]);
    for (const auto& o : orbits) {
      Vec2 x = o.base_point;
      for (int k = 0; k < n; ++k) x = f.evaluate(x);
      EXPECT_LT(torus_distance(x, o.base_point), 1e-12);
      EXPECT_NEAR(o.unstable_exponent, f.linear().unstable_log_volume, 1e-12);
    }
  }
  const auto fixed = find_periodic_orbits(f, 1);
  EXPECT_LT(norm_inf(fixed[0].base_point), 1e-15);
}

TEST(Dynamics, PerturbedCountsAndExponents) {
  for (double eps : {0.01, 0.03}) {
    const auto f = PerturbedMap::default_family(eps);
    for (int n = 1; n <= 4; ++n) {
      const auto orbits = find_periodic_orbits(f, n);
      EXPECT_EQ(static_cast<std::int64_t>(orbits.size()), lattice_fixed_count(f.linear(), n));
      for (const auto& o : orbits) {
        EXPECT_NEAR(o.unstable_exponent, dense_exponent(f, o), 1e-10);
        EXPECT_NEAR(o.unstable_exponent, lyapunov_unstable_finite_time(f, o), 1e-8);
      }
    }
    const auto one = find_periodic_orbits(f, 1);
    EXPECT_LT(torus_distance(one[0].base_point, {0, 0}), 1e-14);
  }
}

TEST(Dynamics, PrimePeriodsAndCycles) {
  const auto f = PerturbedMap::default_family(0.03);
  const auto orbits = find_periodic_orbits(f, 4);
  int prime4 = 0, prime2 = 0, prime1 = 0;
  for (const auto& o : orbits) {
    if (o.prime_period == 4) ++prime4;
    if (o.prime_period == 2) ++prime2;
    if (o.prime_period == 1) ++prime1;
  }
  // |Fix(A^4)| = 45 = 1 + 4 (period 2) + 40 (period 4).
  EXPECT_EQ(prime1, 1);
  EXPECT_EQ(prime2, 4);
  EXPECT_EQ(prime4, 40);
}

TEST(Dynamics, ReportDeviations) {
  const auto lin = periodic_data_report(PerturbedMap::default_family(0.0), 3);
  EXPECT_EQ(lin.counts, (std::vector<std::int64_t>{1, 5, 16}));
  EXPECT_LT(lin.max_abs_deviation, 1e-12);
  const auto pert = periodic_data_report(PerturbedMap::default_family(0.03), 3);
  EXPECT_EQ(pert.rows.size(), 22u);
  EXPECT_GT(pert.max_abs_deviation, 1e-6);
  EXPECT_TRUE(periodic_data_report(PerturbedMap::default_family(0.03), 0).rows.empty());
}

TEST(Dynamics, PeriodBounds) {
  const auto f = PerturbedMap::default_family(0.03);
  EXPECT_THROW(find_periodic_orbits(f, 0), Error);
  EXPECT_THROW(find_periodic_orbits(f, 13), Error);
}
