#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "rigidity/conjugacy.hpp"

using namespace rigidity;

namespace {

struct Solved {
  PerturbedMap f;
  ConjugacySolution forward;
  ConjugacySolution inverse;
};

const Solved& solved_default() {
  static const Solved s = [] {
    const auto f = PerturbedMap::default_family(0.03);
    return Solved{f, solve_conjugacy(f, 128, 1e-12), solve_inverse_conjugacy(f, 128, 1e-12)};
  }();
  return s;
}

}  // namespace

TEST(Conjugacy, LinearMapGivesIdentity) {
  const auto f = PerturbedMap::default_family(0.0);
  const auto sol = solve_conjugacy(f, 128, 1e-12);
  EXPECT_EQ(sol.field.sup_norm(), 0.0);
  const auto inv = solve_inverse_conjugacy(f, 128, 1e-12);
  EXPECT_EQ(inv.field.sup_norm(), 0.0);
  const ConjugacyMap h(f, sol.field, inv.field);
  EXPECT_LT(conjugacy_residual(h, 1000), 1e-14);
}

TEST(Conjugacy, SolvedFieldSatisfiesEquation) {
  const Solved& s = solved_default();
  const SolveStats& st = s.forward.stats;
  EXPECT_EQ(st.verification_resolution, 512);
  EXPECT_LT(st.verification_residual, 1e-11);
  EXPECT_LE(st.observed_ratio, st.contraction_bound + 0.05);
  EXPECT_NEAR(st.contraction_bound, (3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
  const ConjugacyMap h(s.f, s.forward.field, s.inverse.field);
  EXPECT_LT(conjugacy_residual(h, 2000, 5), 1e-11);
  EXPECT_LT(norm_inf(h.apply({0, 0})), 1e-12);
  EXPECT_LT(norm_inf(s.forward.field.at(0, 0)), 1e-12);
}

TEST(Conjugacy, BareInterpolantIsInterpolationLimited) {
  const Solved& s = solved_default();
  const double bare = field_residual(s.forward.field, s.f, 2000);
  EXPECT_GT(bare, 1e-8);
  EXPECT_LT(bare, 1e-3);
}

TEST(Conjugacy, UnsolvedZeroFieldResidualIsPerturbationSize) {
  const auto f = PerturbedMap::default_family(0.03);
  DisplacementField zero = solved_default().forward.field;
  std::fill(zero.values.begin(), zero.values.end(), Vec2{});
  // |H F - A H| = eps |psi| = (eps / 2 pi) |sin 2 pi (x1 + x2)|.
  const double r = field_residual(zero, f, 20000);
  EXPECT_LE(r, 0.03 / kTwoPi + 1e-15);
  EXPECT_GT(r, 0.99 * 0.03 / kTwoPi);
}

TEST(Conjugacy, ShadowsOrbits) {
  const Solved& s = solved_default();
  const ConjugacyMap h(s.f, s.forward.field);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LT(shadowing_defect(h, {unit(rng), unit(rng)}, 100), 1e-8);
  }
}

TEST(Conjugacy, InverseComposesToIdentity) {
  const Solved& s = solved_default();
  EXPECT_LT(s.inverse.stats.verification_residual, 1e-11);
  const ConjugacyMap h(s.f, s.forward.field, s.inverse.field);
  EXPECT_LT(composition_residual(h, 64), 1e-12);
  EXPECT_LT(norm_inf(h.apply_inverse({0, 0})), 1e-12);
  // Without an inverse field the polished inverse agrees.
  const ConjugacyMap only_forward(s.f, s.forward.field);
  const Vec2 y{0.21, 0.64};
  EXPECT_LT(norm_inf(h.apply_inverse(y) - only_forward.apply_inverse(y)), 1e-12);
  EXPECT_LT(norm_inf(inverse_residual_at(s.f, s.inverse.field, y, h.depth())), 1e-13);
}

TEST(Conjugacy, FieldIsPeriodic) {
  const Solved& s = solved_default();
  const ConjugacyMap h(s.f, s.forward.field);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> shift(-5, 5);
  for (int i = 0; i < 20; ++i) {
    const Vec2 x{unit(rng), unit(rng)};
    const Vec2 m{static_cast<double>(shift(rng)), static_cast<double>(shift(rng))};
    EXPECT_LT(norm_inf(s.forward.field.interpolate(x + m) - s.forward.field.interpolate(x)), 1e-12);
    EXPECT_LT(norm_inf(h.displacement(x + m) - h.displacement(x)), 1e-12);
  }
}

TEST(Conjugacy, DeckEquivariance) {
  const Solved& s = solved_default();
  const ConjugacyMap h(s.f, s.forward.field);
  const Vec2 x{0.13, 0.72};
  const Vec2 m{2, -1};
  EXPECT_LT(norm_inf(h.apply(x + m) - h.apply(x) - m), 1e-12);
}

TEST(Conjugacy, PersistenceRoundTrip) {
  const Solved& s = solved_default();
  const auto path = std::filesystem::temp_directory_path() / "rigidity_field_roundtrip.bin";
  save_field(s.forward.field, path);
  const DisplacementField back = load_field(path);
  EXPECT_EQ(back.resolution, 128);
  EXPECT_EQ(back.direction, FieldDirection::Forward);
  EXPECT_EQ(back.amplitude, 0.03);
  EXPECT_EQ(back.matrix, s.forward.field.matrix);
  EXPECT_EQ(back.values.size(), s.forward.field.values.size());
  for (std::size_t i = 0; i < back.values.size(); ++i) {
    ASSERT_EQ(back.values[i].x, s.forward.field.values[i].x);
    ASSERT_EQ(back.values[i].y, s.forward.field.values[i].y);
  }
  std::filesystem::remove(path);
  EXPECT_THROW(load_field(path), Error);
}

TEST(Conjugacy, RejectsBadResolution) {
  const auto f = PerturbedMap::default_family(0.03);
  EXPECT_THROW(solve_conjugacy(f, 100, 1e-12), Error);
  EXPECT_THROW(solve_conjugacy(f, 64, 1e-12), Error);
  EXPECT_NO_THROW(solve_conjugacy(f, 32, 1e-10, false, true));
}
