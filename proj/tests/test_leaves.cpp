#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "rigidity/leaves.hpp"

using namespace rigidity;

namespace {

LeafContext make_context(double eps) {
  const auto f = PerturbedMap::default_family(eps);
  const auto fwd = solve_conjugacy(f, 128, 1e-12, false);
  const auto inv = solve_inverse_conjugacy(f, 128, 1e-12, false);
  return make_leaf_context(ConjugacyMap(f, fwd.field, inv.field));
}

const LeafContext& ctx_linear() {
  static const LeafContext c = make_context(0.0);
  return c;
}

const LeafContext& ctx_default() {
  static const LeafContext c = make_context(0.03);
  return c;
}

const LeafCurve& unstable_leaf_of_origin() {
  static const LeafCurve w = integrate_leaf_window(ctx_default().unstable, {0, 0}, 3.0, 4.0);
  return w;
}

// Angle between the image of the line field under Df and the field at the image.
double invariance_angle(const LineField& field, const Vec2& x) {
  Vec2 fx;
  Mat2 df;
  field.map.evaluate_with_derivative(x, fx, df);
  const Vec2 pushed = normalized(df * direction(field, x));
  const Vec2 there = direction(field, fx);
  return std::abs(cross(pushed, there));
}

}  // namespace

TEST(LineField, LinearMapGivesEigendirections) {
  const auto& c = ctx_linear();
  const auto& a = c.map.linear();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const Vec2 x{u(rng), u(rng)};
    EXPECT_LT(norm_inf(direction(c.unstable, x) - a.e_unstable), 1e-15);
    const Vec2 es = direction(c.stable, x);
    EXPECT_LT(std::abs(cross(es, a.e_stable)), 1e-15);
    EXPECT_GT(dot(es, a.e_stable), 0.0);
  }
}

TEST(LineField, FieldsAreInvariant) {
  const auto& c = ctx_default();
  EXPECT_EQ(c.unstable.push_depth, depth_for_tolerance(c.unstable, 1e-13));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_u = 0.0;
  double worst_s = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec2 x{u(rng), u(rng)};
    worst_u = std::max(worst_u, invariance_angle(c.unstable, x));
    // The stable field is invariant under the inverse, so check it at the preimage.
    worst_s = std::max(worst_s, invariance_angle(c.stable, c.map.inverse_evaluate(x)));
  }
  EXPECT_LT(worst_u, 1e-8);
  EXPECT_LT(worst_s, 1e-8);
}

TEST(LineField, TighterToleranceMovesDirectionLittle) {
  const auto& c = ctx_default();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double tol : {1e-6, 1e-9}) {
    for (int i = 0; i < 50; ++i) {
      const Vec2 x{u(rng), u(rng)};
      const double d = norm(direction(c.unstable, x, tol) - direction(c.unstable, x, tol / 2));
      EXPECT_LT(d, tol);
    }
  }
  EXPECT_THROW(direction(c.unstable, {0.1, 0.2}, 1e-300), Error);
}

TEST(Leaves, LinearLeafIsStraight) {
  const auto& c = ctx_linear();
  const Vec2 x{0.3, 0.7};
  const LeafCurve leaf = integrate_leaf(c.unstable, x, 2.0);
  for (double s : {0.0, 0.5, 1.234, 2.0}) {
    EXPECT_LT(norm_inf(leaf.point_at(s) - (x + s * c.map.linear().e_unstable)), 1e-13);
  }
}

TEST(Leaves, UnstableLeafIsMappedIntoItself) {
  const auto& c = ctx_default();
  const LeafCurve& w = unstable_leaf_of_origin();
  // F(W(s)) lies on W, since 0 is fixed and W is its unstable leaf.
  for (double s : {-0.8, -0.2, 0.1, 0.5, 1.0}) {
    const Vec2 image = c.map.evaluate(w.point_at(s));
    const double s0 = s * c.map.linear().mu_unstable;
    double lo = s0 - 0.5;
    double hi = s0 + 0.5;
    // Golden-section search for the nearest point of W.
    for (int it = 0; it < 200; ++it) {
      const double m1 = hi - 0.618 * (hi - lo);
      const double m2 = lo + 0.618 * (hi - lo);
      if (norm(w.point_at(m1) - image) < norm(w.point_at(m2) - image)) hi = m2; else lo = m1;
    }
    const double best = norm(w.point_at(0.5 * (lo + hi)) - image);
    EXPECT_LT(best, 1e-6) << "s = " << s;
  }
}

TEST(Leaves, ReversedIntegrationRetracesLeaf) {
  const auto& c = ctx_default();
  const Vec2 x{0.2, 0.4};
  const LeafCurve fwd = integrate_leaf(c.stable, x, 1.5);
  const Vec2 end = fwd.point_at(1.5);
  const LeafCurve back = integrate_leaf(c.stable, end, -1.5);
  EXPECT_LT(norm(back.point_at(-1.5) - x), 1e-8);
}

TEST(Leaves, StepHalvingAgrees) {
  const auto& c = ctx_default();
  const LeafCurve a = integrate_leaf(c.unstable, {0.1, 0.1}, 2.0, 1e-3);
  const LeafCurve b = integrate_leaf(c.unstable, {0.1, 0.1}, 2.0, 5e-4);
  EXPECT_LT(norm(a.point_at(1.7) - b.point_at(1.7)), 1e-12);
}

TEST(Leaves, PointOutsideWindowThrows) {
  const LeafCurve& w = unstable_leaf_of_origin();
  try {
    (void)w.point_at(10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoIntersectionInWindow);
  }
}

TEST(Leaves, CsvExport) {
  const LeafCurve leaf = integrate_leaf(ctx_default().unstable, {0, 0}, 0.01);
  const auto path = std::filesystem::temp_directory_path() / "rigidity_leaf_test.csv";
  leaf.write_csv(path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "s,x,y,tx,ty");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, static_cast<int>(leaf.nodes.size()));
  std::filesystem::remove(path);
}

TEST(Gps, LinearIntersectionMatchesCramer) {
  const auto& c = ctx_linear();
  const auto& a = c.map.linear();
  const Vec2 p{0.1, 0.2};
  const Vec2 q{0.6, -0.3};
  const LeafCurve st = integrate_leaf_window(c.stable, p, 1.0, 1.0);
  const LeafCurve un = integrate_leaf_window(c.unstable, q, 1.0, 1.0);
  // p + s e_s = q + u e_u
  const Mat2 m = Mat2::from_columns(a.e_stable, -a.e_unstable);
  const Vec2 su = m.inverse() * (q - p);
  const GpsPoint g = gps_intersect(st, un);
  EXPECT_LT(norm_inf(g.point - (p + su.x * a.e_stable)), 1e-13);
  EXPECT_NEAR(g.s_stable, su.x, 1e-13);
  EXPECT_NEAR(g.s_unstable, su.y, 1e-13);
}

TEST(Gps, NonlinearIntersectionLiesOnBothLeaves) {
  const auto& c = ctx_default();
  const LeafCurve st = integrate_leaf_window(c.stable, {0.3, 0.1}, 1.0, 1.0);
  const LeafCurve un = integrate_leaf_window(c.unstable, {0.5, 0.6}, 1.0, 1.0);
  const GpsPoint g = gps_intersect(st, un, c.conjugacy.get());
  EXPECT_LT(norm(st.point_at(g.s_stable) - g.point), 1e-8);
  EXPECT_LT(norm(un.point_at(g.s_unstable) - g.point), 1e-8);
  const GpsPoint r = gps_intersect(un, st);
  EXPECT_LT(norm(r.point - g.point), 1e-12);
}

TEST(Gps, SameFlavorRejected) {
  const auto& c = ctx_default();
  const LeafCurve a = integrate_leaf(c.stable, {0, 0}, 0.1);
  EXPECT_THROW(gps_intersect(a, a), Error);
}

TEST(Holonomy, LinearHolonomyIsStableTranslation) {
  const auto& c = ctx_linear();
  const auto& a = c.map.linear();
  const Vec2 x{0.1, 0.3};
  const Vec2 y{0.45, -0.2};
  const Vec2 z = x + 0.7 * a.e_unstable;
  const Vec2 expected = z + a.project_stable(y - x);
  EXPECT_LT(norm(holonomy(c, x, y, z).image - expected), 1e-13);
  EXPECT_LT(norm(holonomy(c, x, y, z, HolonomyMethod::Transport).image - expected), 1e-13);
}

TEST(Holonomy, GeometricMatchesTransport) {
  const auto& c = ctx_default();
  const LeafCurve& w = unstable_leaf_of_origin();
  const Vec2 y{0.37, 0.81};
  for (double s : {-0.6, 0.2, 0.9}) {
    const Vec2 z = w.point_at(s);
    const Vec2 g = holonomy(c, {0, 0}, y, z).image;
    const Vec2 t = holonomy(c, {0, 0}, y, z, HolonomyMethod::Transport).image;
    EXPECT_LT(norm(g - t), 1e-9);
  }
}

TEST(Holonomy, SameLeafIsIdentity) {
  const auto& c = ctx_default();
  const Vec2 z = unstable_leaf_of_origin().point_at(0.4);
  EXPECT_LT(norm(holonomy(c, {0, 0}, {0, 0}, z).image - z), 1e-12);
}

TEST(Holonomy, OffLeafPointRejected) {
  const auto& c = ctx_default();
  const Vec2 z = unstable_leaf_of_origin().point_at(0.4) + Vec2{0.0, 1e-4};
  try {
    (void)holonomy(c, {0, 0}, {0.5, 0.5}, z);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OffLeaf);
  }
}

TEST(Holonomy, Composes) {
  const auto& c = ctx_default();
  const Vec2 z = unstable_leaf_of_origin().point_at(0.3);
  const Vec2 y{0.2, 0.55};
  const Vec2 w{0.7, 0.1};
  const Vec2 direct = holonomy(c, {0, 0}, w, z).image;
  const Vec2 mid = holonomy(c, {0, 0}, y, z).image;
  const Vec2 two = holonomy(c, y, w, mid).image;
  EXPECT_LT(norm(direct - two), 1e-8);
}

TEST(Holonomy, DeckEquivariant) {
  const auto& c = ctx_default();
  const Vec2 z = unstable_leaf_of_origin().point_at(-0.4);
  const Vec2 y{0.3, 0.25};
  const Vec2 n{2.0, -1.0};
  const Vec2 base = holonomy(c, {0, 0}, y, z).image;
  const Vec2 shifted = holonomy(c, n, y + n, z + n).image;
  EXPECT_LT(norm(shifted - (base + n)), 1e-9);
}

TEST(DeckAction, LinearDeckActionTranslatesAlongLeaf) {
  const auto& c = ctx_linear();
  const auto& a = c.map.linear();
  const Vec2 x = 0.25 * a.e_unstable;
  for (IVec2 n : {IVec2{1, 0}, IVec2{0, 1}, IVec2{-2, 3}}) {
    const Vec2 expected = x + a.project_unstable(to_real(n));
    EXPECT_LT(norm(deck_action(c, n, x) - expected), 1e-12);
  }
}

TEST(DeckAction, ActionsCommuteAndCompose) {
  const auto& c = ctx_default();
  const Vec2 x = unstable_leaf_of_origin().point_at(0.15);
  const Vec2 ab = deck_action(c, {0, 1}, deck_action(c, {1, 0}, x));
  const Vec2 ba = deck_action(c, {1, 0}, deck_action(c, {0, 1}, x));
  const Vec2 sum = deck_action(c, {1, 1}, x);
  EXPECT_LT(norm(ab - ba), 1e-9);
  EXPECT_LT(norm(ab - sum), 1e-9);
}

TEST(DeckAction, ConjugacyIntertwines) {
  const auto& c = ctx_default();
  const auto& a = c.map.linear();
  const ConjugacyMap& h = *c.conjugacy;
  for (double s : {-0.5, 0.35, 1.1}) {
    const Vec2 x = unstable_leaf_of_origin().point_at(s);
    for (IVec2 n : {IVec2{1, 0}, IVec2{0, 1}, IVec2{1, -2}}) {
      const Vec2 lhs = h.apply(deck_action(c, n, x));
      const Vec2 rhs = h.apply(x) + a.project_unstable(to_real(n));
      EXPECT_LT(norm(lhs - rhs), 1e-6);
    }
  }
}

TEST(StableSlide, MatchesGeometricDeckAction) {
  const auto& c = ctx_default();
  const LeafCurve& w = unstable_leaf_of_origin();
  const auto& a = c.map.linear();
  for (double s : {0.05, 0.4, 1.3}) {
    const Vec2 x = w.point_at(s);
    const IVec2 n{1, 0};
    const double seed = s + a.eigen_coordinates(to_real(n)).x;
    int depth = 0;
    const double slid = stable_slide(w, c.stable, x + to_real(n), seed, &depth);
    EXPECT_GT(depth, 0);
    EXPECT_LT(norm(w.point_at(slid) - deck_action(c, n, x)), 1e-12);
  }
}
