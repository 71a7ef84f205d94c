#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "rigidity/anosov_map.hpp"
#include "rigidity/conjugacy.hpp"

namespace rigidity {

enum class LeafFlavor { Stable, Unstable };

/// The stable or unstable line field of a certified map, evaluated on demand
/// by pushing a cone vector `push_depth` times along the orbit. Directions
/// are oriented to have positive dot product with the matching eigenvector
/// of A, which lies inside every certified cone, so the field never flips.
struct LineField {
  LeafFlavor flavor = LeafFlavor::Unstable;
  int push_depth = 0;
  double cone_ratio = 0.0;  // contraction / expansion from the certificate
  PerturbedMap map;
};

/// push_depth is the least N with cone_ratio^N < tol.
LineField make_line_field(const PerturbedMap& f, LeafFlavor flavor, double tol = 1e-13);
LineField make_line_field(const PerturbedMap& f, const ConeCertificate& cert, LeafFlavor flavor,
                          double tol = 1e-13);

/// Unit direction at x using field.push_depth pushes.
Vec2 direction(const LineField& field, const Vec2& x);
/// Same with the depth chosen from tol. Throws DepthExceeded above 256.
Vec2 direction(const LineField& field, const Vec2& x, double tol);
int depth_for_tolerance(const LineField& field, double tol);

/// Arclength-parameterized leaf through base_point, nodes every `step`.
/// arclength[k] increases with k and base_point sits at arclength 0.
struct LeafCurve {
  LineField field;
  Vec2 base_point;
  double step = 1e-3;
  std::vector<double> arclength;
  std::vector<Vec2> nodes;
  std::vector<Vec2> tangents;
  std::vector<Vec2> curvatures;  // d(tangent)/ds

  LeafFlavor flavor() const { return field.flavor; }
  double s_min() const { return arclength.front(); }
  double s_max() const { return arclength.back(); }
  bool contains(double s) const { return s >= s_min() && s <= s_max(); }
  /// Point at arclength s by quintic Hermite interpolation of the nodes,
  /// which keeps the curve C^2 in s. Throws NoIntersectionInWindow outside
  /// the window.
  Vec2 point_at(double s) const;
  Vec2 tangent_at(double s) const;
  /// Columns s, x, y, tx, ty.
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::size_t cell(double s) const;
};

/// RK4 from x over signed arclength `length`.
LeafCurve integrate_leaf(const LineField& field, const Vec2& x, double length,
                         double step = 1e-3);
/// RK4 from x over [-back, forward].
LeafCurve integrate_leaf_window(const LineField& field, const Vec2& x, double back,
                                double forward, double step = 1e-3);

struct GpsPoint {
  Vec2 point;
  double s_stable = 0.0;
  double s_unstable = 0.0;
  int iterations = 0;
  int extensions = 0;
};

/// Intersection of a stable and an unstable leaf (either order). Seeds from
/// the linear model, through H when given, then runs Newton on the pair of
/// arclengths. Windows are doubled up to three times before failing with
/// NoIntersectionInWindow.
GpsPoint gps_intersect(const LeafCurve& a, const LeafCurve& b,
                       const ConjugacyMap* h = nullptr);

enum class HolonomyMethod { Geometric, Transport };

struct HolonomyResult {
  Vec2 image;
  HolonomyMethod method = HolonomyMethod::Geometric;
  int iterations = 0;
};

/// Everything the holonomy computations share.
struct LeafContext {
  PerturbedMap map;
  LineField stable;
  LineField unstable;
  std::shared_ptr<const ConjugacyMap> conjugacy;
  double step = 1e-3;
  double on_leaf_tol = 1e-8;
};

LeafContext make_leaf_context(const ConjugacyMap& h, double direction_tol = 1e-13,
                              double step = 1e-3);

/// |pi^s(H(z) - H(x))|: distance of z from the unstable leaf of x, measured in
/// the linear model.
double unstable_leaf_offset(const LeafContext& ctx, const Vec2& x, const Vec2& z);

/// Stable holonomy from the unstable leaf of x to the unstable leaf of y,
/// applied to z. Throws OffLeaf if z is not on the unstable leaf of x.
HolonomyResult holonomy(const LeafContext& ctx, const Vec2& x, const Vec2& y, const Vec2& z,
                        HolonomyMethod method = HolonomyMethod::Geometric);

/// T^n(x) = Hol^s_{n,0}(x + n) for x on the unstable leaf of 0.
Vec2 deck_action(const LeafContext& ctx, const IVec2& n, const Vec2& x,
                 HolonomyMethod method = HolonomyMethod::Geometric);

/// Arclength on `target` (an unstable leaf) of the point where the stable
/// leaf of p crosses it. The stable leaf is localized by iterating forward
/// until p and the crossing are close enough for the local stable segment
/// to be straight to rounding; Newton on the target arclength starts at
/// `seed`. Throws DepthExceeded if 60 iterates do not suffice.
double stable_slide(const LeafCurve& target, const LineField& stable, const Vec2& p,
                    double seed, int* depth_used = nullptr);

}  // namespace rigidity
