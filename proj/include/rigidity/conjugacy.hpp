#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rigidity/anosov_map.hpp"

namespace rigidity {

enum class FieldDirection : std::uint32_t { Forward = 0, Inverse = 1 };

/// Periodic displacement on an N x N grid of the fundamental domain:
/// H = id + u (forward) or H^{-1} = id + v (inverse). values[j*N + i] is the
/// displacement at (i/N, j/N). Off-grid values use periodic Catmull-Rom
/// cubic interpolation.
struct DisplacementField {
  int resolution = 0;
  FieldDirection direction = FieldDirection::Forward;
  double amplitude = 0.0;
  IMat2 matrix{};
  std::vector<Vec2> values;

  Vec2 at(int i, int j) const;
  Vec2 interpolate(const Vec2& x) const;
  double sup_norm() const;
};

struct SolveStats {
  int iterations = 0;
  std::vector<double> sup_updates;
  double observed_ratio = 0.0;  // geometric mean of successive update ratios
  double max_ratio = 0.0;
  double contraction_bound = 0.0;  // max(|mu_s|, 1/mu_u)
  double verification_residual = 0.0;
  int verification_resolution = 0;
};

struct ConjugacySolution {
  DisplacementField field;
  SolveStats stats;
};

/// Solves H o F = A o H for u = H - id by split contraction in the E^u_A /
/// E^s_A eigen-coordinates. Requires N a power of two >= 128 unless
/// `allow_small_grid` is set (tests). Throws NoConvergence after 500 sweeps.
/// When `verify` is set the 4N x 4N verification residual is computed.
ConjugacySolution solve_conjugacy(const PerturbedMap& f, int resolution, double tol,
                                  bool verify = true, bool allow_small_grid = false);

/// Solves H^{-1} o A = F o H^{-1} for v = H^{-1} - id. A permutes grid nodes,
/// so the sweep needs no interpolation.
ConjugacySolution solve_inverse_conjugacy(const PerturbedMap& f, int resolution, double tol,
                                          bool verify = true, bool allow_small_grid = false);

/// Pointwise evaluator of H and H^{-1}. H unrolls the functional equation
/// `depth` times along the F-orbit before reading the grid field, which
/// shrinks the interpolation error by max(|mu_s|, 1/mu_u)^depth. H^{-1}
/// solves its own equation along the A-orbit of y the same way when an
/// inverse field is present, and otherwise inverts H by fixed-point polish.
class ConjugacyMap {
 public:
  ConjugacyMap(PerturbedMap f, DisplacementField forward,
               std::optional<DisplacementField> inverse = std::nullopt, int depth = 0);

  const PerturbedMap& map() const { return f_; }
  const DisplacementField& forward_field() const { return forward_; }
  const std::optional<DisplacementField>& inverse_field() const { return inverse_; }
  int depth() const { return depth_; }

  Vec2 displacement(const Vec2& x) const;
  Vec2 apply(const Vec2& x) const { return x + displacement(x); }
  Vec2 inverse_displacement(const Vec2& y) const;
  Vec2 apply_inverse(const Vec2& y, double tol = 1e-13) const;

  /// H(F(x)) - A H(x) in the lift, sharing one orbit for both terms.
  Vec2 residual_at(const Vec2& x) const;

 private:
  // Wrapped F-orbit of x from -depth to +forward_steps with the eigen-
  // coordinates of -eps psi at each point; points[center] = x.
  struct Orbit {
    std::vector<Vec2> points;
    std::vector<Vec2> forcing;
    int center = 0;
  };
  Orbit trace_orbit(const Vec2& x, int forward_steps) const;
  Vec2 displacement_on_orbit(const Orbit& orbit, int center) const;

  PerturbedMap f_;
  DisplacementField forward_;
  std::optional<DisplacementField> inverse_;
  int depth_;
};

/// F(H^{-1}(y)) - H^{-1}(A y) for H^{-1} = id + v refined along the A-orbit.
Vec2 inverse_residual_at(const PerturbedMap& f, const DisplacementField& v, const Vec2& y,
                         int depth);

/// Default unrolling depth: smallest K with rate^K < 1e-12. Grid fields at
/// N >= 128 interpolate to better than 1e-4, so the refined error is at
/// rounding level.
int default_refinement_depth(const HyperbolicAutomorphism& a);

/// sup over `samples` seeded random points of |H(F(x)) - A H(x)|.
double conjugacy_residual(const ConjugacyMap& h, int samples, std::uint64_t seed = 1);

/// Same, for the bare interpolated field with no refinement.
double field_residual(const DisplacementField& u, const PerturbedMap& f, int samples,
                      std::uint64_t seed = 1);

/// sup of |H(F(x)) - A H(x)| over an M x M grid.
double grid_residual(const ConjugacyMap& h, int resolution);

/// max_k |H(F(x_k)) - A H(x_k)| (torus metric) along x_k = F^k(x), k < steps.
double shadowing_defect(const ConjugacyMap& h, const Vec2& x, int steps);

/// sup over an M x M grid of |H(H^{-1}(y)) - y|.
double composition_residual(const ConjugacyMap& h, int resolution);

void save_field(const DisplacementField& field, const std::filesystem::path& path);
DisplacementField load_field(const std::filesystem::path& path);

}  // namespace rigidity
