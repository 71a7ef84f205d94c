#pragma once

#include <vector>

#include "rigidity/anosov_map.hpp"

namespace rigidity {

/// A point of Fix(f^period) together with its Jacobian product.
struct PeriodicOrbit {
  Vec2 base_point;          // representative in [0,1)^2
  int period = 1;           // the n it was found for
  int prime_period = 1;     // least p with f^p(x) = x
  Vec2 cycle_key;           // lexicographic minimum of the cycle, names the orbit
  IVec2 translation{0, 0};  // F^n(x) = x + translation in the lift seeded from
  Mat2 jacobian_product;    // Df^period at base_point
  double unstable_exponent = 0.0;
};

/// All points fixed by f^period, one entry per point (so the list length is
/// |det(A^n - I)|), sorted by cycle key then base point.
std::vector<PeriodicOrbit> find_periodic_orbits(const PerturbedMap& f, int period);

/// Unstable exponent from the eigenvalue of the Jacobian product.
double lyapunov_unstable(const PerturbedMap& f, const PeriodicOrbit& orbit);

/// (1/(k n)) log |Df^{kn} restricted to E^u| along the cycle, the finite-time
/// form of the same limit.
double lyapunov_unstable_finite_time(const PerturbedMap& f, const PeriodicOrbit& orbit,
                                     int k = 50);

/// Cycle points x, f(x), ..., f^{n-1}(x) wrapped to [0,1)^2.
std::vector<Vec2> orbit_points(const PerturbedMap& f, const Vec2& base, int n);

struct PeriodicDataRow {
  int period = 0;
  Vec2 point;
  Vec2 cycle_key;
  int prime_period = 0;
  double exponent = 0.0;
  double deviation = 0.0;  // exponent - lambda^u_A
};

struct PeriodicDataReport {
  std::vector<PeriodicDataRow> rows;
  std::vector<std::int64_t> counts;  // counts[n-1] = number of points of period n
  double linear_exponent = 0.0;
  double max_abs_deviation = 0.0;
};

PeriodicDataReport periodic_data_report(const PerturbedMap& f, int max_period);

}  // namespace rigidity
