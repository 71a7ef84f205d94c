#include "rigidity/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>
#include <sstream>

#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

constexpr double kDedupTolerance = 1e-8;

bool lex_less(const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); }

struct Solve {
  bool ok = false;
  Vec2 point;
  IVec2 translation{0, 0};
};

// Newton on G(x) = F^n(x) - x - m, damped by 1/2 on the first three steps.
Solve newton_periodic(const PerturbedMap& f, int n, const Vec2& seed, const IVec2& m) {
  const Vec2 target = to_real(m);
  Vec2 x = seed;
  for (int it = 0; it < 60; ++it) {
    Vec2 y = x;
    Mat2 jac = Mat2::identity();
    for (int k = 0; k < n; ++k) {
      Vec2 next;
      Mat2 dk;
      f.evaluate_with_derivative(y, next, dk);
      jac = dk * jac;
      y = next;
    }
    const Vec2 g = y - x - target;
    const Mat2 dg = jac - Mat2::identity();
    if (std::abs(dg.det()) < 1e-300) return {};
    Vec2 step = dg.inverse() * g;
    if (it < 3) step = 0.5 * step;
    x -= step;
    const double scale = std::max(1.0, norm_inf(y));
    if (norm_inf(g) < 1e-14 * scale || norm_inf(step) < 1e-15 * std::max(1.0, norm_inf(x))) {
      return {true, x, m};
    }
    if (!std::isfinite(x.x) || !std::isfinite(x.y)) return {};
  }
  return {};
}

// Coset representatives of Z^2 / B Z^2 from the column Hermite form of B.
std::vector<IVec2> coset_representatives(const IMat2& b) {
  const std::int64_t b11 = b[0][0], b12 = b[0][1], b21 = b[1][0], b22 = b[1][1];
  // Extended gcd on the first row.
  std::int64_t old_r = b11, r = b12, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    const std::int64_t q = old_r / r;
    std::tie(old_r, r) = std::make_pair(r, old_r - q * r);
    std::tie(old_s, s) = std::make_pair(s, old_s - q * s);
    std::tie(old_t, t) = std::make_pair(t, old_t - q * t);
  }
  std::int64_t g = old_r;
  if (g < 0) {
    g = -g;
    old_s = -old_s;
    old_t = -old_t;
  }
  const std::int64_t det = b11 * b22 - b12 * b21;
  const std::int64_t h22 = std::abs(det / g);
  std::vector<IVec2> reps;
  reps.reserve(static_cast<std::size_t>(g * h22));
  for (std::int64_t i = 0; i < g; ++i) {
    for (std::int64_t j = 0; j < h22; ++j) reps.push_back({i, j});
  }
  return reps;
}

}  // namespace

std::vector<Vec2> orbit_points(const PerturbedMap& f, const Vec2& base, int n) {
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  Vec2 x = wrap_unit(base);
  for (int k = 0; k < n; ++k) {
    pts.push_back(x);
    x = wrap_unit(f.evaluate(x));
  }
  return pts;
}

std::vector<PeriodicOrbit> find_periodic_orbits(const PerturbedMap& f, int period) {
  if (period < 1) throw Error(ErrorCode::InvalidArgument, "period must be >= 1");
  if (period > 12) throw Error(ErrorCode::InvalidArgument, "period above the practical bound 12");
  const HyperbolicAutomorphism& lin = f.linear();
  const std::int64_t expected = lattice_fixed_count(lin, period);
  IntMatrix pw = integer_power(lin.matrix, period);
  const IMat2 b{{{pw[0][0] - 1, pw[0][1]}, {pw[1][0], pw[1][1] - 1}}};
  const Mat2 b_inv = to_real(b).inverse();
  const std::vector<IVec2> reps = coset_representatives(b);

  std::vector<Solve> solved(reps.size());
  parallel_for(reps.size(), [&](std::size_t i) {
    solved[i] = newton_periodic(f, period, b_inv * to_real(reps[i]), reps[i]);
  });

  std::vector<Solve> found;
  auto add = [&](const Solve& s) {
    if (!s.ok) return;
    const Vec2 p = wrap_unit(s.point);
    for (const auto& q : found) {
      if (torus_distance(q.point, p) < kDedupTolerance) return;
    }
    found.push_back({true, p, s.translation});
  };
  for (const auto& s : solved) add(s);

  // Multi-start retry around each linear seed when Newton basins were missed.
  for (int ring = 1; ring <= 3 && static_cast<std::int64_t>(found.size()) < expected; ++ring) {
    const double r = 0.02 * ring;
    const Vec2 offsets[] = {{r, 0}, {-r, 0}, {0, r}, {0, -r}, {r, r}, {-r, -r}};
    for (const auto& m : reps) {
      for (const auto& off : offsets) {
        add(newton_periodic(f, period, b_inv * to_real(m) + off, m));
      }
    }
  }
  if (static_cast<std::int64_t>(found.size()) != expected) {
    std::ostringstream os;
    os << "found " << found.size() << " points of period " << period << ", expected "
       << expected;
    throw Error(ErrorCode::CountMismatch, os.str());
  }

  std::vector<PeriodicOrbit> out(found.size());
  parallel_for(found.size(), [&](std::size_t i) {
    PeriodicOrbit& o = out[i];
    o.base_point = found[i].point;
    o.period = period;
    o.translation = found[i].translation;
    const std::vector<Vec2> pts = orbit_points(f, o.base_point, period);
    Mat2 jac = Mat2::identity();
    for (const auto& p : pts) jac = f.derivative(p) * jac;
    o.jacobian_product = jac;
    o.prime_period = period;
    for (int p = 1; p < period; ++p) {
      if (period % p == 0 && torus_distance(pts[static_cast<std::size_t>(p)], pts[0]) < kDedupTolerance) {
        o.prime_period = p;
        break;
      }
    }
    o.cycle_key = pts[0];
    for (int k = 1; k < o.prime_period; ++k) {
      if (lex_less(pts[static_cast<std::size_t>(k)], o.cycle_key)) o.cycle_key = pts[static_cast<std::size_t>(k)];
    }
    o.unstable_exponent = lyapunov_unstable(f, o);
  });
  std::sort(out.begin(), out.end(), [](const PeriodicOrbit& a, const PeriodicOrbit& b) {
    if (torus_distance(a.cycle_key, b.cycle_key) >= kDedupTolerance) {
      return lex_less(a.cycle_key, b.cycle_key);
    }
    return lex_less(a.base_point, b.base_point);
  });
  return out;
}

double lyapunov_unstable(const PerturbedMap&, const PeriodicOrbit& orbit) {
  const Mat2& j = orbit.jacobian_product;
  const double tr = j.trace();
  const double det = j.det();
  const double disc = tr * tr - 4.0 * det;
  if (disc <= 0.0) {
    throw Error(ErrorCode::NonHyperbolicOrbit, "Jacobian product has complex eigenvalues");
  }
  const double big = 0.5 * (std::abs(tr) + std::sqrt(disc));
  const double small = std::abs(det) / big;
  if (!(big > 1.0 && small < 1.0)) {
    throw Error(ErrorCode::NonHyperbolicOrbit, "Jacobian product is not hyperbolic");
  }
  return std::log(big) / orbit.period;
}

double lyapunov_unstable_finite_time(const PerturbedMap& f, const PeriodicOrbit& orbit, int k) {
  const std::vector<Vec2> pts = orbit_points(f, orbit.base_point, orbit.period);
  std::vector<Mat2> jacs;
  jacs.reserve(pts.size());
  for (const auto& p : pts) jacs.push_back(f.derivative(p));
  // Warm up so the vector aligns with E^u at the base point, then accumulate.
  Vec2 v = f.linear().e_unstable;
  for (int rep = 0; rep < 50; ++rep) {
    for (const auto& j : jacs) v = normalized(j * v);
  }
  double sum = 0.0;
  for (int rep = 0; rep < k; ++rep) {
    for (const auto& j : jacs) {
      const Vec2 w = j * v;
      const double len = norm(w);
      sum += std::log(len);
      v = w / len;
    }
  }
  return sum / (static_cast<double>(k) * orbit.period);
}

PeriodicDataReport periodic_data_report(const PerturbedMap& f, int max_period) {
  PeriodicDataReport report;
  report.linear_exponent = f.linear().unstable_log_volume;
  for (int n = 1; n <= max_period; ++n) {
    const auto orbits = find_periodic_orbits(f, n);
    report.counts.push_back(static_cast<std::int64_t>(orbits.size()));
    for (const auto& o : orbits) {
      PeriodicDataRow row;
      row.period = n;
      row.point = o.base_point;
      row.cycle_key = o.cycle_key;
      row.prime_period = o.prime_period;
      row.exponent = o.unstable_exponent;
      row.deviation = o.unstable_exponent - report.linear_exponent;
      report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(row.deviation));
      report.rows.push_back(row);
    }
  }
  return report;
}

}  // namespace rigidity
