#include "rigidity/conjugacy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

constexpr int kMaxSweeps = 500;
constexpr int kMaxDepth = 96;
constexpr char kMagic[8] = {'R', 'L', 'D', 'F', 'I', 'E', 'L', 'D'};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_resolution(int n, bool allow_small) {
  if (!is_power_of_two(n) || (!allow_small && n < 128)) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must be a power of two >= 128");
  }
}

inline int wrap_index(int i, int n) { return ((i % n) + n) % n; }

struct Stencil {
  std::array<int, 4> ix;
  std::array<int, 4> iy;
  std::array<double, 4> wx;
  std::array<double, 4> wy;
};

inline void catmull_rom_weights(double t, std::array<double, 4>& w) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

Stencil make_stencil(const Vec2& x, int n) {
  Stencil s;
  const Vec2 p = wrap_unit(x);
  const double sx = p.x * n, sy = p.y * n;
  const int i0 = static_cast<int>(std::floor(sx));
  const int j0 = static_cast<int>(std::floor(sy));
  catmull_rom_weights(sx - i0, s.wx);
  catmull_rom_weights(sy - j0, s.wy);
  for (int k = 0; k < 4; ++k) {
    s.ix[static_cast<std::size_t>(k)] = wrap_index(i0 - 1 + k, n);
    s.iy[static_cast<std::size_t>(k)] = wrap_index(j0 - 1 + k, n);
  }
  return s;
}

template <typename T>
T apply_stencil(const Stencil& s, const std::vector<T>& grid, int n) {
  T acc{};
  for (std::size_t b = 0; b < 4; ++b) {
    T row{};
    const std::size_t base = static_cast<std::size_t>(s.iy[b]) * static_cast<std::size_t>(n);
    for (std::size_t a = 0; a < 4; ++a) row += s.wx[a] * grid[base + static_cast<std::size_t>(s.ix[a])];
    acc += s.wy[b] * row;
  }
  return acc;
}

Vec2 grid_point(std::size_t idx, int n) {
  const double h = 1.0 / n;
  return {static_cast<double>(idx % static_cast<std::size_t>(n)) * h,
          static_cast<double>(idx / static_cast<std::size_t>(n)) * h};
}

double contraction_rate(const HyperbolicAutomorphism& a) {
  return std::max(std::abs(a.mu_stable), 1.0 / std::abs(a.mu_unstable));
}

void finalize_stats(SolveStats& stats) {
  const auto& u = stats.sup_updates;
  stats.max_ratio = 0.0;
  for (std::size_t k = 1; k < u.size(); ++k) {
    if (u[k - 1] > 0.0) stats.max_ratio = std::max(stats.max_ratio, u[k] / u[k - 1]);
  }
  if (u.size() >= 2 && u.front() > 0.0 && u.back() > 0.0) {
    stats.observed_ratio =
        std::pow(u.back() / u.front(), 1.0 / static_cast<double>(u.size() - 1));
  } else {
    stats.observed_ratio = 0.0;
  }
}

DisplacementField make_field(const PerturbedMap& f, int n, FieldDirection dir) {
  DisplacementField field;
  field.resolution = n;
  field.direction = dir;
  field.amplitude = f.amplitude();
  field.matrix = f.linear().imat2();
  field.values.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), Vec2{});
  return field;
}

}  // namespace

Vec2 DisplacementField::at(int i, int j) const {
  return values[static_cast<std::size_t>(wrap_index(j, resolution)) * static_cast<std::size_t>(resolution) +
                static_cast<std::size_t>(wrap_index(i, resolution))];
}

Vec2 DisplacementField::interpolate(const Vec2& x) const {
  return apply_stencil(make_stencil(x, resolution), values, resolution);
}

double DisplacementField::sup_norm() const {
  double s = 0.0;
  for (const auto& v : values) s = std::max(s, norm_inf(v));
  return s;
}

int default_refinement_depth(const HyperbolicAutomorphism& a) {
  const double rate = contraction_rate(a);
  return std::clamp(static_cast<int>(std::ceil(std::log(1e-12) / std::log(rate))), 1, kMaxDepth);
}

ConjugacySolution solve_conjugacy(const PerturbedMap& f, int n, double tol, bool verify,
                                  bool allow_small_grid) {
  check_resolution(n, allow_small_grid);
  const HyperbolicAutomorphism& lin = f.linear();
  const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);

  // u(F x) = A u(x) + g(x), g = A x - F x = -eps psi(x). In eigen-coordinates
  // a(x) = (a(F x) - g_u(x)) / mu_u and b(y) = mu_s b(F^{-1} y) + g_s(F^{-1} y).
  std::vector<Stencil> fwd(count), bwd(count);
  std::vector<double> g_u(count), g_s(count);
  parallel_for(count, [&](std::size_t idx) {
    const Vec2 x = grid_point(idx, n);
    fwd[idx] = make_stencil(f.evaluate(x), n);
    const Vec2 xi = f.inverse_evaluate(x);
    bwd[idx] = make_stencil(xi, n);
    g_u[idx] = lin.eigen_coordinates(-f.amplitude() * f.psi(x)).x;
    g_s[idx] = lin.eigen_coordinates(-f.amplitude() * f.psi(xi)).y;
  });

  std::vector<double> a(count, 0.0), b(count, 0.0), a_next(count), b_next(count);
  std::vector<double> delta(count);
  ConjugacySolution sol;
  sol.stats.contraction_bound = contraction_rate(lin);
  const double mu_u = lin.mu_unstable, mu_s = lin.mu_stable;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    parallel_for(count, [&](std::size_t idx) {
      a_next[idx] = (apply_stencil(fwd[idx], a, n) - g_u[idx]) / mu_u;
      b_next[idx] = mu_s * apply_stencil(bwd[idx], b, n) + g_s[idx];
      delta[idx] = std::max(std::abs(a_next[idx] - a[idx]), std::abs(b_next[idx] - b[idx]));
    });
    const double update = *std::max_element(delta.begin(), delta.end());
    a.swap(a_next);
    b.swap(b_next);
    sol.stats.iterations = sweep + 1;
    if (update > 0.0) sol.stats.sup_updates.push_back(update);
    if (update < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence, "conjugacy sweeps did not converge in 500 iterations");
  }
  finalize_stats(sol.stats);

  sol.field = make_field(f, n, FieldDirection::Forward);
  for (std::size_t idx = 0; idx < count; ++idx) {
    sol.field.values[idx] = lin.from_eigen_coordinates({a[idx], b[idx]});
  }
  if (verify) {
    const ConjugacyMap h(f, sol.field);
    sol.stats.verification_resolution = 4 * n;
    sol.stats.verification_residual = grid_residual(h, 4 * n);
  }
  return sol;
}

namespace {

// Node sweeps for v(A y) = A v(y) + eps psi(y + v(y)) on the n x n grid,
// starting from the eigen-coordinates (a, b). A maps nodes to nodes.
void inverse_node_sweeps(const PerturbedMap& f, int n, double tol, std::vector<double>& a,
                         std::vector<double>& b, SolveStats& stats) {
  const HyperbolicAutomorphism& lin = f.linear();
  const IMat2 m = lin.imat2();
  const std::int64_t det = lin.determinant;
  const IMat2 mi{{{det * m[1][1], -det * m[0][1]}, {-det * m[1][0], det * m[0][0]}}};
  const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  const auto image = [n](const IMat2& t, std::size_t idx) {
    const auto i = static_cast<std::int64_t>(idx % static_cast<std::size_t>(n));
    const auto j = static_cast<std::int64_t>(idx / static_cast<std::size_t>(n));
    const int ii = wrap_index(static_cast<int>((t[0][0] * i + t[0][1] * j) % n), n);
    const int jj = wrap_index(static_cast<int>((t[1][0] * i + t[1][1] * j) % n), n);
    return static_cast<std::size_t>(jj) * static_cast<std::size_t>(n) + static_cast<std::size_t>(ii);
  };
  std::vector<double> a_next(count), b_next(count), delta(count);
  std::vector<Vec2> forcing(count);
  const double mu_u = lin.mu_unstable, mu_s = lin.mu_stable;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    parallel_for(count, [&](std::size_t idx) {
      const Vec2 v = lin.from_eigen_coordinates({a[idx], b[idx]});
      forcing[idx] = lin.eigen_coordinates(f.amplitude() * f.psi(grid_point(idx, n) + v));
    });
    parallel_for(count, [&](std::size_t idx) {
      const std::size_t back = image(mi, idx);
      a_next[idx] = (a[image(m, idx)] - forcing[idx].x) / mu_u;
      b_next[idx] = mu_s * b[back] + forcing[back].y;
      delta[idx] = std::max(std::abs(a_next[idx] - a[idx]), std::abs(b_next[idx] - b[idx]));
    });
    const double update = *std::max_element(delta.begin(), delta.end());
    a.swap(a_next);
    b.swap(b_next);
    stats.iterations = sweep + 1;
    if (update > 0.0) stats.sup_updates.push_back(update);
    if (update < tol) return;
  }
  throw Error(ErrorCode::NoConvergence,
              "inverse conjugacy sweeps did not converge in 500 iterations");
}

}  // namespace

ConjugacySolution solve_inverse_conjugacy(const PerturbedMap& f, int n, double tol, bool verify,
                                          bool allow_small_grid) {
  check_resolution(n, allow_small_grid);
  const HyperbolicAutomorphism& lin = f.linear();
  const auto count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  std::vector<double> a(count, 0.0), b(count, 0.0);
  ConjugacySolution sol;
  sol.stats.contraction_bound = contraction_rate(lin);
  inverse_node_sweeps(f, n, tol, a, b, sol.stats);
  finalize_stats(sol.stats);
  sol.field = make_field(f, n, FieldDirection::Inverse);
  for (std::size_t idx = 0; idx < count; ++idx) {
    sol.field.values[idx] = lin.from_eigen_coordinates({a[idx], b[idx]});
  }
  if (verify) {
    // The 4x grid is A-invariant too, so the pointwise-refined H^{-1} there is
    // the node solution; seed it from the interpolant and check the equation.
    const int vr = 4 * n;
    const auto vcount = static_cast<std::size_t>(vr) * static_cast<std::size_t>(vr);
    std::vector<double> fa(vcount), fb(vcount);
    parallel_for(vcount, [&](std::size_t idx) {
      const Vec2 e = lin.eigen_coordinates(sol.field.interpolate(grid_point(idx, vr)));
      fa[idx] = e.x;
      fb[idx] = e.y;
    });
    SolveStats fine;
    inverse_node_sweeps(f, vr, tol, fa, fb, fine);
    DisplacementField v = make_field(f, vr, FieldDirection::Inverse);
    for (std::size_t idx = 0; idx < vcount; ++idx) {
      v.values[idx] = lin.from_eigen_coordinates({fa[idx], fb[idx]});
    }
    std::vector<double> res(vcount);
    parallel_for(vcount, [&](std::size_t idx) {
      const auto i = static_cast<int>(idx % static_cast<std::size_t>(vr));
      const auto j = static_cast<int>(idx / static_cast<std::size_t>(vr));
      const Vec2 y = grid_point(idx, vr);
      const IVec2 ay{lin.imat2()[0][0] * i + lin.imat2()[0][1] * j,
                     lin.imat2()[1][0] * i + lin.imat2()[1][1] * j};
      const Vec2 lhs = f.evaluate(y + v.values[idx]);
      const Vec2 rhs = f.matrix() * y + v.at(static_cast<int>(ay[0] % vr), static_cast<int>(ay[1] % vr));
      res[idx] = norm_inf(lhs - rhs);
    });
    sol.stats.verification_resolution = vr;
    sol.stats.verification_residual = *std::max_element(res.begin(), res.end());
  }
  return sol;
}

namespace {

// Solves v_{k+1} = A v_k + eps psi(y_k + v_k) along y_k = A^k y, |k| <= depth,
// with the far ends read from the grid field. Returns v at k = 0 and k = 1.
std::pair<Vec2, Vec2> inverse_on_orbit(const PerturbedMap& f, const DisplacementField& v,
                                       int depth, const Vec2& y) {
  const HyperbolicAutomorphism& lin = f.linear();
  const double eps = f.amplitude();
  const double mu_u = lin.mu_unstable, mu_s = lin.mu_stable;
  std::array<Vec2, 2 * kMaxDepth + 1> ys;
  std::array<double, 2 * kMaxDepth + 1> a, b;
  const auto idx = [depth](int k) { return static_cast<std::size_t>(k + depth); };
  ys[idx(0)] = wrap_unit(y);
  for (int k = 1; k <= depth; ++k) {
    ys[idx(k)] = wrap_unit(f.matrix() * ys[idx(k - 1)]);
    ys[idx(-k)] = wrap_unit(f.linear().inverse2() * ys[idx(-k + 1)]);
  }
  for (int k = -depth; k <= depth; ++k) {
    const Vec2 e = lin.eigen_coordinates(v.interpolate(ys[idx(k)]));
    a[idx(k)] = e.x;
    b[idx(k)] = e.y;
  }
  const auto disp = [&](int k) { return lin.from_eigen_coordinates({a[idx(k)], b[idx(k)]}); };
  for (int sweep = 0; sweep < 40; ++sweep) {
    double change = 0.0;
    for (int k = depth - 1; k >= -depth; --k) {
      const double gu = lin.eigen_coordinates(eps * f.psi(ys[idx(k)] + disp(k))).x;
      const double next = (a[idx(k + 1)] - gu) / mu_u;
      change = std::max(change, std::abs(next - a[idx(k)]));
      a[idx(k)] = next;
    }
    for (int k = -depth + 1; k <= depth; ++k) {
      const double gs = lin.eigen_coordinates(eps * f.psi(ys[idx(k - 1)] + disp(k - 1))).y;
      const double next = mu_s * b[idx(k - 1)] + gs;
      change = std::max(change, std::abs(next - b[idx(k)]));
      b[idx(k)] = next;
    }
    if (change < 1e-15) break;
  }
  return {disp(0), disp(1)};
}

}  // namespace

Vec2 inverse_residual_at(const PerturbedMap& f, const DisplacementField& v, const Vec2& y,
                         int depth) {
  if (f.amplitude() == 0.0) {
    const Vec2 ay = f.matrix() * y;
    return f.evaluate(y + v.interpolate(y)) - (ay + v.interpolate(ay));
  }
  const auto [v0, v1] = inverse_on_orbit(f, v, std::min(depth, kMaxDepth), y);
  // The orbit solve runs on wrapped points, so compare in the lift of y.
  const Vec2 y0 = wrap_unit(y);
  return f.evaluate(y0 + v0) - (f.matrix() * y0 + v1);
}

ConjugacyMap::ConjugacyMap(PerturbedMap f, DisplacementField forward,
                           std::optional<DisplacementField> inverse, int depth)
    : f_(std::move(f)),
      forward_(std::move(forward)),
      inverse_(std::move(inverse)),
      depth_(depth > 0 ? std::min(depth, kMaxDepth) : default_refinement_depth(f_.linear())) {
  if (forward_.direction != FieldDirection::Forward) {
    throw Error(ErrorCode::InvalidArgument, "forward field expected");
  }
  if (inverse_ && inverse_->direction != FieldDirection::Inverse) {
    throw Error(ErrorCode::InvalidArgument, "inverse field expected");
  }
}

ConjugacyMap::Orbit ConjugacyMap::trace_orbit(const Vec2& x, int forward_steps) const {
  const HyperbolicAutomorphism& lin = f_.linear();
  const double eps = f_.amplitude();
  Orbit o;
  o.center = depth_;
  const auto len = static_cast<std::size_t>(depth_ + forward_steps + 1);
  o.points.resize(len);
  o.forcing.resize(len);
  const auto c = static_cast<std::size_t>(depth_);
  o.points[c] = wrap_unit(x);
  for (std::size_t k = c; k + 1 < len; ++k) {
    const Vec2 p = f_.psi(o.points[k]);
    o.forcing[k] = lin.eigen_coordinates(-eps * p);
    o.points[k + 1] = wrap_unit(f_.matrix() * o.points[k] + eps * p);
  }
  o.forcing[len - 1] = lin.eigen_coordinates(-eps * f_.psi(o.points[len - 1]));
  for (std::size_t k = c; k > 0; --k) {
    o.points[k - 1] = wrap_unit(f_.inverse_evaluate(o.points[k]));
    o.forcing[k - 1] = lin.eigen_coordinates(-eps * f_.psi(o.points[k - 1]));
  }
  return o;
}

Vec2 ConjugacyMap::displacement_on_orbit(const Orbit& o, int center) const {
  const HyperbolicAutomorphism& lin = f_.linear();
  const double mu_u = lin.mu_unstable, mu_s = lin.mu_stable;
  const auto at = [&](int k) { return static_cast<std::size_t>(center + k); };
  // a(x) = sum_{k<K} -mu_u^{-(k+1)} g_u(F^k x) + mu_u^{-K} a(F^K x)
  double a = lin.eigen_coordinates(forward_.interpolate(o.points[at(depth_)])).x;
  for (int k = depth_ - 1; k >= 0; --k) a = (a - o.forcing[at(k)].x) / mu_u;
  // b(x) = sum_{k=1..K} mu_s^{k-1} g_s(F^{-k} x) + mu_s^K b(F^{-K} x)
  double b = lin.eigen_coordinates(forward_.interpolate(o.points[at(-depth_)])).y;
  for (int k = -depth_ + 1; k <= 0; ++k) b = mu_s * b + o.forcing[at(k - 1)].y;
  return lin.from_eigen_coordinates({a, b});
}

Vec2 ConjugacyMap::displacement(const Vec2& x) const {
  if (f_.amplitude() == 0.0) return forward_.interpolate(x);
  const Orbit o = trace_orbit(x, depth_);
  return displacement_on_orbit(o, o.center);
}

Vec2 ConjugacyMap::residual_at(const Vec2& x) const {
  // H(F x) - A H(x) = F x - A x + u(F x) - A u(x); u is periodic so the
  // orbit may be wrapped while the displacement terms are taken in the lift.
  const Vec2 fx = f_.evaluate(x);
  const Vec2 lin_part = fx - f_.matrix() * x;
  if (f_.amplitude() == 0.0) {
    return lin_part + forward_.interpolate(fx) - f_.matrix() * forward_.interpolate(x);
  }
  const Orbit o = trace_orbit(x, depth_ + 1);
  const Vec2 u0 = displacement_on_orbit(o, o.center);
  const Vec2 u1 = displacement_on_orbit(o, o.center + 1);
  return lin_part + u1 - f_.matrix() * u0;
}

Vec2 ConjugacyMap::inverse_displacement(const Vec2& y) const {
  if (!inverse_) return apply_inverse(y) - y;
  if (f_.amplitude() == 0.0) return inverse_->interpolate(y);
  return inverse_on_orbit(f_, *inverse_, depth_, y).first;
}

Vec2 ConjugacyMap::apply_inverse(const Vec2& y, double tol) const {
  if (inverse_) return y + inverse_displacement(y);
  // Without an inverse field, solve H(x) = y by x <- x - (H(x) - y).
  Vec2 x = y - forward_.interpolate(y);
  if (f_.amplitude() == 0.0) return x;
  const double scale = std::max(1.0, norm_inf(y));
  for (int it = 0; it < 60; ++it) {
    const Vec2 r = apply(x) - y;
    if (norm_inf(r) < tol * scale) return x;
    x -= r;
  }
  throw Error(ErrorCode::NoConvergence, "inverse conjugacy polish did not converge");
}

double conjugacy_residual(const ConjugacyMap& h, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> pts(static_cast<std::size_t>(samples));
  for (auto& p : pts) p = {unit(rng), unit(rng)};
  std::vector<double> res(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { res[i] = norm_inf(h.residual_at(pts[i])); });
  return res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
}

double field_residual(const DisplacementField& u, const PerturbedMap& f, int samples,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> pts(static_cast<std::size_t>(samples));
  for (auto& p : pts) p = {unit(rng), unit(rng)};
  std::vector<double> res(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    const Vec2 x = pts[i];
    const Vec2 fx = f.evaluate(x);
    const Vec2 hfx = fx + u.interpolate(fx);
    const Vec2 ahx = f.matrix() * (x + u.interpolate(x));
    res[i] = norm_inf(hfx - ahx);
  });
  return res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
}

double grid_residual(const ConjugacyMap& h, int resolution) {
  const auto count = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  std::vector<double> res(count);
  parallel_for(count, [&](std::size_t idx) {
    res[idx] = norm_inf(h.residual_at(grid_point(idx, resolution)));
  });
  return *std::max_element(res.begin(), res.end());
}

double shadowing_defect(const ConjugacyMap& h, const Vec2& x, int steps) {
  double worst = 0.0;
  Vec2 xk = wrap_unit(x);
  for (int k = 0; k < steps; ++k) {
    const Vec2 next = h.map().evaluate(xk);
    const Vec2 lhs = h.apply(next);
    const Vec2 rhs = h.map().matrix() * h.apply(xk);
    worst = std::max(worst, torus_distance(lhs, rhs));
    xk = wrap_unit(next);
  }
  return worst;
}

double composition_residual(const ConjugacyMap& h, int resolution) {
  const auto count = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  std::vector<double> res(count);
  parallel_for(count, [&](std::size_t idx) {
    const Vec2 y = grid_point(idx, resolution);
    res[idx] = norm_inf(h.apply(h.apply_inverse(y)) - y);
  });
  return *std::max_element(res.begin(), res.end());
}

void save_field(const DisplacementField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  auto put = [&](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  out.write(kMagic, sizeof(kMagic));
  put(static_cast<std::uint32_t>(1));
  put(static_cast<std::uint32_t>(field.resolution));
  put(static_cast<std::uint32_t>(field.direction));
  put(field.amplitude);
  for (const auto& row : field.matrix) {
    for (std::int64_t e : row) put(e);
  }
  for (const auto& v : field.values) {
    put(v.x);
    put(v.y);
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

DisplacementField load_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  auto get = [&](auto& v) { in.read(reinterpret_cast<char*>(&v), sizeof(v)); };
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::IoError, path.string() + " is not a displacement field dump");
  }
  std::uint32_t version = 0, res = 0, dir = 0;
  get(version);
  get(res);
  get(dir);
  if (version != 1 || dir > 1) throw Error(ErrorCode::IoError, "unsupported field header");
  DisplacementField field;
  field.resolution = static_cast<int>(res);
  field.direction = static_cast<FieldDirection>(dir);
  get(field.amplitude);
  for (auto& row : field.matrix) {
    for (auto& e : row) get(e);
  }
  field.values.resize(static_cast<std::size_t>(res) * res);
  for (auto& v : field.values) {
    get(v.x);
    get(v.y);
  }
  if (!in) throw Error(ErrorCode::IoError, "truncated field dump " + path.string());
  return field;
}

}  // namespace rigidity
