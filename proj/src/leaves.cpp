#include "rigidity/leaves.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>

namespace rigidity {

namespace {

constexpr int kMaxPushDepth = 256;
constexpr int kMaxSlideDepth = 60;

Vec2 reference_direction(const LineField& field) {
  const HyperbolicAutomorphism& lin = field.map.linear();
  return field.flavor == LeafFlavor::Unstable ? lin.e_unstable : lin.e_stable;
}

Vec2 orient(const Vec2& v, const Vec2& ref) { return dot(v, ref) < 0.0 ? -v : v; }

Vec2 push_direction(const LineField& field, const Vec2& x, int depth) {
  const PerturbedMap& f = field.map;
  const Vec2 ref = reference_direction(field);
  if (f.amplitude() == 0.0) return ref;
  std::vector<Vec2> orbit(static_cast<std::size_t>(depth) + 1);
  orbit[0] = x;
  Vec2 v = ref;
  if (field.flavor == LeafFlavor::Unstable) {
    for (int k = 1; k <= depth; ++k) orbit[static_cast<std::size_t>(k)] = f.inverse_evaluate(orbit[static_cast<std::size_t>(k - 1)]);
    for (int k = depth; k >= 1; --k) v = normalized(f.derivative(orbit[static_cast<std::size_t>(k)]) * v);
  } else {
    for (int k = 1; k <= depth; ++k) orbit[static_cast<std::size_t>(k)] = f.evaluate(orbit[static_cast<std::size_t>(k - 1)]);
    for (int k = depth; k >= 1; --k) {
      v = normalized(f.derivative(orbit[static_cast<std::size_t>(k - 1)]).inverse() * v);
    }
  }
  return orient(v, ref);
}

Vec2 rk4_step(const LineField& field, const Vec2& x, double h) {
  const Vec2 k1 = direction(field, x);
  const Vec2 k2 = direction(field, x + (0.5 * h) * k1);
  const Vec2 k3 = direction(field, x + (0.5 * h) * k2);
  const Vec2 k4 = direction(field, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Nodes from x over signed length, excluding x itself.
void march(const LineField& field, const Vec2& x, double length, double step,
           std::vector<double>& s, std::vector<Vec2>& pts) {
  const double dir = length < 0.0 ? -1.0 : 1.0;
  const double total = std::abs(length);
  const auto full = static_cast<long>(std::floor(total / step + 1e-9));
  Vec2 p = x;
  for (long k = 1; k <= full; ++k) {
    p = rk4_step(field, p, dir * step);
    s.push_back(dir * static_cast<double>(k) * step);
    pts.push_back(p);
  }
  const double rest = total - static_cast<double>(full) * step;
  if (rest > 1e-12 * step) {
    p = rk4_step(field, p, dir * rest);
    s.push_back(length);
    pts.push_back(p);
  }
}

LeafCurve build_curve(const LineField& field, const Vec2& x, double back, double forward,
                      double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "leaf step must be positive");
  std::vector<double> sb, sf;
  std::vector<Vec2> pb, pf;
  if (back > 0.0) march(field, x, -back, step, sb, pb);
  if (forward > 0.0) march(field, x, forward, step, sf, pf);
  LeafCurve c{field, x, step, {}, {}, {}, {}};
  c.arclength.reserve(sb.size() + sf.size() + 1);
  for (std::size_t k = sb.size(); k-- > 0;) {
    c.arclength.push_back(sb[k]);
    c.nodes.push_back(pb[k]);
  }
  c.arclength.push_back(0.0);
  c.nodes.push_back(x);
  for (std::size_t k = 0; k < sf.size(); ++k) {
    c.arclength.push_back(sf[k]);
    c.nodes.push_back(pf[k]);
  }
  c.tangents.reserve(c.nodes.size());
  c.curvatures.reserve(c.nodes.size());
  const double eta = 1e-4;
  for (const Vec2& p : c.nodes) {
    const Vec2 t = direction(field, p);
    c.tangents.push_back(t);
    c.curvatures.push_back((direction(field, p + eta * t) - direction(field, p - eta * t)) /
                           (2.0 * eta));
  }
  return c;
}

// Grows the window of c so that it covers s, doubling the missing side.
LeafCurve extend_to(const LeafCurve& c, double s) {
  double back = -c.s_min(), forward = c.s_max();
  const double span = std::max(c.s_max() - c.s_min(), 10.0 * c.step);
  while (s < -back) back += span;
  while (s > forward) forward += span;
  back += 0.5 * span;
  forward += 0.5 * span;
  return build_curve(c.field, c.base_point, back, forward, c.step);
}

}  // namespace

LineField make_line_field(const PerturbedMap& f, const ConeCertificate& cert, LeafFlavor flavor,
                          double tol) {
  LineField field{flavor, 0, cert.contraction_factor / cert.expansion_factor, f};
  field.push_depth = depth_for_tolerance(field, tol);
  return field;
}

LineField make_line_field(const PerturbedMap& f, LeafFlavor flavor, double tol) {
  return make_line_field(f, verify_anosov(f, 256), flavor, tol);
}

int depth_for_tolerance(const LineField& field, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must lie in (0, 1)");
  if (!(field.cone_ratio > 0.0 && field.cone_ratio < 1.0)) {
    throw Error(ErrorCode::DepthExceeded, "cone ratio does not contract");
  }
  const int n = static_cast<int>(std::ceil(std::log(tol) / std::log(field.cone_ratio)));
  if (n > kMaxPushDepth) {
    throw Error(ErrorCode::DepthExceeded, "push depth " + std::to_string(n) + " exceeds 256");
  }
  return std::max(n, 1);
}

Vec2 direction(const LineField& field, const Vec2& x) {
  return push_direction(field, x, field.push_depth);
}

Vec2 direction(const LineField& field, const Vec2& x, double tol) {
  return push_direction(field, x, depth_for_tolerance(field, tol));
}

std::size_t LeafCurve::cell(double s) const {
  if (!contains(s)) {
    throw Error(ErrorCode::NoIntersectionInWindow,
                "arclength " + std::to_string(s) + " outside leaf window");
  }
  const auto it = std::upper_bound(arclength.begin(), arclength.end(), s);
  const auto k = static_cast<std::size_t>(it - arclength.begin());
  return std::min(k == 0 ? 0 : k - 1, arclength.size() - 2);
}

// Quintic Hermite from positions, unit tangents and curvature vectors.
Vec2 LeafCurve::point_at(double s) const {
  if (arclength.size() == 1) return nodes[0];
  const std::size_t k = cell(s);
  const double h = arclength[k + 1] - arclength[k];
  const double u = (s - arclength[k]) / h;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  const double h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5;
  const double h1 = u - 6 * u3 + 8 * u4 - 3 * u5;
  const double h2 = 0.5 * (u2 - 3 * u3 + 3 * u4 - u5);
  const double h3 = 0.5 * (u3 - 2 * u4 + u5);
  const double h4 = -4 * u3 + 7 * u4 - 3 * u5;
  const double h5 = 10 * u3 - 15 * u4 + 6 * u5;
  return h0 * nodes[k] + (h1 * h) * tangents[k] + (h2 * h * h) * curvatures[k] +
         (h3 * h * h) * curvatures[k + 1] + (h4 * h) * tangents[k + 1] + h5 * nodes[k + 1];
}

Vec2 LeafCurve::tangent_at(double s) const {
  if (arclength.size() == 1) return tangents[0];
  const std::size_t k = cell(s);
  const double h = arclength[k + 1] - arclength[k];
  const double u = (s - arclength[k]) / h;
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u;
  const double d0 = -30 * u2 + 60 * u3 - 30 * u4;
  const double d1 = 1 - 18 * u2 + 32 * u3 - 15 * u4;
  const double d2 = u - 4.5 * u2 + 6 * u3 - 2.5 * u4;
  const double d3 = 1.5 * u2 - 4 * u3 + 2.5 * u4;
  const double d4 = -12 * u2 + 28 * u3 - 15 * u4;
  const double d5 = 30 * u2 - 60 * u3 + 30 * u4;
  return (d0 / h) * nodes[k] + d1 * tangents[k] + (d2 * h) * curvatures[k] +
         (d3 * h) * curvatures[k + 1] + d4 * tangents[k + 1] + (d5 / h) * nodes[k + 1];
}

void LeafCurve::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  out << "s,x,y,tx,ty\n" << std::setprecision(17);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    out << arclength[k] << ',' << nodes[k].x << ',' << nodes[k].y << ',' << tangents[k].x << ','
        << tangents[k].y << '\n';
  }
}

LeafCurve integrate_leaf(const LineField& field, const Vec2& x, double length, double step) {
  return length < 0.0 ? build_curve(field, x, -length, 0.0, step)
                      : build_curve(field, x, 0.0, length, step);
}

LeafCurve integrate_leaf_window(const LineField& field, const Vec2& x, double back,
                                double forward, double step) {
  return build_curve(field, x, std::max(back, 0.0), std::max(forward, 0.0), step);
}

GpsPoint gps_intersect(const LeafCurve& a, const LeafCurve& b, const ConjugacyMap* h) {
  if (a.flavor() == b.flavor()) {
    throw Error(ErrorCode::InvalidArgument, "intersection needs one stable and one unstable leaf");
  }
  const bool a_stable = a.flavor() == LeafFlavor::Stable;
  std::optional<LeafCurve> st_own, un_own;
  const LeafCurve* st = a_stable ? &a : &b;
  const LeafCurve* un = a_stable ? &b : &a;
  const HyperbolicAutomorphism& lin = st->field.map.linear();

  // The linear picture: the stable leaf keeps its E^u coordinate and the
  // unstable leaf keeps its E^s coordinate.
  Vec2 seed;
  if (h != nullptr) {
    const Vec2 hs = lin.eigen_coordinates(h->apply(st->base_point));
    const Vec2 hu = lin.eigen_coordinates(h->apply(un->base_point));
    seed = h->apply_inverse(lin.from_eigen_coordinates({hs.x, hu.y}));
  } else {
    const Vec2 cs = lin.eigen_coordinates(st->base_point);
    const Vec2 cu = lin.eigen_coordinates(un->base_point);
    seed = lin.from_eigen_coordinates({cs.x, cu.y});
  }
  const Vec2 seed_c = lin.eigen_coordinates(seed);
  double s = seed_c.y - lin.eigen_coordinates(st->base_point).y;
  double u = seed_c.x - lin.eigen_coordinates(un->base_point).x;

  GpsPoint out;
  for (int it = 0; it < 40; ++it) {
    while (!st->contains(s) || !un->contains(u)) {
      if (out.extensions == 3) {
        throw Error(ErrorCode::NoIntersectionInWindow,
                    "leaf windows missed the intersection after 3 extensions");
      }
      ++out.extensions;
      if (!st->contains(s)) {
        st_own = extend_to(*st, s);
        st = &*st_own;
      }
      if (!un->contains(u)) {
        un_own = extend_to(*un, u);
        un = &*un_own;
      }
    }
    const Vec2 ps = st->point_at(s);
    const Vec2 pu = un->point_at(u);
    const Vec2 g = ps - pu;
    out.iterations = it + 1;
    out.point = pu;
    out.s_stable = s;
    out.s_unstable = u;
    const double scale = std::max(1.0, norm_inf(pu));
    if (norm_inf(g) < 1e-15 * scale) break;
    const Mat2 j = Mat2::from_columns(st->tangent_at(s), -un->tangent_at(u));
    const Vec2 d = j.inverse() * g;
    s -= d.x;
    u -= d.y;
    if (norm_inf(d) < 1e-16 * std::max(1.0, std::max(std::abs(s), std::abs(u)))) {
      out.point = un->contains(u) ? un->point_at(u) : pu;
      out.s_stable = s;
      out.s_unstable = u;
      break;
    }
  }
  return out;
}

LeafContext make_leaf_context(const ConjugacyMap& h, double direction_tol, double step) {
  const PerturbedMap& f = h.map();
  const ConeCertificate cert = verify_anosov(f, 256);
  return LeafContext{f,
                     make_line_field(f, cert, LeafFlavor::Stable, direction_tol),
                     make_line_field(f, cert, LeafFlavor::Unstable, direction_tol),
                     std::make_shared<const ConjugacyMap>(h),
                     step,
                     1e-8};
}

double unstable_leaf_offset(const LeafContext& ctx, const Vec2& x, const Vec2& z) {
  const HyperbolicAutomorphism& lin = ctx.map.linear();
  return std::abs(lin.eigen_coordinates(ctx.conjugacy->apply(z) - ctx.conjugacy->apply(x)).y);
}

HolonomyResult holonomy(const LeafContext& ctx, const Vec2& x, const Vec2& y, const Vec2& z,
                        HolonomyMethod method) {
  const ConjugacyMap& h = *ctx.conjugacy;
  const HyperbolicAutomorphism& lin = ctx.map.linear();
  const double off = unstable_leaf_offset(ctx, x, z);
  if (off > ctx.on_leaf_tol) {
    throw Error(ErrorCode::OffLeaf, "point is " + std::to_string(off) + " off the unstable leaf");
  }
  const Vec2 hz = h.apply(z);
  const Vec2 shift = lin.project_stable(h.apply(y) - h.apply(x));
  const Vec2 predicted = h.apply_inverse(hz + shift);
  HolonomyResult out;
  out.method = method;
  if (method == HolonomyMethod::Transport) {
    out.image = predicted;
    return out;
  }
  const auto window = [](double est) {
    const double pad = 0.05 + 0.1 * std::abs(est);
    return std::pair<double, double>{std::max(0.0, -est) + pad, std::max(0.0, est) + pad};
  };
  const Vec2 pc = lin.eigen_coordinates(predicted);
  const auto [sb, sf] = window(pc.y - lin.eigen_coordinates(z).y);
  const auto [ub, uf] = window(pc.x - lin.eigen_coordinates(y).x);
  const LeafCurve st = integrate_leaf_window(ctx.stable, z, sb, sf, ctx.step);
  const LeafCurve un = integrate_leaf_window(ctx.unstable, y, ub, uf, ctx.step);
  const GpsPoint p = gps_intersect(st, un, &h);
  out.image = p.point;
  out.iterations = p.iterations;
  return out;
}

Vec2 deck_action(const LeafContext& ctx, const IVec2& n, const Vec2& x, HolonomyMethod method) {
  const Vec2 m = to_real(n);
  return holonomy(ctx, m, {0.0, 0.0}, x + m, method).image;
}

double stable_slide(const LeafCurve& target, const LineField& stable, const Vec2& p,
                    double seed, int* depth_used) {
  if (target.flavor() != LeafFlavor::Unstable || stable.flavor != LeafFlavor::Stable) {
    throw Error(ErrorCode::InvalidArgument, "stable_slide needs an unstable target and a stable field");
  }
  const PerturbedMap& f = stable.map;
  const double mu = std::abs(f.linear().mu_unstable);
  // Orbit of p kept near the unit square; the same integer shifts are applied
  // to the trial orbit so differences stay accurate.
  std::vector<Vec2> orbit{p};
  std::vector<Vec2> shifts{Vec2{}};
  const auto extend_orbit = [&](int n) {
    while (static_cast<int>(orbit.size()) <= n) {
      Vec2 q = f.evaluate(orbit.back());
      const Vec2 m{std::floor(q.x), std::floor(q.y)};
      orbit.push_back(q - m);
      shifts.push_back(m);
    }
  };
  double s = seed;
  int n = 0;
  double mu_n = 1.0;
  while (true) {
    extend_orbit(n);
    const Vec2 e = direction(stable, orbit[static_cast<std::size_t>(n)]);
    double dist = 0.0;
    for (int it = 0; it < 30; ++it) {
      const Vec2 t0 = target.tangent_at(s);
      Vec2 q = target.point_at(s);
      Mat2 jac = Mat2::identity();
      for (int k = 1; k <= n; ++k) {
        Vec2 next;
        Mat2 dk;
        f.evaluate_with_derivative(q, next, dk);
        jac = dk * jac;
        q = next - shifts[static_cast<std::size_t>(k)];
      }
      const Vec2 diff = q - orbit[static_cast<std::size_t>(n)];
      dist = norm(diff);
      const double phi = cross(diff, e);
      const double dphi = cross(jac * t0, e);
      const double ds = phi / dphi;
      s -= ds;
      if (std::abs(ds) < 1e-16 * std::max(1.0, std::abs(s)) || phi == 0.0) break;
    }
    if (dist * dist / mu_n < 1e-16) break;
    if (n >= kMaxSlideDepth) {
      throw Error(ErrorCode::DepthExceeded, "stable leaf localization needs more than 60 iterates");
    }
    // Jump further once the residual distance allows it.
    n += (n < 4) ? 1 : 2;
    mu_n = std::pow(mu, n);
  }
  if (depth_used != nullptr) *depth_used = n;
  return s;
}

}  // namespace rigidity
