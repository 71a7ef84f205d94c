#include "rigidity/circle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "rigidity/parallel.hpp"

namespace rigidity {

namespace {

// tau is only C^{1+Zygmund} for a generic perturbation: tau'' grows like
// log(1/h) at the fixed point. First derivatives use central stencils, which
// cancel the even s^2 log|s| term, and a short one-sided seam stencil whose
// error is O(h). Higher orders are read at a fixed scale.
constexpr double kTauFirstStep = 1e-4;
constexpr double kTauStep = 1e-3;
constexpr double kSeamFirstStep = 1e-6;
constexpr double kSeamStep = 2e-3;

double apply_weights(const std::vector<double>& w, const std::vector<double>& vals) {
  double d = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) d += w[k] * vals[k];
  return d;
}
constexpr double kFirstStep = 1e-5;
constexpr double kSecondStep = 1e-4;

double poly(const std::vector<double>& c, double t, int derivative) {
  double r = 0.0;
  const int n = static_cast<int>(c.size());
  for (int k = n - 1; k >= derivative; --k) {
    double fall = 1.0;
    for (int i = 0; i < derivative; ++i) fall *= static_cast<double>(k - i);
    r = r * t + fall * c[static_cast<std::size_t>(k)];
  }
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Two-point Hermite polynomial on [0, 1] with prescribed derivatives 0..m at
// each end, monomial coefficients.
std::vector<double> hermite_blend(const std::vector<double>& left, const std::vector<double>& right) {
  const int m = static_cast<int>(left.size()) - 1;
  std::vector<double> c(static_cast<std::size_t>(2 * m + 2), 0.0);
  for (int j = 0; j <= m; ++j) c[static_cast<std::size_t>(j)] = left[static_cast<std::size_t>(j)] / factorial(j);
  Eigen::MatrixXd sys(m + 1, m + 1);
  Eigen::VectorXd rhs(m + 1);
  for (int j = 0; j <= m; ++j) {
    double known = 0.0;
    for (int k = j; k <= m; ++k) known += c[static_cast<std::size_t>(k)] * factorial(k) / factorial(k - j);
    rhs(j) = right[static_cast<std::size_t>(j)] - known;
    for (int k = m + 1; k <= 2 * m + 1; ++k) {
      sys(j, k - m - 1) = k >= j ? factorial(k) / factorial(k - j) : 0.0;
    }
  }
  const Eigen::VectorXd x = sys.fullPivLu().solve(rhs);
  for (int k = m + 1; k <= 2 * m + 1; ++k) c[static_cast<std::size_t>(k)] = x(k - m - 1);
  return c;
}

bool blend_monotone(const std::vector<double>& c, double sign) {
  constexpr int kChecks = 4096;
  for (int i = 0; i <= kChecks; ++i) {
    if (sign * poly(c, static_cast<double>(i) / kChecks, 1) <= 0.0) return false;
  }
  return true;
}

std::int64_t floor_int(double x) { return static_cast<std::int64_t>(std::floor(x)); }

// Cubic Hermite on one cell with the Fritsch-Carlson limiter.
void limited_slopes(double y0, double y1, double h, double& m0, double& m1) {
  const double delta = (y1 - y0) / h;
  if (delta <= 0.0) return;
  const double a = m0 / delta;
  const double b = m1 / delta;
  const double r = a * a + b * b;
  if (r > 9.0) {
    const double tau = 3.0 / std::sqrt(r);
    m0 = tau * a * delta;
    m1 = tau * b * delta;
  }
}

}  // namespace

std::vector<double> fd_weights(double x0, const std::vector<double>& nodes, int order) {
  const int n = static_cast<int>(nodes.size());
  if (order < 0 || order >= n) {
    throw Error(ErrorCode::InvalidArgument, "stencil too small for the derivative order");
  }
  std::vector<std::vector<double>> c(static_cast<std::size_t>(n),
                                     std::vector<double>(static_cast<std::size_t>(order + 1), 0.0));
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[static_cast<std::size_t>(i)] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
      c2 *= c3;
      auto& ci = c[static_cast<std::size_t>(i)];
      auto& cj = c[static_cast<std::size_t>(j)];
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          ci[static_cast<std::size_t>(k)] =
              c1 * (k * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
                    c5 * c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) / c2;
        }
        ci[0] = -c1 * c5 * c[static_cast<std::size_t>(i - 1)][0] / c2;
      }
      for (int k = mn; k >= 1; --k) {
        cj[static_cast<std::size_t>(k)] =
            (c4 * cj[static_cast<std::size_t>(k)] - k * cj[static_cast<std::size_t>(k - 1)]) / c3;
      }
      cj[0] = c4 * cj[0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)][static_cast<std::size_t>(order)];
  return w;
}

double SeamReport::max() const {
  double m = 0.0;
  for (double v : mismatch) m = std::max(m, v);
  return m;
}

// ---------------------------------------------------------------- charts

double ChartMap::sigma(double t, int derivative) const { return poly(sigma_, t, derivative); }

double ChartMap::inverse_sigma(double s) const {
  if (flavor_ == ChartFlavor::Linear) return s / s1_;
  double lo = 0.0;
  double hi = 1.0;
  double t = std::clamp(s / s1_, 0.0, 1.0);
  for (int it = 0; it < 100; ++it) {
    const double g = (sigma(t) - s) / s1_;
    if (g == 0.0) return t;
    if (g > 0.0) hi = t; else lo = t;
    const double step = g / (sigma(t, 1) / s1_);
    double next = t - step;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-17 || hi - lo < 1e-17) return next;
    t = next;
  }
  return t;
}

double ChartMap::translate(const IVec2& n, double s) const {
  const double shift = static_cast<double>(n[0]) * coord_u_.x + static_cast<double>(n[1]) * coord_u_.y;
  if (flavor_ == ChartFlavor::Linear || !leaf_ || stable_->map.amplitude() == 0.0) return s + shift;
  if (n[0] == 0 && n[1] == 0) return s;
  return stable_slide(*leaf_, *stable_, leaf_->point_at(s) + to_real(n), s + shift);
}

double ChartMap::arclength(double t) const {
  if (flavor_ == ChartFlavor::Linear) return t * s1_;
  const std::int64_t k = floor_int(t);
  const double s = sigma(t - static_cast<double>(k));
  return k == 0 ? s : translate({0, k}, s);
}

double ChartMap::parameter(double s) const {
  if (flavor_ == ChartFlavor::Linear) return s / s1_;
  std::int64_t k = floor_int(s / s1_);
  for (int it = 0; it < 8; ++it) {
    const double r = k == 0 ? s : translate({0, -k}, s);
    const double u = r / s1_;
    if (u < 0.0) {
      --k;
    } else if (u >= 1.0) {
      ++k;
    } else {
      return static_cast<double>(k) + inverse_sigma(r);
    }
  }
  throw Error(ErrorCode::NoConvergence, "could not place arclength in a fundamental domain");
}

Vec2 ChartMap::point_at_arclength(double s) const {
  if (flavor_ == ChartFlavor::Linear) return s * e_u_;
  return leaf_->point_at(s);
}

Vec2 ChartMap::point(double t) const { return point_at_arclength(arclength(t)); }

std::vector<double> ChartMap::fundamental_nodes(int count) const {
  if (count < 2) throw Error(ErrorCode::InvalidArgument, "need at least two nodes");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = sigma(static_cast<double>(i) / (count - 1));
  return out;
}

SeamReport ChartMap::seam_mismatch() const {
  SeamReport rep;
  const bool exact = flavor_ == ChartFlavor::Linear || stable_->map.amplitude() == 0.0;
  std::vector<double> right(static_cast<std::size_t>(order_ + 1));
  if (exact) {
    // tau is a translation, so the right-hand derivatives are those of sigma at 0.
    right[0] = s1_ + sigma(0.0);
    for (int j = 1; j <= order_; ++j) right[static_cast<std::size_t>(j)] = sigma(0.0, j);
  } else {
    right[0] = translate({0, 1}, sigma(0.0));
    for (int j = 1; j <= order_; ++j) {
      const int count = j == 1 ? 3 : j + 4;
      const double h = j == 1 ? kSeamFirstStep : kSeamStep;
      std::vector<double> nodes(static_cast<std::size_t>(count));
      std::vector<double> vals(static_cast<std::size_t>(count));
      for (int k = 0; k < count; ++k) {
        nodes[static_cast<std::size_t>(k)] = k * h;
        vals[static_cast<std::size_t>(k)] = translate({0, 1}, sigma(k * h));
      }
      right[static_cast<std::size_t>(j)] = apply_weights(fd_weights(0.0, nodes, j), vals);
    }
  }
  for (int j = 0; j <= order_; ++j) {
    rep.mismatch.push_back(std::abs(sigma(1.0, j) - right[static_cast<std::size_t>(j)]));
  }
  return rep;
}

double ChartMap::deck_defect(int count) const {
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const double t = (i + 0.5) / count;
    worst = std::max(worst, std::abs(arclength(t + 1.0) - translate({0, 1}, arclength(t))));
    worst = std::max(worst, std::abs(arclength(t) - translate({0, 1}, arclength(t - 1.0))));
  }
  return worst;
}

ChartMap build_chart_A(const HyperbolicAutomorphism& a) {
  if (a.dim() != 2) throw Error(ErrorCode::InvalidArgument, "charts need a 2x2 automorphism");
  ChartMap c;
  c.flavor_ = ChartFlavor::Linear;
  c.order_ = 1;
  c.e_u_ = a.e_unstable;
  c.coord_u_ = {a.eigen_coordinates({1.0, 0.0}).x, a.eigen_coordinates({0.0, 1.0}).x};
  if (c.coord_u_.y == 0.0) throw Error(ErrorCode::DegenerateProjection, "e2 has no unstable component");
  c.s1_ = c.coord_u_.y;
  c.alpha_ = c.coord_u_.x / c.coord_u_.y;
  c.scale_ = c.s1_;
  c.sigma_ = {0.0, c.s1_};
  c.tau_ = {c.s1_, 1.0};
  return c;
}

ChartMap build_chart_f(const LeafContext& ctx, int order) {
  if (order < 0 || order > 4) throw Error(ErrorCode::InvalidArgument, "gluing order must be in 0..4");
  const HyperbolicAutomorphism& a = ctx.map.linear();
  ChartMap c = build_chart_A(a);
  c.flavor_ = ChartFlavor::Nonlinear;
  c.order_ = order;
  const double reach = 4.0 * std::abs(c.coord_u_.y) + std::abs(c.coord_u_.x) + 1.0;
  c.leaf_ = std::make_shared<const LeafCurve>(
      integrate_leaf_window(ctx.unstable, {0.0, 0.0}, reach, reach, ctx.step));
  c.stable_ = std::make_shared<const LineField>(ctx.stable);

  const bool exact = ctx.map.amplitude() == 0.0;
  c.s1_ = c.translate({0, 1}, 0.0);
  c.tau_.assign(static_cast<std::size_t>(order + 1), 0.0);
  c.tau_[0] = c.s1_;
  if (order >= 1) {
    if (exact) {
      c.tau_[1] = 1.0;
    } else {
      const auto central = [&](double h, int half) {
        std::vector<double> nodes;
        std::vector<double> vals;
        for (int k = -half; k <= half; ++k) {
          nodes.push_back(k * h);
          vals.push_back(k == 0 ? c.s1_ : c.translate({0, 1}, k * h));
        }
        return std::make_pair(nodes, vals);
      };
      const auto [n1, v1] = central(kTauFirstStep, 4);
      c.tau_[1] = apply_weights(fd_weights(0.0, n1, 1), v1);
      if (order >= 2) {
        const auto [n2, v2] = central(kTauStep, order + 3);
        for (int j = 2; j <= order; ++j) {
          c.tau_[static_cast<std::size_t>(j)] = apply_weights(fd_weights(0.0, n2, j), v2);
        }
      }
    }
  }
  if (order >= 1 && c.tau_[1] <= 0.0) {
    throw Error(ErrorCode::NonMonotoneBlend, "deck action reverses the leaf orientation");
  }
  const double sign = c.s1_ > 0.0 ? 1.0 : -1.0;
  const double a0 = order >= 1 ? c.s1_ / std::sqrt(c.tau_[1]) : c.s1_;
  const auto blend = [&](double scale) {
    std::vector<double> left(static_cast<std::size_t>(order + 1), 0.0);
    std::vector<double> right(static_cast<std::size_t>(order + 1), 0.0);
    right[0] = c.s1_;
    if (order >= 1) left[1] = scale;
    double pw = 1.0;
    for (int j = 1; j <= order; ++j) {
      pw *= scale;
      right[static_cast<std::size_t>(j)] = c.tau_[static_cast<std::size_t>(j)] * pw;
    }
    return hermite_blend(left, right);
  };
  // Scan outwards from the balanced scale.
  for (int k = 0; k <= 56; ++k) {
    const double factor = std::exp((k % 2 == 0 ? 1.0 : -1.0) * 0.05 * ((k + 1) / 2));
    auto coeffs = blend(a0 * factor);
    if (blend_monotone(coeffs, sign)) {
      c.scale_ = a0 * factor;
      c.sigma_ = std::move(coeffs);
      return c;
    }
    if (order == 0) break;
  }
  throw Error(ErrorCode::NonMonotoneBlend, "no monotone blend found for the chart");
}

// ------------------------------------------------------------ circle maps

double CircleMapLift::operator()(double x) const {
  const int m = samples();
  const double k = std::floor(x);
  const double u = (x - k) * m;
  int i = static_cast<int>(std::floor(u));
  if (i >= m) i = m - 1;
  const double h = 1.0 / m;
  const double s = (u - i) * h;
  const double y0 = values[static_cast<std::size_t>(i)];
  const double y1 = i + 1 < m ? values[static_cast<std::size_t>(i + 1)] : values[0] + 1.0;
  double m0 = d1[static_cast<std::size_t>(i)];
  double m1 = d1[static_cast<std::size_t>((i + 1) % m)];
  limited_slopes(y0, y1, h, m0, m1);
  const double r = s / h;
  const double h00 = (1.0 + 2.0 * r) * (1.0 - r) * (1.0 - r);
  const double h10 = r * (1.0 - r) * (1.0 - r);
  const double h01 = r * r * (3.0 - 2.0 * r);
  const double h11 = r * r * (r - 1.0);
  return k + h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
}

double CircleMapLift::derivative(double x) const {
  const int m = samples();
  const double k = std::floor(x);
  const double u = (x - k) * m;
  int i = static_cast<int>(std::floor(u));
  if (i >= m) i = m - 1;
  const double h = 1.0 / m;
  const double r = u - i;
  const double y0 = values[static_cast<std::size_t>(i)];
  const double y1 = i + 1 < m ? values[static_cast<std::size_t>(i + 1)] : values[0] + 1.0;
  double m0 = d1[static_cast<std::size_t>(i)];
  double m1 = d1[static_cast<std::size_t>((i + 1) % m)];
  limited_slopes(y0, y1, h, m0, m1);
  const double dh00 = 6.0 * r * r - 6.0 * r;
  const double dh10 = 3.0 * r * r - 4.0 * r + 1.0;
  const double dh01 = -6.0 * r * r + 6.0 * r;
  const double dh11 = 3.0 * r * r - 2.0 * r;
  return (dh00 * y0 + dh01 * y1) / h + dh10 * m0 + dh11 * m1;
}

double CircleMapLift::min_derivative() const { return *std::min_element(d1.begin(), d1.end()); }

void CircleMapLift::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  out << "t,T,dT,d2T\n";
  const int m = samples();
  for (int i = 0; i < m; ++i) {
    out << static_cast<double>(i) / m << ',' << values[static_cast<std::size_t>(i)] << ','
        << d1[static_cast<std::size_t>(i)] << ',' << d2[static_cast<std::size_t>(i)] << '\n';
  }
}

CircleMapLift sample_circle_map(const std::function<double(double)>& lift, int samples) {
  if (samples < 16) throw Error(ErrorCode::InsufficientSamples, "need at least 16 samples");
  CircleMapLift c;
  const auto m = static_cast<std::size_t>(samples);
  c.values.resize(m);
  c.d1.resize(m);
  c.d2.resize(m);
  parallel_for(m, [&](std::size_t i) {
    const double t = static_cast<double>(i) / samples;
    const double y = lift(t);
    const double a1 = lift(t + kFirstStep) - lift(t - kFirstStep);
    const double a2 = lift(t + 2.0 * kFirstStep) - lift(t - 2.0 * kFirstStep);
    const double dh = a1 / (2.0 * kFirstStep);
    const double d2h = a2 / (4.0 * kFirstStep);
    c.values[i] = y;
    c.d1[i] = (4.0 * dh - d2h) / 3.0;
    c.d2[i] = (lift(t + kSecondStep) - 2.0 * y + lift(t - kSecondStep)) / (kSecondStep * kSecondStep);
  });
  for (std::size_t i = 0; i < m; ++i) {
    const double next = i + 1 < m ? c.values[i + 1] : c.values[0] + 1.0;
    if (!(c.d1[i] > 0.0) || !(next > c.values[i])) {
      throw Error(ErrorCode::MonotonicityViolation,
                  "circle map is not increasing near t = " + std::to_string(static_cast<double>(i) / samples));
    }
  }
  for (int i = 0; i < 16; ++i) {
    const double t = (i + 0.5) / 16.0;
    c.commutation_defect = std::max(c.commutation_defect, std::abs(lift(t + 1.0) - lift(t) - 1.0));
  }
  c.degree_defect = std::abs(lift(1.0) - lift(0.0) - 1.0);
  return c;
}

double circle_map_value(const ChartMap& chart, double t) {
  const double alpha = chart.linear_rotation();
  if (chart.flavor() == ChartFlavor::Linear) return t + alpha;
  const std::int64_t k0 = floor_int(t);
  const double u = t - static_cast<double>(k0);
  const double s = chart.sigma(u);
  const double s1 = chart.period_arclength();
  std::int64_t j = floor_int(u + alpha);
  for (int it = 0; it < 8; ++it) {
    const double r = chart.translate({1, -j}, s);
    const double v = r / s1;
    if (v < 0.0) {
      --j;
    } else if (v >= 1.0) {
      ++j;
    } else {
      return static_cast<double>(k0 + j) + chart.parameter(r) ;
    }
  }
  throw Error(ErrorCode::NoConvergence, "could not place the image in a fundamental domain");
}

CircleMapLift induce_circle_map(const ChartMap& chart, int samples) {
  CircleMapLift c = sample_circle_map([&](double t) { return circle_map_value(chart, t); }, samples);
  // Independent route through the chart extension and the full inverse.
  const auto raw = [&](double t) {
    return chart.parameter(chart.translate({1, 0}, chart.arclength(t)));
  };
  c.commutation_defect = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double t = (i + 0.5) / 16.0;
    c.commutation_defect = std::max(c.commutation_defect, std::abs(raw(t + 1.0) - c(t) - 1.0));
  }
  c.degree_defect = std::abs(raw(1.0) - c.values[0] - 1.0);
  return c;
}

// ------------------------------------------------------- rotation numbers

RotationResult rotation_number(const std::function<double(double)>& lift, double tol,
                               long max_iterations, double x0) {
  if (max_iterations < 2) throw Error(ErrorCode::InvalidArgument, "need at least two iterations");
  RotationResult res;
  const double y0 = x0 - std::floor(x0);
  double y = y0;
  std::int64_t k = 0;
  double best = std::numeric_limits<double>::infinity();
  double prev_estimate = std::numeric_limits<double>::quiet_NaN();
  double prev_diff = std::numeric_limits<double>::infinity();
  int records = 0;
  for (long n = 1; n <= max_iterations; ++n) {
    const double z = lift(y);
    const double j = std::floor(z);
    k += static_cast<std::int64_t>(j);
    y = z - j;
    const double disp = static_cast<double>(k) + (y - y0);
    const double p = std::nearbyint(disp);
    const double dist = std::abs(disp - p);
    if (dist < 1e-13) {
      res.rho = p / static_cast<double>(n);
      res.p = static_cast<std::int64_t>(p);
      res.q = n;
      res.periodic = true;
      res.iterations = n;
      return res;
    }
    if (dist < best) {
      best = dist;
      const double estimate = disp / static_cast<double>(n);
      if (records > 0) {
        const double diff = std::abs(estimate - prev_estimate);
        res.error_estimate = std::max(diff, records > 1 ? prev_diff : diff);
        prev_diff = diff;
      }
      prev_estimate = estimate;
      res.rho = estimate;
      res.p = static_cast<std::int64_t>(p);
      res.q = n;
      ++records;
    }
    res.iterations = n;
  }
  if (records < 3 || res.error_estimate > tol) {
    throw Error(ErrorCode::ToleranceNotReached,
                "rotation number estimate " + std::to_string(res.rho) + " has error estimate " +
                    std::to_string(res.error_estimate));
  }
  return res;
}

// ----------------------------------------------------- reduced conjugacy

ReducedConjugacy reduced_conjugacy(const ConjugacyMap& h, const ChartMap& chart_f,
                                   const ChartMap& chart_A, const CircleMapLift& circle,
                                   int samples, double tol) {
  if (chart_f.flavor() != ChartFlavor::Nonlinear || chart_A.flavor() != ChartFlavor::Linear) {
    throw Error(ErrorCode::InvalidArgument, "reduced conjugacy needs a nonlinear and a linear chart");
  }
  const HyperbolicAutomorphism& a = h.map().linear();
  const double unit = chart_A.period_arclength();
  const auto hat = [&](double t, double* leaf) {
    const Vec2 w = a.eigen_coordinates(h.apply(chart_f.point(t)));
    if (leaf != nullptr) *leaf = std::abs(w.y);
    return w.x / unit;
  };
  ReducedConjugacy r;
  r.alpha = chart_A.linear_rotation();
  const auto m = static_cast<std::size_t>(samples);
  r.values.resize(m);
  std::vector<double> comm(m), rot(m), leaf(m);
  parallel_for(m, [&](std::size_t i) {
    const double t = static_cast<double>(i) / samples;
    const double v = hat(t, &leaf[i]);
    r.values[i] = v;
    comm[i] = std::abs(hat(t + 1.0, nullptr) - v - 1.0);
    rot[i] = std::abs(hat(circle(t), nullptr) - v - r.alpha);
  });
  r.min_increment = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    r.commutation_defect = std::max(r.commutation_defect, comm[i]);
    r.rotation_defect = std::max(r.rotation_defect, rot[i]);
    r.leaf_defect = std::max(r.leaf_defect, leaf[i]);
    const double next = i + 1 < m ? r.values[i + 1] : r.values[0] + 1.0;
    r.min_increment = std::min(r.min_increment, next - r.values[i]);
  }
  if (r.commutation_defect > tol || r.rotation_defect > tol) {
    throw Error(ErrorCode::IdentityViolation,
                "reduced conjugacy defects " + std::to_string(r.commutation_defect) + ", " +
                    std::to_string(r.rotation_defect));
  }
  return r;
}

// ------------------------------------------------------------- Birkhoff

double birkhoff_value(const std::function<double(double)>& lift, double rho, int terms, double x) {
  if (terms < 1) throw Error(ErrorCode::InvalidArgument, "need at least one term");
  const double x_floor = std::floor(x);
  const double y0 = x - x_floor;
  double y = y0;
  std::int64_t k = 0;
  double acc = 0.0;
  const double total = 0.5 * static_cast<double>(terms) * (terms + 1);
  for (int n = 1; n < terms; ++n) {
    const double z = lift(y);
    const double j = std::floor(z);
    k += static_cast<std::int64_t>(j);
    y = z - j;
    // n rho split exactly into a rounded part and its error.
    const double hi = static_cast<double>(n) * rho;
    const double lo = std::fma(static_cast<double>(n), rho, -hi);
    const double ipart = std::nearbyint(hi);
    const double term = (static_cast<double>(k) - ipart) + ((y - y0) - (hi - ipart)) - lo;
    acc += static_cast<double>(terms - n) * term;
  }
  return x + acc / total;
}

BirkhoffConjugacy birkhoff_conjugacy(const std::function<double(double)>& lift, double rho,
                                     int terms, int grid) {
  if (grid < 2) throw Error(ErrorCode::InvalidArgument, "need at least two grid points");
  BirkhoffConjugacy b;
  b.terms = terms;
  const auto m = static_cast<std::size_t>(grid);
  b.grid.resize(m);
  b.values.resize(m);
  std::vector<double> defect(m);
  parallel_for(m, [&](std::size_t i) {
    const double x = static_cast<double>(i) / grid;
    b.grid[i] = x;
    const double v = birkhoff_value(lift, rho, terms, x);
    b.values[i] = v;
    defect[i] = birkhoff_value(lift, rho, terms, lift(x)) - v - rho;
  });
  const double base = b.values[0];
  for (std::size_t i = 0; i < m; ++i) {
    b.values[i] -= base;
    b.defect = std::max(b.defect, std::abs(defect[i]));
  }
  return b;
}

}  // namespace rigidity
