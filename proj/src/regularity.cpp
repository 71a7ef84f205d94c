#include "rigidity/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rigidity {

namespace {

constexpr int kFinestLevel = 10;
constexpr int kCoarsestLevel = 4;
constexpr double kRoundingFloor = 1e-12;

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
  const double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2)));
}

// Periodic trapezoid rule for the integral of ratio^p over every stride-th node.
double lp_integral(const std::vector<double>& ratio, double p, std::size_t stride) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ratio.size(); i += stride) {
    acc += std::pow(ratio[i], p);
    ++count;
  }
  return acc / static_cast<double>(count);
}

}  // namespace

HolderEstimate holder_exponent(const std::vector<double>& samples, double noise_floor) {
  const std::size_t n = samples.size();
  if (n < 1024) throw Error(ErrorCode::InsufficientSamples, "Hoelder estimate needs 1024 samples");
  HolderEstimate h;
  std::vector<double> lx, ly;
  for (int k = kCoarsestLevel; k <= kFinestLevel; ++k) {
    const double delta = std::ldexp(1.0, -k);
    const auto lag = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(delta * n)));
    double osc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) osc = std::max(osc, std::abs(samples[i + lag] - samples[i]));
    h.scales.push_back(static_cast<double>(lag) / n);
    if (osc <= noise_floor) osc = 0.0;
    h.oscillations.push_back(osc);
    if (osc > 0.0) {
      lx.push_back(std::log2(static_cast<double>(lag) / n));
      ly.push_back(std::log2(osc));
    }
  }
  if (lx.size() < 3) {
    // No measurable variation: constant data.
    h.raw_slope = std::numeric_limits<double>::infinity();
    h.exponent = 1.0;
    h.saturated = true;
    return h;
  }
  const double m = static_cast<double>(lx.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m;
  const double my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - my - slope * (lx[i] - mx);
    rss += r * r;
  }
  h.raw_slope = slope;
  h.band = 2.0 * std::sqrt(rss / (m - 2.0) / sxx);
  h.saturated = slope + h.band >= 1.0 - 1e-3;
  h.exponent = h.saturated ? 1.0 : std::clamp(slope, 1e-6, 1.0);
  return h;
}

double ac_diagnostic(const std::vector<double>& samples, double shift) {
  const std::size_t n = samples.size();
  if (n < 16) throw Error(ErrorCode::InsufficientSamples, "AC diagnostic needs 16 samples");
  std::vector<double> inc(n);
  for (std::size_t i = 0; i < n; ++i) {
    inc[i] = (i + 1 < n ? samples[i + 1] : samples[0] + shift) - samples[i];
    if (inc[i] < 0.0) throw Error(ErrorCode::NonMonotone, "samples decrease");
  }
  double total = 0.0;
  for (double v : inc) total += v;
  if (!(total > 0.0)) throw Error(ErrorCode::NonMonotone, "samples carry no mass");
  double worst = 0.0;
  // Cells of 2^j fine increments, j = 2 up to a quarter of the circle.
  for (std::size_t width = 4; width <= n / 4; width *= 2) {
    double lost = 0.0;
    for (std::size_t start = 0; start + width <= n; start += width) {
      std::vector<double> cell(inc.begin() + static_cast<std::ptrdiff_t>(start),
                               inc.begin() + static_cast<std::ptrdiff_t>(start + width));
      double mass = 0.0;
      for (double v : cell) mass += v;
      const double regular = static_cast<double>(width) * median(cell);
      lost += std::max(0.0, mass - regular);
    }
    worst = std::max(worst, lost / total);
  }
  if (worst < kRoundingFloor) return 1.0;
  if (worst >= 0.5) return 0.0;
  return std::clamp(1.0 - worst / (1.0 - worst), 0.0, 1.0);
}

RegularityReport ko_condition_report(const CircleMapLift& t, const QuadraticSurd& alpha, double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::InvalidArgument, "p must exceed 1");
  const std::size_t m = t.values.size();
  if (m < 1024 || t.d1.size() != m || t.d2.size() != m) {
    throw Error(ErrorCode::InsufficientSamples, "report needs 1024 samples with derivatives");
  }
  RegularityReport r;
  r.p = p;
  r.samples = static_cast<int>(m);
  double vmax = 0.0;
  for (double v : t.values) vmax = std::max(vmax, std::abs(v));
  // Rounding of the difference quotients for values of size vmax.
  r.first_noise_floor = 8.0 * std::numeric_limits<double>::epsilon() * (vmax + 2.0) / r.first_step;
  r.second_noise_floor = 8.0 * std::numeric_limits<double>::epsilon() * (vmax + 2.0) /
                         (r.second_step * r.second_step);
  r.inf_first = std::numeric_limits<double>::infinity();
  std::vector<double> ratio(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(t.d1[i] > 0.0)) throw Error(ErrorCode::NonMonotone, "derivative sample is not positive");
    const double next = i + 1 < m ? t.values[i + 1] : t.values[0] + 1.0;
    if (!(next > t.values[i])) throw Error(ErrorCode::NonMonotone, "lift samples decrease");
    const double d2 = std::abs(t.d2[i]) <= r.second_noise_floor ? 0.0 : t.d2[i];
    r.sup_second = std::max(r.sup_second, std::abs(d2));
    r.inf_first = std::min(r.inf_first, t.d1[i]);
    ratio[i] = std::abs(d2 / t.d1[i]);
  }
  r.lp_integral = lp_integral(ratio, p, 1);
  r.lp_integral_half = lp_integral(ratio, p, 2);
  r.lp_norm = std::pow(r.lp_integral, 1.0 / p);
  const double scale = std::max(r.lp_integral, r.lp_integral_half);
  r.refinement_delta = scale > 0.0 ? std::abs(r.lp_integral - r.lp_integral_half) / scale : 0.0;
  r.derivative_holder = holder_exponent(t.d1, 2.0 * r.first_noise_floor);
  r.degree_two = is_degree_two(alpha);
  r.ac_score = ac_diagnostic(t.values, 1.0);

  const std::string lp = "T''/T' in L" + std::to_string(static_cast<int>(std::lround(p)));
  if (std::isfinite(r.lp_norm) && r.refinement_delta < 0.05) {
    r.tags.push_back(lp + " finite");
  } else {
    r.tags.push_back(lp + " unstable under refinement");
  }
  if (r.degree_two) r.tags.push_back("deg(alpha)=2");
  if (r.ac_score > 0.95 && r.inf_first > 0.0) r.tags.push_back("C1+AC plausible");
  if (r.derivative_holder.saturated) r.tags.push_back("T' Lipschitz-or-better at resolved scales");
  return r;
}

}  // namespace rigidity
