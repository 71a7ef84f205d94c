#pragma once

#include <string>
#include <vector>

#include "rigidity/circle.hpp"
#include "rigidity/surd.hpp"

namespace rigidity {

/// Hoelder exponent of uniformly sampled data on [0, 1) from the log-log
/// slope of the largest increment over lags delta = 2^-k, k = 4..10.
struct HolderEstimate {
  double exponent = 0.0;  // slope clipped to (0, 1]
  double raw_slope = 0.0;
  double band = 0.0;      // two standard errors of the slope
  bool saturated = false; // Lipschitz-or-better at the resolved scales
  std::vector<double> scales;
  std::vector<double> oscillations;
};

/// Oscillations at or below `noise_floor` count as zero. Throws
/// InsufficientSamples below 1024 samples.
HolderEstimate holder_exponent(const std::vector<double>& samples, double noise_floor = 0.0);

/// Score in [0, 1] for whether the increments of a monotone lift (samples
/// on [0, 1), period shift `shift`) look absolutely continuous at resolved
/// scales. In every dyadic cell the median fine increment times the cell
/// count stands in for the integral of a density; the mass it fails to
/// recover is treated as singular, and the score is 1 - singular / regular
/// at the worst level. A heuristic only. Throws NonMonotone.
double ac_diagnostic(const std::vector<double>& samples, double shift = 1.0);

struct RegularityReport {
  HolderEstimate derivative_holder;  // of the T' samples
  double p = 2.0;
  double lp_integral = 0.0;       // int |T''/T'|^p on the full grid
  double lp_integral_half = 0.0;  // same on every other sample
  double lp_norm = 0.0;           // lp_integral^(1/p)
  double refinement_delta = 0.0;  // relative change of the integral
  double sup_second = 0.0;
  double inf_first = 0.0;
  double first_noise_floor = 0.0;
  double second_noise_floor = 0.0;
  bool degree_two = false;
  double ac_score = 0.0;
  int samples = 0;
  double first_step = 1e-5;
  double second_step = 1e-4;
  std::vector<std::string> tags;
};

/// Diagnostics for the sufficient conditions on T (C^{1+AC}, T''/T' in L^p,
/// deg alpha = 2). Second-derivative samples below the rounding floor of the
/// second difference are taken as zero. Throws NonMonotone.
RegularityReport ko_condition_report(const CircleMapLift& t, const QuadraticSurd& alpha,
                                     double p = 2.0);

}  // namespace rigidity
