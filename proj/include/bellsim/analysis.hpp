#pragma once

#include <cstdint>
#include <span>

#include "bellsim/apparatus.hpp"

namespace bellsim {

/// C(phi) = offset * (1 + V cos(phi - phase0)). The phase axis comes from the
/// schedule, so angular_rate is fixed at 1.
struct FringeFit {
  double visibility = 0.0;
  double visibility_error = 0.0;
  double offset = 0.0;     // mean level A
  double amplitude = 0.0;  // A * V
  double phase0 = 0.0;
  double angular_rate = 1.0;
  double chi2 = 0.0;
  int dof = 0;
  bool clipped = false;  // raw estimate exceeded 1
};

/// Weighted least squares with Poisson variances, iterated so the weights
/// follow the fitted model rather than the (noisy) counts. `extra_variance`
/// is added to every point's variance; it carries the Poisson noise of
/// counts that were subtracted before fitting.
FringeFit fit_fringe(std::span<const double> phases, std::span<const double> counts,
                     double extra_variance = 0.0);
FringeFit fit_fringe(const FringeScan& scan);

struct VisibilityEstimate {
  double value = 0.0;
  double error = 0.0;
};

/// V_net = V_raw * total / (total - accidental); errors scale the same way.
VisibilityEstimate subtract_accidentals(const VisibilityEstimate& raw, double total_rate,
                                        double accidental_rate);
VisibilityEstimate subtract_accidentals(const FringeFit& fit, double total_rate,
                                        double accidental_rate);

/// Inverse of subtract_accidentals: dilutes V by adding flat counts back.
VisibilityEstimate add_accidentals(const VisibilityEstimate& net, double total_rate,
                                   double accidental_rate);

/// Removes `accidentals_per_bin` from every bin and refits.
FringeFit fit_fringe_net(const FringeScan& scan, double accidentals_per_bin);

/// Parametric bootstrap of the visibility error: each bin resampled as
/// Poisson(fitted model).
double bootstrap_visibility_error(const FringeScan& scan, int resamples, std::uint64_t seed);

struct BellResult {
  double v_raw = 0.0, v_raw_err = 0.0;
  double v_net = 0.0, v_net_err = 0.0;
  double v_net_ratio = 0.0, v_net_ratio_err = 0.0;  // aggregate ratio formula
  double s_raw = 0.0, s_raw_err = 0.0;
  double s_net = 0.0, s_net_err = 0.0;
  double sigma_violation_raw = 0.0, sigma_violation_net = 0.0;
  double total_rate = 0.0;       // coincidences per minute
  double accidental_rate = 0.0;  // per minute
};

struct BellFigures {
  double s = 0.0;
  double s_err = 0.0;
  double sigma_violation = 0.0;
};

/// S = 2 sqrt(2) V, sigma_S = 2 sqrt(2) sigma_V, violation = (S - 2) / sigma_S.
BellFigures bell_figures(const VisibilityEstimate& v);

BellResult bell_report(const FringeFit& raw, const FringeFit& net, double total_rate,
                       double accidental_rate);

/// Full analysis of a scan with a known flat accidental rate (per minute).
struct AnalysisResult {
  FringeFit raw;
  FringeFit net;
  BellResult bell;
};

AnalysisResult analyze(const FringeScan& scan, double accidental_rate);

}  // namespace bellsim
