#include "bellsim/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bellsim/errors.hpp"
#include "bellsim/quantum.hpp"

namespace bellsim {

namespace {

constexpr double kTwoRootTwo = 2.0 * std::numbers::sqrt2;

// Linear model c0 + a cos(phi) + b sin(phi); returns parameters and covariance.
struct LinearFit {
  Eigen::Vector3d beta;
  Eigen::Matrix3d cov;
  double chi2;
};

LinearFit solve_weighted(std::span<const double> phases, std::span<const double> counts,
                         const std::vector<double>& variance) {
  Eigen::Matrix3d xtwx = Eigen::Matrix3d::Zero();
  Eigen::Vector3d xtwy = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const Eigen::Vector3d x(1.0, std::cos(phases[i]), std::sin(phases[i]));
    const double w = 1.0 / variance[i];
    xtwx += w * x * x.transpose();
    xtwy += w * counts[i] * x;
  }
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(xtwx);
  if (!lu.isInvertible()) throw DegenerateFitError("fringe fit is singular");
  LinearFit f;
  f.beta = lu.solve(xtwy);
  f.cov = lu.inverse();
  f.chi2 = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double m = f.beta[0] + f.beta[1] * std::cos(phases[i]) + f.beta[2] * std::sin(phases[i]);
    f.chi2 += (counts[i] - m) * (counts[i] - m) / variance[i];
  }
  return f;
}

}  // namespace

FringeFit fit_fringe(std::span<const double> phases, std::span<const double> counts,
                     double extra_variance) {
  if (phases.size() != counts.size())
    throw InvalidValueError("phases and counts differ in length");
  if (phases.size() < 8)
    throw InsufficientSpanError("fringe fit needs >= 8 bins, got " +
                                std::to_string(phases.size()));
  const auto [lo, hi] = std::minmax_element(phases.begin(), phases.end());
  if (!(*hi - *lo >= 2.0 * std::numbers::pi))
    throw InsufficientSpanError("scan covers less than one fringe period");
  double sum = 0.0;
  for (double c : counts) sum += c;
  if (!(sum > 0.0)) throw DegenerateFitError("no coincidences: fringe amplitude undefined");

  // Start from the observed counts, then reweight with the model prediction.
  std::vector<double> variance(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    variance[i] = std::max(counts[i] + extra_variance, 1.0);
  LinearFit lf = solve_weighted(phases, counts, variance);
  for (int iter = 0; iter < 50; ++iter) {
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const double m =
          lf.beta[0] + lf.beta[1] * std::cos(phases[i]) + lf.beta[2] * std::sin(phases[i]);
      variance[i] = std::max(m + extra_variance, 1.0);
    }
    const LinearFit next = solve_weighted(phases, counts, variance);
    const double change = (next.beta - lf.beta).norm();
    lf = next;
    if (change <= 1e-12 * std::max(1.0, lf.beta.norm())) break;
  }

  const double c0 = lf.beta[0];
  if (!(c0 > 1e-12 * sum / static_cast<double>(counts.size())))
    throw DegenerateFitError("fitted mean level is not positive");
  const double a = lf.beta[1];
  const double b = lf.beta[2];
  const double r = std::hypot(a, b);

  FringeFit fit;
  fit.offset = c0;
  fit.amplitude = r;
  fit.phase0 = std::atan2(b, a);
  fit.visibility = r / c0;
  Eigen::Vector3d grad;
  if (r > 0.0)
    grad = Eigen::Vector3d(-r / (c0 * c0), a / (c0 * r), b / (c0 * r));
  else
    grad = Eigen::Vector3d(0.0, 1.0 / c0, 0.0);
  fit.visibility_error = std::sqrt(std::max(grad.dot(lf.cov * grad), 0.0));
  if (!(fit.visibility_error > 0.0))
    fit.visibility_error = std::numeric_limits<double>::min();
  fit.chi2 = lf.chi2;
  fit.dof = static_cast<int>(counts.size()) - 3;
  if (fit.visibility > 1.0) {
    fit.visibility = 1.0;
    fit.clipped = true;
  }
  return fit;
}

FringeFit fit_fringe(const FringeScan& scan) {
  std::vector<double> phases, counts;
  for (const auto& b : scan.bins) {
    phases.push_back(b.phase);
    counts.push_back(static_cast<double>(b.coincidences));
  }
  return fit_fringe(phases, counts);
}

FringeFit fit_fringe_net(const FringeScan& scan, double accidentals_per_bin) {
  if (!(accidentals_per_bin >= 0.0)) throw InvalidValueError("accidentals must be >= 0");
  std::vector<double> phases, counts;
  for (const auto& b : scan.bins) {
    phases.push_back(b.phase);
    counts.push_back(static_cast<double>(b.coincidences) - accidentals_per_bin);
  }
  return fit_fringe(phases, counts, accidentals_per_bin);
}

VisibilityEstimate subtract_accidentals(const VisibilityEstimate& raw, double total_rate,
                                        double accidental_rate) {
  if (!(accidental_rate >= 0.0)) throw InvalidValueError("accidental rate must be >= 0");
  if (!(accidental_rate < total_rate))
    throw InvalidValueError("accidental rate must be below the total coincidence rate");
  const double scale = total_rate / (total_rate - accidental_rate);
  return {raw.value * scale, raw.error * scale};
}

VisibilityEstimate subtract_accidentals(const FringeFit& fit, double total_rate,
                                        double accidental_rate) {
  return subtract_accidentals(VisibilityEstimate{fit.visibility, fit.visibility_error},
                              total_rate, accidental_rate);
}

VisibilityEstimate add_accidentals(const VisibilityEstimate& net, double total_rate,
                                   double accidental_rate) {
  if (!(accidental_rate >= 0.0 && accidental_rate < total_rate))
    throw InvalidValueError("accidental rate must lie in [0, total)");
  const double scale = (total_rate - accidental_rate) / total_rate;
  return {net.value * scale, net.error * scale};
}

double bootstrap_visibility_error(const FringeScan& scan, int resamples, std::uint64_t seed) {
  const FringeFit base = fit_fringe(scan);
  Rng rng = make_rng(seed, 0x626f6f74);
  std::vector<double> phases, counts(scan.bins.size());
  for (const auto& b : scan.bins) phases.push_back(b.phase);
  double s1 = 0.0, s2 = 0.0;
  int n = 0;
  for (int k = 0; k < resamples; ++k) {
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const double m = base.offset + base.amplitude * std::cos(phases[i] - base.phase0);
      counts[i] = m > 0.0 ? static_cast<double>(std::poisson_distribution<long>(m)(rng)) : 0.0;
    }
    try {
      const double v = fit_fringe(phases, counts).visibility;
      s1 += v;
      s2 += v * v;
      ++n;
    } catch (const DegenerateFitError&) {
    }
  }
  if (n < 2) throw DegenerateFitError("bootstrap produced too few valid fits");
  const double mean = s1 / n;
  return std::sqrt(std::max(s2 / n - mean * mean, 0.0) * n / (n - 1));
}

BellFigures bell_figures(const VisibilityEstimate& v) {
  BellFigures f;
  f.s = s_from_visibility(std::clamp(v.value, 0.0, 1.0));
  f.s_err = kTwoRootTwo * v.error;
  f.sigma_violation = f.s_err > 0.0 ? (f.s - 2.0) / f.s_err : 0.0;
  return f;
}

BellResult bell_report(const FringeFit& raw, const FringeFit& net, double total_rate,
                       double accidental_rate) {
  BellResult r;
  r.v_raw = raw.visibility;
  r.v_raw_err = raw.visibility_error;
  r.v_net = net.visibility;
  r.v_net_err = net.visibility_error;
  r.total_rate = total_rate;
  r.accidental_rate = accidental_rate;
  if (accidental_rate < total_rate) {
    const auto ratio = subtract_accidentals(raw, total_rate, accidental_rate);
    r.v_net_ratio = ratio.value;
    r.v_net_ratio_err = ratio.error;
  }
  const auto fr = bell_figures({r.v_raw, r.v_raw_err});
  const auto fn = bell_figures({r.v_net, r.v_net_err});
  r.s_raw = fr.s;
  r.s_raw_err = fr.s_err;
  r.sigma_violation_raw = fr.sigma_violation;
  r.s_net = fn.s;
  r.s_net_err = fn.s_err;
  r.sigma_violation_net = fn.sigma_violation;
  return r;
}

AnalysisResult analyze(const FringeScan& scan, double accidental_rate) {
  if (!(scan.bin_width > 0.0)) throw InvalidValueError("bin width must be > 0");
  AnalysisResult out;
  out.raw = fit_fringe(scan);
  const double minutes = scan.bin_width / 60.0;
  double total = 0.0;
  for (const auto& b : scan.bins) total += static_cast<double>(b.coincidences);
  const double total_rate = total / (minutes * static_cast<double>(scan.bins.size()));
  if (!(accidental_rate < total_rate))
    throw InvalidValueError("accidental rate must be below the total coincidence rate");
  out.net = fit_fringe_net(scan, accidental_rate * minutes);
  out.bell = bell_report(out.raw, out.net, total_rate, accidental_rate);
  return out;
}

}  // namespace bellsim
