#include "bellsim/collapse.hpp"

#include <cmath>
#include <numbers>

#include "bellsim/errors.hpp"

namespace bellsim {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

void validate(const MovingMass& m) {
  if (!std::isfinite(m.mass) || !std::isfinite(m.volume) || !std::isfinite(m.displacement))
    throw InvalidValueError("moving mass fields must be finite");
  if (m.mass == 0.0 || m.displacement == 0.0)
    throw UndefinedCollapseError("zero mass or displacement: collapse time is infinite");
  if (m.mass < 0.0 || m.displacement < 0.0 || !(m.volume > 0.0))
    throw InvalidValueError("mass, volume and displacement must be > 0");
}

std::optional<std::string> density_warning(const MovingMass& m) {
  const double rho = m.mass / m.volume;
  if (rho < 10.0 || rho > 25000.0)
    return "implausible density " + std::to_string(rho) + " kg/m^3";
  return std::nullopt;
}

void validate(const PiezoStepResponse& r) {
  if (r.samples.empty()) throw InvalidValueError("step response needs at least one sample");
  double prev_t = 0.0;
  double prev_d = -INFINITY;
  for (const auto& [t, d] : r.samples) {
    if (!std::isfinite(t) || !std::isfinite(d)) throw InvalidValueError("non-finite sample");
    if (t < prev_t) throw InvalidValueError("step response times must be >= 0 and non-decreasing");
    if (d < prev_d) throw InvalidValueError("step response displacement must be non-decreasing");
    prev_t = t;
    prev_d = d;
  }
}

void validate(const FringeReadout& r) {
  if (!(r.laser_wavelength > 100e-9 && r.laser_wavelength < 10e-6))
    throw InvalidValueError("laser wavelength must lie in (100 nm, 10 um)");
  if (!positive_finite(r.peak_to_peak_signal))
    throw InvalidValueError("peak-to-peak signal must be > 0");
  if (!(r.observed_change >= 0.0 && r.observed_change <= r.peak_to_peak_signal))
    throw InvalidValueError("observed change must lie in [0, peak-to-peak]");
}

void validate(const GeometryLayout& g) {
  if (!positive_finite(g.fiber_length_a) || !positive_finite(g.fiber_length_b) ||
      !positive_finite(g.direct_distance))
    throw InvalidValueError("geometry lengths must be > 0");
  if (!(g.fiber_refractive_index >= 1.0))
    throw InvalidValueError("fiber refractive index must be >= 1");
}

double diosi_collapse_time(const MovingMass& m, const PhysicalConstants& k) {
  validate(m);
  return 3.0 * k.hbar * m.volume /
         (2.0 * std::numbers::pi * k.G * m.mass * m.mass * m.displacement * m.displacement);
}

double penrose_collapse_time(const MovingMass& m, const PhysicalConstants& k) {
  return diosi_collapse_time(m, k) / 2.0;
}

double displacement_from_fringe(const FringeReadout& r) {
  validate(r);
  // I ~ (1 + cos phi)/2 has slope Vpp/2 per radian at quadrature; a mirror
  // shift d changes the round-trip path by 2d, i.e. phi by 4 pi d / lambda.
  const double dphi = r.observed_change / (r.peak_to_peak_signal / 2.0);
  return dphi * r.laser_wavelength / (4.0 * std::numbers::pi);
}

double displacement_at(double t, const PiezoStepResponse& resp) {
  if (!(t >= 0.0)) throw InvalidValueError("time since step must be >= 0");
  validate(resp);
  double t0 = 0.0;
  double d0 = 0.0;
  const auto& s = resp.samples;
  if (s.front().first == 0.0) d0 = s.front().second;
  for (const auto& [t1, d1] : s) {
    if (t <= t1) {
      if (t1 == t0) return d1;
      return d0 + (d1 - d0) * (t - t0) / (t1 - t0);
    }
    t0 = t1;
    d0 = d1;
  }
  return s.back().second;
}

double time_to_reach(double target, const PiezoStepResponse& resp) {
  validate(resp);
  double t0 = 0.0;
  double d0 = 0.0;
  if (resp.samples.front().first == 0.0) d0 = resp.samples.front().second;
  if (target <= d0) return 0.0;
  for (const auto& [t1, d1] : resp.samples) {
    if (d1 >= target) {
      if (d1 == d0) return t0;
      return t0 + (target - d0) / (d1 - d0) * (t1 - t0);
    }
    t0 = t1;
    d0 = d1;
  }
  throw UnreachableDisplacementError("step response never reaches " + std::to_string(target) +
                                     " m (max " + std::to_string(resp.samples.back().second) +
                                     " m)");
}

TimingBudget measurement_time(double trigger_latency, const PiezoStepResponse& resp,
                              double target_d, const MovingMass& mass,
                              const PhysicalConstants& k) {
  if (!(trigger_latency >= 0.0)) throw InvalidValueError("trigger latency must be >= 0");
  MovingMass moved = mass;
  moved.displacement = target_d;
  TimingBudget b;
  b.trigger_latency = trigger_latency;
  b.collapse_time = diosi_collapse_time(moved, k);
  b.displacement_time = time_to_reach(target_d, resp);
  b.total = b.trigger_latency + b.displacement_time + b.collapse_time;
  return b;
}

SpacelikeResult spacelike_check(const TimingBudget& budget, const GeometryLayout& geo,
                                const PhysicalConstants& k) {
  validate(geo);
  SpacelikeResult r;
  r.light_travel_time = geo.direct_distance / k.c;
  r.margin = r.light_travel_time - budget.total;
  r.separated = r.margin > 0.0;
  return r;
}

namespace presets {

// 3 x 2 x 0.15 mm = 0.9 mm^3, written as the literal so the preset is exact.
MovingMass gold_mirror() { return {2e-6, 0.9e-9, 12.6e-9}; }

MovingMass mirror_and_piezo() {
  return {2e-6 + 140e-6, 3e-3 * 2e-3 * 0.15e-3 + 3e-3 * 3e-3 * 2e-3, 12.6e-9};
}

FringeReadout mirror_readout() { return {633e-9, 2.4, 0.3}; }

PiezoStepResponse measured_step_response() {
  return {{{0.0, 0.0}, {1e-6, 3e-9}, {3e-6, 8e-9}, {6e-6, 12.6e-9}, {12e-6, 18e-9}}, 4.0};
}

GeometryLayout geneva_geometry() { return {8.2e3, 10.7e3, 18.0e3, 1.468}; }

}  // namespace presets

}  // namespace bellsim
