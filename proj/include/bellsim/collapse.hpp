#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bellsim/constants.hpp"

namespace bellsim {

/// The object whose displacement terminates the measurement.
struct MovingMass {
  double mass = 0.0;          // kg
  double volume = 0.0;        // m^3
  double displacement = 0.0;  // m

  bool operator==(const MovingMass&) const = default;
};

/// Digitised mirror displacement after the piezo step.
struct PiezoStepResponse {
  std::vector<std::pair<double, double>> samples;  // (time since step s, displacement m)
  double step_voltage = 0.0;                        // V

  bool operator==(const PiezoStepResponse&) const = default;
};

/// Photodiode readout of the bulk Michelson that monitors the mirror.
struct FringeReadout {
  double laser_wavelength = 0.0;     // m
  double peak_to_peak_signal = 0.0;  // V
  double observed_change = 0.0;      // V

  bool operator==(const FringeReadout&) const = default;
};

/// t_M = trigger_latency + displacement_time + collapse_time.
struct TimingBudget {
  double trigger_latency = 0.0;
  double displacement_time = 0.0;
  double collapse_time = 0.0;
  double total = 0.0;

  bool operator==(const TimingBudget&) const = default;
};

struct GeometryLayout {
  double fiber_length_a = 0.0;  // m
  double fiber_length_b = 0.0;  // m
  double direct_distance = 0.0; // m, straight line between the stations
  double fiber_refractive_index = 1.0;

  bool operator==(const GeometryLayout&) const = default;
};

struct SpacelikeResult {
  bool separated = false;
  double light_travel_time = 0.0;  // s
  double margin = 0.0;             // s
};

void validate(const MovingMass& m);
void validate(const PiezoStepResponse& r);
void validate(const FringeReadout& r);
void validate(const GeometryLayout& g);

/// Density outside 10..25000 kg/m^3 yields a warning message.
std::optional<std::string> density_warning(const MovingMass& m);

/// t_D = 3 hbar V / (2 pi G m^2 d^2).
double diosi_collapse_time(const MovingMass& m, const PhysicalConstants& k = kCodata2018);

/// Penrose's criterion gives half the Diosi time.
double penrose_collapse_time(const MovingMass& m, const PhysicalConstants& k = kCodata2018);

/// Lower bound on mirror displacement from a photodiode voltage change,
/// assuming the change happened at quadrature (maximum slope).
double displacement_from_fringe(const FringeReadout& r);

/// Piecewise-linear interpolation; clamps after the last sample. An implicit
/// (0, 0) precedes the first sample when it starts later than t = 0.
double displacement_at(double t, const PiezoStepResponse& resp);

/// Earliest time the response reaches `target`; throws
/// UnreachableDisplacementError if it never does.
double time_to_reach(double target, const PiezoStepResponse& resp);

/// `mass` supplies mass and volume; its displacement is replaced by target_d.
TimingBudget measurement_time(double trigger_latency, const PiezoStepResponse& resp,
                              double target_d, const MovingMass& mass,
                              const PhysicalConstants& k = kCodata2018);

/// Vacuum light-cone test between the stations.
SpacelikeResult spacelike_check(const TimingBudget& budget, const GeometryLayout& geo,
                                const PhysicalConstants& k = kCodata2018);

namespace presets {

/// Gold mirror 3 x 2 x 0.15 mm, 2 mg, moved 12.6 nm.
MovingMass gold_mirror();
/// Mirror plus the 3 x 3 x 2 mm, 140 mg piezo block moving together.
MovingMass mirror_and_piezo();
/// Mirror readout: 0.3 V change on a 2.4 V peak-to-peak fringe at 633 nm.
FringeReadout mirror_readout();
/// Only the (6 us, 12.6 nm) point is measured; the rest are placeholders.
PiezoStepResponse measured_step_response();
/// Geneva source, Satigny 8.2 km and Jussy 10.7 km of fiber, 18.0 km apart.
GeometryLayout geneva_geometry();
inline constexpr double kTriggerLatency = 0.1e-6;  // s

}  // namespace presets

}  // namespace bellsim
