#pragma once

#include <array>
#include <cstdint>

namespace bellsim {

enum class Station : std::uint8_t { A, B };

/// How the two analyzer phases combine into the fringe argument.
enum class PhaseConvention : std::uint8_t { Sum, Difference };

enum class PortPair : std::uint8_t { Same, Different };

/// One analyzer (unbalanced interferometer) setting.
struct AnalyzerSetting {
  double phase = 0.0;                   // rad
  double path_length_difference = 0.0;  // m, optical
  Station station = Station::A;

  bool operator==(const AnalyzerSetting&) const = default;
};

/// Post-selected two-photon correlation: E = V cos(delta).
struct CorrelationModel {
  double intrinsic_visibility = 1.0;
  PhaseConvention phase_convention = PhaseConvention::Sum;

  bool operator==(const CorrelationModel&) const = default;
};

// Throws InvalidValueError when an invariant of the type is violated.
void validate(const AnalyzerSetting& setting);
void validate(const CorrelationModel& model);

/// Combined fringe phase of the two settings under the model's convention.
double combined_phase(const CorrelationModel& model, double phase_a, double phase_b);

/// E(a, b) = V cos(delta_a (+/-) delta_b).
double correlation_coefficient(const CorrelationModel& model, const AnalyzerSetting& a,
                               const AnalyzerSetting& b);

/// Probability that a post-selected (short-short or long-long) pair leaves
/// through the same (or different) output ports: (1 +/- E) / 2.
double coincidence_probability(const CorrelationModel& model, const AnalyzerSetting& a,
                               const AnalyzerSetting& b, PortPair ports);

/// S = |E11 + E12 + E21 - E22|. Each |E| must be <= 1.
double chsh_s(double e11, double e12, double e21, double e22);

/// S = 2 sqrt(2) V for sinusoidal correlations.
double s_from_visibility(double visibility);

/// Analyzer phases that maximise S for E = V cos(sum):
/// A in {0, pi/2}, B in {-pi/4, pi/4}.
struct ChshSettings {
  std::array<double, 2> phase_a;
  std::array<double, 2> phase_b;
};
ChshSettings optimal_chsh_settings(PhaseConvention convention = PhaseConvention::Sum);

/// S evaluated from correlation_coefficient at the given settings.
double chsh_from_model(const CorrelationModel& model, const ChshSettings& settings,
                       double path_length_difference);

}  // namespace bellsim
