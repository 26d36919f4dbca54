#include "bellsim/quantum.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bellsim/errors.hpp"

namespace bellsim {

void validate(const AnalyzerSetting& setting) {
  if (!std::isfinite(setting.phase)) throw InvalidValueError("analyzer phase must be finite");
  if (!(setting.path_length_difference > 0.0))
    throw InvalidValueError("analyzer path_length_difference must be > 0");
}

void validate(const CorrelationModel& model) {
  const double v = model.intrinsic_visibility;
  if (!(v >= 0.0 && v <= 1.0))
    throw InvalidValueError("intrinsic_visibility must lie in [0, 1], got " + std::to_string(v));
}

double combined_phase(const CorrelationModel& model, double phase_a, double phase_b) {
  return model.phase_convention == PhaseConvention::Sum ? phase_a + phase_b : phase_a - phase_b;
}

double correlation_coefficient(const CorrelationModel& model, const AnalyzerSetting& a,
                               const AnalyzerSetting& b) {
  validate(model);
  validate(a);
  validate(b);
  return model.intrinsic_visibility * std::cos(combined_phase(model, a.phase, b.phase));
}

double coincidence_probability(const CorrelationModel& model, const AnalyzerSetting& a,
                               const AnalyzerSetting& b, PortPair ports) {
  const double e = correlation_coefficient(model, a, b);
  return ports == PortPair::Same ? 0.5 * (1.0 + e) : 0.5 * (1.0 - e);
}

double chsh_s(double e11, double e12, double e21, double e22) {
  for (double e : {e11, e12, e21, e22}) {
    if (!(std::abs(e) <= 1.0))
      throw InvalidValueError("correlation coefficient outside [-1, 1]: " + std::to_string(e));
  }
  return std::abs(e11 + e12 + e21 - e22);
}

double s_from_visibility(double visibility) {
  if (!(visibility >= 0.0 && visibility <= 1.0))
    throw InvalidValueError("visibility must lie in [0, 1], got " + std::to_string(visibility));
  return 2.0 * std::numbers::sqrt2 * visibility;
}

ChshSettings optimal_chsh_settings(PhaseConvention convention) {
  using std::numbers::pi;
  ChshSettings s{{0.0, pi / 2.0}, {-pi / 4.0, pi / 4.0}};
  // With the difference convention, negating B's phases gives the same four
  // combined phases.
  if (convention == PhaseConvention::Difference) s.phase_b = {pi / 4.0, -pi / 4.0};
  return s;
}

double chsh_from_model(const CorrelationModel& model, const ChshSettings& settings,
                       double path_length_difference) {
  auto e = [&](int i, int j) {
    return correlation_coefficient(
        model, AnalyzerSetting{settings.phase_a[i], path_length_difference, Station::A},
        AnalyzerSetting{settings.phase_b[j], path_length_difference, Station::B});
  };
  return chsh_s(e(0, 0), e(0, 1), e(1, 0), e(1, 1));
}

}  // namespace bellsim
