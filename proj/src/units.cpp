#include "bellsim/units.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <utility>

#include "bellsim/errors.hpp"

namespace bellsim::units {

namespace {

struct UnitEntry {
  std::string_view symbol;
  Dimension dimension;
  double multiplier;
  double divisor = 1.0;  // exact powers of ten keep "600 ps" == 600e-12
  double offset = 0.0;
};

constexpr std::array kUnits{
    UnitEntry{"s", Dimension::Time, 1.0},
    UnitEntry{"ms", Dimension::Time, 1.0, 1e3},
    UnitEntry{"us", Dimension::Time, 1.0, 1e6},
    UnitEntry{"µs", Dimension::Time, 1.0, 1e6},
    UnitEntry{"ns", Dimension::Time, 1.0, 1e9},
    UnitEntry{"ps", Dimension::Time, 1.0, 1e12},
    UnitEntry{"fs", Dimension::Time, 1.0, 1e15},
    UnitEntry{"min", Dimension::Time, 60.0},
    UnitEntry{"h", Dimension::Time, 3600.0},
    UnitEntry{"m", Dimension::Length, 1.0},
    UnitEntry{"km", Dimension::Length, 1e3},
    UnitEntry{"cm", Dimension::Length, 1.0, 1e2},
    UnitEntry{"mm", Dimension::Length, 1.0, 1e3},
    UnitEntry{"um", Dimension::Length, 1.0, 1e6},
    UnitEntry{"µm", Dimension::Length, 1.0, 1e6},
    UnitEntry{"nm", Dimension::Length, 1.0, 1e9},
    UnitEntry{"pm", Dimension::Length, 1.0, 1e12},
    UnitEntry{"kg", Dimension::Mass, 1.0},
    UnitEntry{"g", Dimension::Mass, 1.0, 1e3},
    UnitEntry{"mg", Dimension::Mass, 1.0, 1e6},
    UnitEntry{"ug", Dimension::Mass, 1.0, 1e9},
    UnitEntry{"m3", Dimension::Volume, 1.0},
    UnitEntry{"cm3", Dimension::Volume, 1.0, 1e6},
    UnitEntry{"mm3", Dimension::Volume, 1.0, 1e9},
    UnitEntry{"um3", Dimension::Volume, 1.0, 1e18},
    UnitEntry{"Hz", Dimension::Frequency, 1.0},
    UnitEntry{"kHz", Dimension::Frequency, 1e3},
    UnitEntry{"MHz", Dimension::Frequency, 1e6},
    UnitEntry{"GHz", Dimension::Frequency, 1e9},
    UnitEntry{"V", Dimension::Voltage, 1.0},
    UnitEntry{"mV", Dimension::Voltage, 1.0, 1e3},
    UnitEntry{"uV", Dimension::Voltage, 1.0, 1e6},
    UnitEntry{"dB", Dimension::Decibel, 1.0},
    UnitEntry{"rad", Dimension::Angle, 1.0},
    UnitEntry{"mrad", Dimension::Angle, 1.0, 1e3},
    UnitEntry{"deg", Dimension::Angle, 0.017453292519943295},
    UnitEntry{"K", Dimension::Temperature, 1.0},
    UnitEntry{"degC", Dimension::Temperature, 1.0, 1.0, 273.15},
    UnitEntry{"rad/K", Dimension::AnglePerTemperature, 1.0},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

const char* name(Dimension d) {
  switch (d) {
    case Dimension::Dimensionless: return "dimensionless";
    case Dimension::Time: return "time";
    case Dimension::Length: return "length";
    case Dimension::Mass: return "mass";
    case Dimension::Volume: return "volume";
    case Dimension::Frequency: return "frequency";
    case Dimension::Voltage: return "voltage";
    case Dimension::Decibel: return "loss";
    case Dimension::Angle: return "angle";
    case Dimension::Temperature: return "temperature";
    case Dimension::AnglePerTemperature: return "angle per temperature";
  }
  return "?";
}

const char* base_unit(Dimension d) {
  switch (d) {
    case Dimension::Dimensionless: return "";
    case Dimension::Time: return "s";
    case Dimension::Length: return "m";
    case Dimension::Mass: return "kg";
    case Dimension::Volume: return "m3";
    case Dimension::Frequency: return "Hz";
    case Dimension::Voltage: return "V";
    case Dimension::Decibel: return "dB";
    case Dimension::Angle: return "rad";
    case Dimension::Temperature: return "K";
    case Dimension::AnglePerTemperature: return "rad/K";
  }
  return "";
}

double parse_quantity(std::string_view text, Dimension d, const std::string& field) {
  text = trim(text);
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr == begin)
    throw ConfigError(field, "expected a number, got '" + std::string(text) + "'");
  if (!std::isfinite(value)) throw ConfigError(field, "value must be finite");
  const std::string_view unit = trim(std::string_view(ptr, static_cast<std::size_t>(end - ptr)));
  if (d == Dimension::Dimensionless) {
    if (!unit.empty())
      throw ConfigError(field, "dimensionless value takes no unit, got '" + std::string(unit) + "'");
    return value;
  }
  if (unit.empty())
    throw ConfigError(field, std::string("missing unit for ") + name(d) + " (e.g. '" +
                                 std::string(text) + " " + base_unit(d) + "')");
  if (ptr == end || (*ptr != ' ' && *ptr != '\t'))
    throw ConfigError(field, "separate the number and unit with a space");
  for (const auto& u : kUnits) {
    if (u.symbol != unit) continue;
    if (u.dimension != d)
      throw ConfigError(field, "unit '" + std::string(unit) + "' is a " + name(u.dimension) +
                                   ", expected " + name(d));
    return value * u.multiplier / u.divisor + u.offset;
  }
  throw ConfigError(field, "unknown unit '" + std::string(unit) + "'");
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string format_quantity(double value, Dimension d) {
  std::string s = format_double(value);
  if (d != Dimension::Dimensionless) {
    s += ' ';
    s += base_unit(d);
  }
  return s;
}

}  // namespace bellsim::units
