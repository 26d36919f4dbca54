#pragma once

#include <string>
#include <string_view>

namespace bellsim::units {

enum class Dimension {
  Dimensionless,
  Time,
  Length,
  Mass,
  Volume,
  Frequency,
  Voltage,
  Decibel,
  Angle,
  Temperature,
  AnglePerTemperature,
};

const char* name(Dimension d);

/// SI symbol used when writing values back out.
const char* base_unit(Dimension d);

/// Parses "<number> <unit>" (or a bare number for Dimensionless) into SI
/// base units. Unknown units, units of the wrong dimension, trailing text
/// and missing units all throw ConfigError naming `field`.
double parse_quantity(std::string_view text, Dimension d, const std::string& field);

/// Shortest text that parses back to exactly `value`, in base units.
std::string format_quantity(double value, Dimension d);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace bellsim::units
