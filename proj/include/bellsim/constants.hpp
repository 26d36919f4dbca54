#pragma once

namespace bellsim {

/// CODATA 2018 values. Exact where the SI defines them.
struct PhysicalConstants {
  double hbar;  // J s
  double G;     // m^3 kg^-1 s^-2
  double c;     // m/s
};

inline constexpr PhysicalConstants kCodata2018{
    1.054571817e-34,
    6.67430e-11,
    299792458.0,
};

}  // namespace bellsim
