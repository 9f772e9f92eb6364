#pragma once

#include <numbers>
#include <string_view>

#include "pchain/errors.hpp"

namespace pchain {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr std::string_view kConstantsVersion = "CODATA-2018";

/// SI constants used throughout. Defaults are CODATA-2018 to 10 digits;
/// every field may be overridden for sensitivity studies.
struct PhysicalConstants {
  double e = 1.602176634e-19;     // elementary charge magnitude, C
  double m_e = 9.109383702e-31;   // electron mass, kg
  double hbar = 1.054571817e-34;  // J s
  double eps0 = 8.854187813e-12;  // F/m
  double g = 2.002319304;         // electron g-factor magnitude
  double k_B = 1.380649e-23;      // J/K

  void validate() const {
    if (!(e > 0 && m_e > 0 && hbar > 0 && eps0 > 0 && k_B > 0))
      throw InvalidInput("physical constants must be strictly positive");
    if (!(g >= 2.0 && g <= 2.01))
      throw InvalidInput("g-factor must lie in [2.0, 2.01]");
  }
};

constexpr double hz_to_angular(double hz) { return kTwoPi * hz; }
constexpr double angular_to_hz(double omega) { return omega / kTwoPi; }

}  // namespace pchain
