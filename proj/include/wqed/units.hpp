// units.hpp: Physical constants and unit conversions
//
// Internal units: angular frequencies and rates in rad/ns, lengths in mm,
// velocities in mm/ns. External quantities carry their unit in the name
// (GHz, MHz, m/s, W, dBm).

#pragma once

#include <cmath>
#include <numbers>

namespace wqed::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA exact values (SI).
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double planck = 6.62607015e-34;             // J s
inline constexpr double hbar = planck / two_pi;              // J s

// cycles/ns -> rad/ns
inline constexpr double ghz_to_angular(double f_ghz) { return two_pi * f_ghz; }
inline constexpr double angular_to_ghz(double w) { return w / two_pi; }
inline constexpr double mhz_to_angular(double f_mhz) { return two_pi * f_mhz * 1e-3; }
inline constexpr double angular_to_mhz(double w) { return w / two_pi * 1e3; }

// 1 m/s = 1e-6 mm/ns
inline constexpr double mps_to_mm_per_ns(double v) { return v * 1e-6; }
inline constexpr double mm_per_ns_to_mps(double v) { return v * 1e6; }

// rad/s <-> rad/ns
inline constexpr double per_second_to_per_ns(double w) { return w * 1e-9; }
inline constexpr double per_ns_to_per_second(double w) { return w * 1e9; }

inline double dbm_to_watts(double p_dbm) { return 1e-3 * std::pow(10.0, p_dbm / 10.0); }
inline double watts_to_dbm(double p_w) { return 10.0 * std::log10(p_w / 1e-3); }

} // namespace wqed::units
