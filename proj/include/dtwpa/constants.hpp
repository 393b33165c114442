#pragma once

#include <cmath>
#include <numbers>

// CODATA 2018 exact SI values.
namespace dtwpa::phys {

inline constexpr double pi = std::numbers::pi;
inline constexpr double planck = 6.62607015e-34;            // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double boltzmann = 1.380649e-23;           // J/K
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge);  // Wb

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double db_to_power_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double power_ratio_to_db(double r) { return 10.0 * std::log10(r); }

}  // namespace dtwpa::phys
