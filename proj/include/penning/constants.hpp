#pragma once

// Physical constants, CODATA 2018. Kept in one table so every module and
// every test agrees on the same values.
namespace penning::constants {

inline constexpr double elementary_charge = 1.602176634e-19;   // C (exact)
inline constexpr double atomic_mass_unit  = 1.66053906660e-27; // kg
inline constexpr double planck_h          = 6.62607015e-34;    // J s (exact)
inline constexpr double hbar              = 1.054571817e-34;   // J s
inline constexpr double boltzmann         = 1.380649e-23;      // J/K (exact)
inline constexpr double speed_of_light    = 299792458.0;       // m/s (exact)
inline constexpr double epsilon0          = 8.8541878128e-12;  // F/m
inline constexpr double pi                = 3.14159265358979323846;
inline constexpr double two_pi            = 2.0 * pi;

// 1/(4 pi eps0)
inline constexpr double coulomb_k = 1.0 / (4.0 * pi * epsilon0);

} // namespace penning::constants
