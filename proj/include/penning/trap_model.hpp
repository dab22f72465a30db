#pragma once

#include "penning/constants.hpp"

namespace penning {

/// Ion species. Charge and mass in SI; the optical transition drives the
/// Doppler-cooling force and the photon-recoil kick size.
struct ParticleSpecies {
    double charge = constants::elementary_charge; // C, > 0 (positive ions only)
    double mass = 0.0;                            // kg
    double transition_wavelength = 280e-9;        // m
    double natural_linewidth = 0.0;               // angular s^-1

    static ParticleSpecies mg24();
};

/// Hyperbolic trap geometry. R^2 = r0^2 + 2 z0^2 sets the axial well depth
/// for a given ring voltage.
struct TrapGeometry {
    double ring_radius = 5e-3;           // r0, m
    double endcap_half_separation = 0.0; // z0, m; ideal trap: r0/sqrt(2)

    double r_squared() const {
        return ring_radius * ring_radius +
               2.0 * endcap_half_separation * endcap_half_separation;
    }

    static TrapGeometry ideal(double r0);
};

struct TrapFields {
    double magnetic_field = 1.0; // T, > 0
    double trap_voltage = 0.0;   // V, >= 0
};

/// The five motional frequencies, all angular (s^-1).
///   omega_c  = eB/m                   true cyclotron
///   omega_z  = sqrt(4 e V / (m R^2))  axial
///   omega_1  = sqrt(omega_c^2/4 - omega_z^2/2)
///   omega_c' = omega_c/2 + omega_1    modified cyclotron
///   omega_m  = omega_c/2 - omega_1    magnetron
/// Exact identities: omega_c' + omega_m = omega_c and
/// omega_c' * omega_m = omega_z^2 / 2.
struct ModeFrequencies {
    double omega_c = 0.0;
    double omega_z = 0.0;
    double omega_1 = 0.0;
    double omega_c_prime = 0.0;
    double omega_m = 0.0;
};

/// Throws UnstableTrapError (reporting the maximum stable voltage) when
/// omega_z^2/2 > omega_c^2/4.
ModeFrequencies derive_frequencies(const ParticleSpecies& species,
                                   const TrapGeometry& geometry,
                                   const TrapFields& fields);

/// Inverse of derive_frequencies in the voltage: the ring voltage at which
/// the magnetron frequency equals target_f_m (cyclic Hz). Throws
/// UnreachableError for target >= f_c/2.
double voltage_for_magnetron_frequency(const ParticleSpecies& species,
                                       const TrapGeometry& geometry,
                                       double b_tesla, double target_f_m);

} // namespace penning
