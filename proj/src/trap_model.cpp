#include "penning/trap_model.hpp"

#include <cmath>
#include <string>

#include "penning/errors.hpp"

namespace penning {

ParticleSpecies ParticleSpecies::mg24() {
    ParticleSpecies s;
    s.charge = constants::elementary_charge;
    s.mass = 23.985 * constants::atomic_mass_unit;
    s.transition_wavelength = 280e-9;
    s.natural_linewidth = constants::two_pi * 43e6;
    return s;
}

TrapGeometry TrapGeometry::ideal(double r0) {
    return TrapGeometry{r0, r0 / std::sqrt(2.0)};
}

ModeFrequencies derive_frequencies(const ParticleSpecies& species,
                                   const TrapGeometry& geometry,
                                   const TrapFields& fields) {
    ModeFrequencies f;
    f.omega_c = species.charge * fields.magnetic_field / species.mass;
    const double wz_sq =
        4.0 * species.charge * fields.trap_voltage / (species.mass * geometry.r_squared());
    f.omega_z = std::sqrt(wz_sq);

    const double w1_sq = f.omega_c * f.omega_c / 4.0 - wz_sq / 2.0;
    if (w1_sq < 0.0) {
        // V at which omega_1 = 0: omega_z^2/2 = omega_c^2/4.
        const double v_max = species.mass * geometry.r_squared() * f.omega_c * f.omega_c /
                             (8.0 * species.charge);
        throw UnstableTrapError(
            "trap voltage exceeds radial stability limit; maximum stable V = " +
                std::to_string(v_max),
            v_max);
    }
    f.omega_1 = std::sqrt(w1_sq);
    f.omega_c_prime = f.omega_c / 2.0 + f.omega_1;
    // Rationalized form: omega_c/2 - omega_1 cancels catastrophically for
    // small V, while (omega_z^2/2)/omega_c' keeps both algebraic identities
    // within a few ulp.
    f.omega_m = (f.omega_c_prime > 0.0) ? (wz_sq / 2.0) / f.omega_c_prime : 0.0;
    return f;
}

double voltage_for_magnetron_frequency(const ParticleSpecies& species,
                                       const TrapGeometry& geometry,
                                       double b_tesla, double target_f_m) {
    const double omega_c = species.charge * b_tesla / species.mass;
    const double omega_m = constants::two_pi * target_f_m;
    if (omega_m >= omega_c / 2.0) {
        throw UnreachableError("target magnetron frequency must be below f_c/2 = " +
                               std::to_string(omega_c / (2.0 * constants::two_pi)) + " Hz");
    }
    // omega_z^2 = 2 omega_m omega_c' = 2 omega_m (omega_c - omega_m), and
    // V = m R^2 omega_z^2 / (4 e).
    const double wz_sq = 2.0 * omega_m * (omega_c - omega_m);
    return species.mass * geometry.r_squared() * wz_sq / (4.0 * species.charge);
}

} // namespace penning
