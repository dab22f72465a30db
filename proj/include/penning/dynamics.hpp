#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "penning/trap_model.hpp"
#include "penning/vec3.hpp"

namespace penning {

struct IonState {
    Vec3 position; // m
    Vec3 velocity; // m/s
};

/// Doppler-cooling beam: propagates along `direction` (unit vector in the
/// radial plane), displaced by `offset` along z x direction, Gaussian waist
/// `waist`. Saturation s0 is the on-axis peak value.
struct LaserParams {
    Vec3 direction{1.0, 0.0, 0.0};
    double detuning = 0.0;   // angular s^-1, red detuning is negative
    double s0 = 1.0;
    double waist = 50e-6;    // m
    double offset = 0.0;     // m, perpendicular to the beam in the radial plane
    double wavelength = 280e-9;
};

/// Azimuthal quadrupole drive from the segmented ring:
/// Phi = kappa V_ax (x^2 - y^2)/r0^2 cos(omega_d t + phase).
struct AxialisationDrive {
    double amplitude_v = 0.0;
    double omega_d = 0.0; // angular s^-1
    double phase = 0.0;
    double kappa = 0.5;   // electrode geometry factor
};

/// Weak uniform rf field for the damping-rate probe.
struct DipoleProbe {
    double amplitude = 0.0; // V/m
    double omega = 0.0;     // angular s^-1
    double phase = 0.0;
    Vec3 direction{1.0, 0.0, 0.0};
};

enum class ScatteringMode { MonteCarlo, ContinuousDrag };

struct SimConfig {
    double dt = 0.0;       // s; must satisfy dt <= T_c'/50
    double duration = 0.0; // s
    std::uint64_t rng_seed = 1;
    double detection_efficiency = 1e-3; // fraction of scatters detected
    bool coulomb_enabled = false;
    ScatteringMode scattering_mode = ScatteringMode::MonteCarlo;
    int trajectory_stride = 1;     // record every n-th step
    double background_rate = 0.0;  // scattered-light photons, s^-1
};

struct PhotonRecord {
    std::vector<double> timestamps; // s, strictly increasing
    double reference_omega = 0.0;   // phase reference of the rf drive
    double reference_phase = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<IonState>> states; // [sample][ion]
};

struct Scene {
    ParticleSpecies species;
    TrapGeometry geometry;
    TrapFields fields;
    std::optional<LaserParams> laser;
    std::optional<AxialisationDrive> drive;
    std::optional<DipoleProbe> probe;
    std::vector<IonState> ions;
};

struct SimResult {
    Trajectory trajectory;
    PhotonRecord photons;
    std::uint64_t scatter_events = 0;
    double rate_integral = 0.0; // integral of R dt summed over ions
};

/// Static trap field E = (2V/R^2)(x, y, -2z).
Vec3 trap_field(const Vec3& position, const TrapFields& fields, const TrapGeometry& geometry);

/// E = -(2 kappa V_ax / r0^2) (x, -y, 0) cos(omega_d t + phase).
Vec3 axialisation_field(const Vec3& position, const AxialisationDrive& drive,
                        const TrapGeometry& geometry, double t);

/// Two-level Lorentzian scattering rate with Gaussian beam envelope,
/// R = (G/2) s / (1 + s + (2(detuning - k.v)/G)^2), s = s0 exp(-2 rho^2/w^2).
double scattering_rate(const IonState& state, const LaserParams& laser,
                       const ParticleSpecies& species);

/// Mean radiation-pressure force hbar k R along the beam (no recoil noise).
Vec3 continuous_drag_force(const IonState& state, const LaserParams& laser,
                           const ParticleSpecies& species);

/// Pairwise Coulomb repulsion; throws OverlapError below 1 nm separation.
std::vector<Vec3> coulomb_forces(const std::vector<IonState>& states, double charge);

/// One fixed-step update of all ions: half electric kick, exact magnetic
/// rotation, half electric kick, drift. Deterministic forces only (the
/// Monte-Carlo scattering kicks live in run()). Fields are evaluated at the
/// pre-step positions and mid-step time.
void step_ions(std::vector<IonState>& states, const Scene& scene, const SimConfig& config,
               double t);

/// Full run; identical (seed, config, scene) gives bit-identical output.
/// Throws IonEscapedError with timestamp when an ion leaves |r| > r0.
SimResult run(const SimConfig& config, const Scene& scene);

/// Instantaneous cyclotron/magnetron amplitude decomposition of the radial
/// motion: u = x + iy = A_c e^{-i w_c' t} + A_m e^{-i w_m t}.
struct RadialModes {
    std::complex<double> a_c;
    std::complex<double> a_m;
    double r_c = 0.0;
    double r_m = 0.0;
};

RadialModes radial_mode_amplitudes(const IonState& state, const ModeFrequencies& freqs);

/// Kinetic energy + charge * static trap potential.
double total_energy(const IonState& state, const ParticleSpecies& species,
                    const TrapFields& fields, const TrapGeometry& geometry);

} // namespace penning
