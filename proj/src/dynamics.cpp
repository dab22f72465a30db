#include "penning/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "penning/errors.hpp"

namespace penning {

Vec3 trap_field(const Vec3& position, const TrapFields& fields, const TrapGeometry& geometry) {
    const double c = 2.0 * fields.trap_voltage / geometry.r_squared();
    return {c * position.x, c * position.y, -2.0 * c * position.z};
}

Vec3 axialisation_field(const Vec3& position, const AxialisationDrive& drive,
                        const TrapGeometry& geometry, double t) {
    const double r0 = geometry.ring_radius;
    const double c = -2.0 * drive.kappa * drive.amplitude_v / (r0 * r0) *
                     std::cos(drive.omega_d * t + drive.phase);
    return {c * position.x, -c * position.y, 0.0};
}

namespace {

// Perpendicular distance from the beam axis (line through offset * (z x dir)
// along dir).
double beam_distance_sq(const Vec3& pos, const LaserParams& laser) {
    const Vec3 n = cross(Vec3{0.0, 0.0, 1.0}, laser.direction);
    const Vec3 rel = pos - laser.offset * n;
    const Vec3 perp = rel - dot(rel, laser.direction) * laser.direction;
    return norm_sq(perp);
}

double saturation_at(const Vec3& pos, const LaserParams& laser) {
    return laser.s0 * std::exp(-2.0 * beam_distance_sq(pos, laser) / (laser.waist * laser.waist));
}

} // namespace

double scattering_rate(const IonState& state, const LaserParams& laser,
                       const ParticleSpecies& species) {
    const double gamma = species.natural_linewidth;
    const double s = saturation_at(state.position, laser);
    const double k = constants::two_pi / laser.wavelength;
    const double doppler = laser.detuning - k * dot(laser.direction, state.velocity);
    const double l = 2.0 * doppler / gamma;
    return 0.5 * gamma * s / (1.0 + s + l * l);
}

Vec3 continuous_drag_force(const IonState& state, const LaserParams& laser,
                           const ParticleSpecies& species) {
    const double hk = constants::planck_h / laser.wavelength;
    return hk * scattering_rate(state, laser, species) * laser.direction;
}

std::vector<Vec3> coulomb_forces(const std::vector<IonState>& states, double charge) {
    const std::size_t n = states.size();
    std::vector<Vec3> forces(n);
    const double kq2 = constants::coulomb_k * charge * charge;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const Vec3 d = states[i].position - states[j].position;
            const double r2 = norm_sq(d);
            if (r2 < 1e-18) throw OverlapError("ion pair closer than 1 nm");
            const double inv_r3 = 1.0 / (r2 * std::sqrt(r2));
            const Vec3 f = (kq2 * inv_r3) * d;
            forces[i] += f;
            forces[j] -= f;
        }
    }
    return forces;
}

namespace {

struct StepContext {
    double charge_over_mass;
    double cos_rot, sin_rot; // exact cyclotron rotation over dt
};

Vec3 electric_field(const Vec3& pos, const Scene& scene, double t) {
    Vec3 e = trap_field(pos, scene.fields, scene.geometry);
    if (scene.drive && scene.drive->amplitude_v != 0.0)
        e += axialisation_field(pos, *scene.drive, scene.geometry, t);
    if (scene.probe && scene.probe->amplitude != 0.0)
        e += scene.probe->amplitude * std::cos(scene.probe->omega * t + scene.probe->phase) *
             scene.probe->direction;
    return e;
}

void advance(std::vector<IonState>& states, const Scene& scene, const SimConfig& config,
             double t, const StepContext& ctx) {
    const double dt = config.dt;
    const double t_mid = t + 0.5 * dt;
    const double inv_mass = 1.0 / scene.species.mass;

    std::vector<Vec3> coulomb;
    if (config.coulomb_enabled && states.size() > 1)
        coulomb = coulomb_forces(states, scene.species.charge);

    for (std::size_t i = 0; i < states.size(); ++i) {
        IonState& ion = states[i];
        Vec3 accel = ctx.charge_over_mass * electric_field(ion.position, scene, t_mid);
        if (!coulomb.empty()) accel += inv_mass * coulomb[i];
        if (scene.laser && config.scattering_mode == ScatteringMode::ContinuousDrag)
            accel += inv_mass * continuous_drag_force(ion, *scene.laser, scene.species);

        ion.velocity += (0.5 * dt) * accel;
        const double vx = ion.velocity.x, vy = ion.velocity.y;
        ion.velocity.x = ctx.cos_rot * vx + ctx.sin_rot * vy;
        ion.velocity.y = -ctx.sin_rot * vx + ctx.cos_rot * vy;
        ion.velocity += (0.5 * dt) * accel;
        ion.position += dt * ion.velocity;
    }
}

void check_escape(const std::vector<IonState>& states, const Scene& scene, double t) {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (norm_sq(states[i].position) >
            scene.geometry.ring_radius * scene.geometry.ring_radius)
            throw IonEscapedError("ion " + std::to_string(i) + " escaped at t = " +
                                      std::to_string(t) + " s",
                                  t, static_cast<int>(i));
    }
}

} // namespace

void step_ions(std::vector<IonState>& states, const Scene& scene, const SimConfig& config,
               double t) {
    StepContext ctx;
    ctx.charge_over_mass = scene.species.charge / scene.species.mass;
    const double omega_c = ctx.charge_over_mass * scene.fields.magnetic_field;
    ctx.cos_rot = std::cos(omega_c * config.dt);
    ctx.sin_rot = std::sin(omega_c * config.dt);
    advance(states, scene, config, t, ctx);
    check_escape(states, scene, t + config.dt);
}

SimResult run(const SimConfig& config, const Scene& scene) {
    if (config.dt <= 0.0 || config.duration < 0.0)
        throw ConfigError("sim.dt_s and sim.duration_s must be positive");
    if (config.detection_efficiency < 0.0 || config.detection_efficiency > 1.0)
        throw ConfigError("sim.detection_efficiency must lie in [0, 1]");

    const ModeFrequencies freqs =
        derive_frequencies(scene.species, scene.geometry, scene.fields);
    if (freqs.omega_c_prime > 0.0) {
        const double t_cp = constants::two_pi / freqs.omega_c_prime;
        if (config.dt > t_cp / 50.0)
            throw ConfigError("sim.dt_s too coarse: need dt <= T_c'/50 = " +
                              std::to_string(t_cp / 50.0) + " s");
    }

    StepContext ctx;
    ctx.charge_over_mass = scene.species.charge / scene.species.mass;
    const double omega_c = ctx.charge_over_mass * scene.fields.magnetic_field;
    ctx.cos_rot = std::cos(omega_c * config.dt);
    ctx.sin_rot = std::sin(omega_c * config.dt);

    // Independent streams: detection thinning must not perturb the dynamics,
    // so it draws from its own generator.
    std::mt19937_64 rng_dyn(config.rng_seed);
    std::mt19937_64 rng_det(config.rng_seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    const double hk_over_m = constants::planck_h /
                             (scene.laser ? scene.laser->wavelength : 1.0) /
                             scene.species.mass;
    const bool monte_carlo = scene.laser && config.scattering_mode == ScatteringMode::MonteCarlo;

    const auto n_steps = static_cast<std::uint64_t>(std::llround(config.duration / config.dt));
    const int stride = std::max(1, config.trajectory_stride);

    SimResult result;
    result.photons.reference_omega =
        scene.probe ? scene.probe->omega : (scene.drive ? scene.drive->omega_d : 0.0);
    result.photons.reference_phase =
        scene.probe ? scene.probe->phase : (scene.drive ? scene.drive->phase : 0.0);

    std::vector<IonState> states = scene.ions;
    std::vector<double> step_photons;

    auto record = [&](double t) {
        result.trajectory.times.push_back(t);
        result.trajectory.states.push_back(states);
    };
    record(0.0);

    double last_ts = -1.0;
    for (std::uint64_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * config.dt;
        advance(states, scene, config, t, ctx);
        check_escape(states, scene, t + config.dt);

        if (monte_carlo) {
            step_photons.clear();
            for (auto& ion : states) {
                const double rate = scattering_rate(ion, *scene.laser, scene.species);
                result.rate_integral += rate * config.dt;
                if (rate <= 0.0) continue;
                std::poisson_distribution<int> n_scatter(rate * config.dt);
                const int events = n_scatter(rng_dyn);
                for (int ev = 0; ev < events; ++ev) {
                    // Absorption along the beam plus isotropic re-emission.
                    const double cos_th = 2.0 * uniform(rng_dyn) - 1.0;
                    const double sin_th = std::sqrt(std::max(0.0, 1.0 - cos_th * cos_th));
                    const double phi = constants::two_pi * uniform(rng_dyn);
                    const Vec3 recoil{sin_th * std::cos(phi), sin_th * std::sin(phi), cos_th};
                    ion.velocity += hk_over_m * (scene.laser->direction + recoil);
                    ++result.scatter_events;
                    if (config.detection_efficiency > 0.0 &&
                        uniform(rng_det) < config.detection_efficiency)
                        step_photons.push_back(t + uniform(rng_det) * config.dt);
                }
            }
            if (!step_photons.empty()) {
                std::sort(step_photons.begin(), step_photons.end());
                for (double ts : step_photons) {
                    if (ts <= last_ts) ts = std::nextafter(last_ts, 1e300);
                    result.photons.timestamps.push_back(ts);
                    last_ts = ts;
                }
            }
        } else if (scene.laser) {
            for (const auto& ion : states)
                result.rate_integral +=
                    scattering_rate(ion, *scene.laser, scene.species) * config.dt;
        }

        if ((n + 1) % static_cast<std::uint64_t>(stride) == 0)
            record(static_cast<double>(n + 1) * config.dt);
    }

    if (config.background_rate > 0.0 && config.duration > 0.0) {
        // Independent homogeneous stream of scattered-light counts, merged in.
        std::exponential_distribution<double> gap(config.background_rate);
        std::vector<double> bg;
        for (double t = gap(rng_det); t < config.duration; t += gap(rng_det))
            bg.push_back(t);
        std::vector<double> merged;
        merged.reserve(bg.size() + result.photons.timestamps.size());
        std::merge(result.photons.timestamps.begin(), result.photons.timestamps.end(),
                   bg.begin(), bg.end(), std::back_inserter(merged));
        for (std::size_t i = 1; i < merged.size(); ++i)
            if (merged[i] <= merged[i - 1])
                merged[i] = std::nextafter(merged[i - 1], 1e300);
        result.photons.timestamps = std::move(merged);
    }
    return result;
}

RadialModes radial_mode_amplitudes(const IonState& state, const ModeFrequencies& freqs) {
    using namespace std::complex_literals;
    const std::complex<double> u(state.position.x, state.position.y);
    const std::complex<double> w(state.velocity.x, state.velocity.y);
    const double split = freqs.omega_c_prime - freqs.omega_m;
    RadialModes m;
    // u = A_c + A_m and du/dt = -i w_c' A_c - i w_m A_m at the sample time.
    m.a_c = (1i * w - freqs.omega_m * u) / split;
    m.a_m = u - m.a_c;
    m.r_c = std::abs(m.a_c);
    m.r_m = std::abs(m.a_m);
    return m;
}

double total_energy(const IonState& state, const ParticleSpecies& species,
                    const TrapFields& fields, const TrapGeometry& geometry) {
    const double kinetic = 0.5 * species.mass * norm_sq(state.velocity);
    const double c = 2.0 * fields.trap_voltage / geometry.r_squared();
    const Vec3& p = state.position;
    const double phi = c * (p.z * p.z - 0.5 * (p.x * p.x + p.y * p.y));
    return kinetic + species.charge * phi;
}

} // namespace penning
