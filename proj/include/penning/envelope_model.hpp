#pragma once

#include <complex>
#include <functional>
#include <utility>

#include "penning/trap_model.hpp"

namespace penning {

/// Coupled radial-envelope model
///   dr_c/dt =  delta r_m - gamma_c r_c
///   dr_m/dt = -delta r_c - gamma_m r_m
/// with system matrix [[-gamma_c, delta], [-delta, -gamma_m]]. Signed
/// amplitudes are evolved internally; radii are reported as magnitudes.
struct EnvelopeParams {
    double delta = 0.0;   // coupling rate, s^-1, >= 0
    double gamma_c = 0.0; // cyclotron damping, s^-1 (positive = cooling)
    double gamma_m = 0.0; // magnetron damping, s^-1 (may be negative)
};

struct EnvelopeState {
    double r_c = 0.0; // m
    double r_m = 0.0; // m
};

enum class Regime { Cycling, Axialising, MarginalStableOrbit, Expanding };

const char* regime_name(Regime r);

struct RegimeResult {
    Regime regime;
    std::complex<double> lambda_plus;  // eigenvalue with larger real part
    std::complex<double> lambda_minus;
};

/// lambda = -(gamma_c+gamma_m)/2 +- sqrt(((gamma_c-gamma_m)/2)^2 - delta^2).
/// Returned with the larger real part first.
std::pair<std::complex<double>, std::complex<double>>
envelope_eigenvalues(const EnvelopeParams& p);

/// tol is a rate tolerance (s^-1). The marginal (stable-orbit) condition
/// delta^2 = -gamma_c gamma_m is tested as
/// |delta^2 + gamma_c gamma_m| <= tol * max(delta, |gamma_c|, |gamma_m|).
RegimeResult classify_regime(const EnvelopeParams& p, double tol);

/// Default classification tolerance: 1e-6 of the largest rate scale.
double default_regime_tol(const EnvelopeParams& p);

/// Closed-form matrix exponential propagation of the signed amplitudes over
/// t >= 0; magnitudes reported.
EnvelopeState evolve_envelope(const EnvelopeParams& p, const EnvelopeState& s0, double t);

/// Laser-beam overlap for an orbit of radius rho: the Gaussian intensity
/// profile ring-averaged over one revolution,
///   eta(rho) = (1/2pi) Int exp(-2 (rho cos th - x_L)^2 / w^2) dth.
/// The magnetron pumping term can alternatively be weighted by the squared
/// velocity projection onto the beam (the ion crosses the beam where that
/// projection vanishes, so the pumping falls off much faster than the bare
/// intensity average).
enum class MagnetronWeighting { SharedEta, VelocityProjected };

struct OverlapModel {
    double beam_waist = 50e-6;  // w, m
    double beam_offset = 0.0;   // x_L, m
    double gamma_c0 = 0.0;      // base cyclotron rate at full overlap, s^-1
    double gamma_m0 = 0.0;      // base magnetron rate at full overlap, s^-1
    MagnetronWeighting magnetron_weighting = MagnetronWeighting::SharedEta;

    // Test hook: replaces the ring average when set.
    std::function<double(double)> eta_override;
};

/// 1024-point periodic trapezoid rule (exact convergence for this smooth
/// periodic integrand); eta(0) = exp(-2 x_L^2 / w^2).
double overlap_factor(const OverlapModel& m, double orbit_radius);

/// Overlap factor applied to gamma_m: equals overlap_factor in SharedEta
/// mode; in VelocityProjected mode the ring average carries a 2 cos^2
/// weight, normalized so the factor -> eta(0) at rho = 0.
double magnetron_overlap_factor(const OverlapModel& m, double orbit_radius);

enum class OrbitStatus { Found, NoExpansion, NoStableOrbit };

struct StableOrbitResult {
    double radius = 0.0; // m
    OrbitStatus status = OrbitStatus::Found;
};

/// Radius at which the laser-overlap feedback pins the envelope to the
/// marginal regime: solves delta^2 = -gamma_c0 gamma_m0 eta(rho)^2 by
/// bisection to 1e-3 * w. Requires gamma_c0 > 0 and gamma_m0 < 0.
/// NoExpansion when the marginal condition already holds at the centre
/// (radius 0); NoStableOrbit when delta = 0 (the orbit expands without
/// bound).
StableOrbitResult find_stable_orbit_radius(const OverlapModel& m, double delta);

/// Linear drive-amplitude calibration delta = k_delta * amplitude.
double coupling_from_drive(double drive_amplitude_v, double k_delta);

/// Physical coupling rate of the segmented-ring quadrupole drive,
/// delta = e kappa V_ax / (2 m omega_1 r0^2), used to keep envelope-level
/// and full-dynamics scenarios consistent.
double coupling_rate_for_drive(const ParticleSpecies& species,
                               const TrapGeometry& geometry,
                               const ModeFrequencies& freqs,
                               double kappa, double amplitude_v);

} // namespace penning
