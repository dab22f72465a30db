#include "penning/envelope_model.hpp"

#include <algorithm>
#include <cmath>

namespace penning {

const char* regime_name(Regime r) {
    switch (r) {
    case Regime::Cycling: return "Cycling";
    case Regime::Axialising: return "Axialising";
    case Regime::MarginalStableOrbit: return "MarginalStableOrbit";
    case Regime::Expanding: return "Expanding";
    }
    return "?";
}

std::pair<std::complex<double>, std::complex<double>>
envelope_eigenvalues(const EnvelopeParams& p) {
    const double half_trace = -(p.gamma_c + p.gamma_m) / 2.0;
    const double half_diff = (p.gamma_c - p.gamma_m) / 2.0;
    const double disc = half_diff * half_diff - p.delta * p.delta;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return {{half_trace + s, 0.0}, {half_trace - s, 0.0}};
    }
    const double s = std::sqrt(-disc);
    return {{half_trace, s}, {half_trace, -s}};
}

double default_regime_tol(const EnvelopeParams& p) {
    const double scale = std::max({p.delta, std::abs(p.gamma_c), std::abs(p.gamma_m)});
    return 1e-6 * std::max(scale, 1.0);
}

RegimeResult classify_regime(const EnvelopeParams& p, double tol) {
    auto [lp, lm] = envelope_eigenvalues(p);
    RegimeResult r{Regime::MarginalStableOrbit, lp, lm};

    if (p.gamma_c == 0.0 && p.gamma_m == 0.0 && p.delta > 0.0) {
        r.regime = Regime::Cycling;
        return r;
    }
    const double det = p.gamma_c * p.gamma_m + p.delta * p.delta;
    const double scale = std::max({p.delta, std::abs(p.gamma_c), std::abs(p.gamma_m)});
    if (std::abs(det) <= tol * scale && p.gamma_c + p.gamma_m > 0.0) {
        r.regime = Regime::MarginalStableOrbit;
        return r;
    }
    if (lp.real() > tol) {
        r.regime = Regime::Expanding;
    } else if (lp.real() < -tol && lm.real() < -tol) {
        r.regime = Regime::Axialising;
    } else {
        // Knife-edge cases (e.g. exactly compensating gain/loss) land here.
        r.regime = Regime::MarginalStableOrbit;
    }
    return r;
}

EnvelopeState evolve_envelope(const EnvelopeParams& p, const EnvelopeState& s0, double t) {
    // M = aI + N with a = -(gc+gm)/2 and N = [[-d2, delta], [-delta, d2]],
    // d2 = (gc-gm)/2. N^2 = (d2^2 - delta^2) I, so exp(Mt) has a closed form
    // in cosh/sinh (or cos/sin when the discriminant is negative).
    const double a = -(p.gamma_c + p.gamma_m) / 2.0;
    const double d2 = (p.gamma_c - p.gamma_m) / 2.0;
    const double disc = d2 * d2 - p.delta * p.delta;

    double c, s_over;
    if (disc > 0.0) {
        const double mu = std::sqrt(disc);
        c = std::cosh(mu * t);
        s_over = std::sinh(mu * t) / mu;
    } else if (disc < 0.0) {
        const double mu = std::sqrt(-disc);
        c = std::cos(mu * t);
        s_over = (mu * t == 0.0) ? t : std::sin(mu * t) / mu;
    } else {
        c = 1.0;
        s_over = t;
    }
    const double ea = std::exp(a * t);
    const double m00 = ea * (c - d2 * s_over);
    const double m01 = ea * (p.delta * s_over);
    const double m10 = ea * (-p.delta * s_over);
    const double m11 = ea * (c + d2 * s_over);

    const double rc = m00 * s0.r_c + m01 * s0.r_m;
    const double rm = m10 * s0.r_c + m11 * s0.r_m;
    return {std::abs(rc), std::abs(rm)};
}

double overlap_factor(const OverlapModel& m, double orbit_radius) {
    if (m.eta_override) return m.eta_override(orbit_radius);
    constexpr int n = 1024;
    const double inv_wsq = 1.0 / (m.beam_waist * m.beam_waist);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double th = constants::two_pi * (static_cast<double>(i) / n);
        const double d = orbit_radius * std::cos(th) - m.beam_offset;
        acc += std::exp(-2.0 * d * d * inv_wsq);
    }
    return acc / n;
}

double magnetron_overlap_factor(const OverlapModel& m, double orbit_radius) {
    if (m.magnetron_weighting == MagnetronWeighting::SharedEta || m.eta_override)
        return overlap_factor(m, orbit_radius);
    // The velocity component along the beam is proportional to the transverse
    // coordinate of the circular motion, so the drag-pumping average carries
    // a squared projection weight (normalized to match eta at rho -> 0).
    constexpr int n = 1024;
    const double inv_wsq = 1.0 / (m.beam_waist * m.beam_waist);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double th = constants::two_pi * (static_cast<double>(i) / n);
        const double c = std::cos(th);
        const double d = orbit_radius * c - m.beam_offset;
        acc += 2.0 * c * c * std::exp(-2.0 * d * d * inv_wsq);
    }
    return acc / n;
}

StableOrbitResult find_stable_orbit_radius(const OverlapModel& m, double delta) {
    if (delta <= 0.0) return {0.0, OrbitStatus::NoStableOrbit};

    const double strength = -m.gamma_c0 * m.gamma_m0; // > 0 in the valid regime
    auto balance = [&](double rho) {
        const double eta = overlap_factor(m, rho);
        return delta * delta - strength * eta * magnetron_overlap_factor(m, rho);
    };
    if (balance(0.0) >= 0.0) {
        // Coupling already dominates at the centre: the envelope axialises
        // and there is no expanded orbit.
        return {0.0, OrbitStatus::NoExpansion};
    }
    // eta decreases with rho, so the balance function crosses zero once.
    double lo = 0.0, hi = m.beam_waist;
    while (balance(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6 * m.beam_waist) return {0.0, OrbitStatus::NoStableOrbit};
    }
    const double tol = 1e-3 * m.beam_waist;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (balance(mid) < 0.0 ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), OrbitStatus::Found};
}

double coupling_from_drive(double drive_amplitude_v, double k_delta) {
    return k_delta * drive_amplitude_v;
}

double coupling_rate_for_drive(const ParticleSpecies& species,
                               const TrapGeometry& geometry,
                               const ModeFrequencies& freqs,
                               double kappa, double amplitude_v) {
    const double r0 = geometry.ring_radius;
    return species.charge * kappa * amplitude_v /
           (2.0 * species.mass * freqs.omega_1 * r0 * r0);
}

} // namespace penning
