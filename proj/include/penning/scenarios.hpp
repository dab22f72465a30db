#pragma once

#include <string>
#include <vector>

#include "penning/config.hpp"
#include "penning/dynamics.hpp"
#include "penning/envelope_model.hpp"
#include "penning/imaging.hpp"
#include "penning/io.hpp"
#include "penning/photon_stats.hpp"

namespace penning {

inline constexpr const char* code_version = "penning 1.0.0";

/// Envelope-level damping rates of a single radial cooling beam acting on an
/// ion near the trap centre. A single beam drags only the velocity
/// component along its axis, so the rotating modes see half the scalar drag;
/// the intensity gradient of an offset beam damps the magnetron mode and
/// anti-damps the cyclotron mode by the same rate g.
struct LaserRateModel {
    double rate0 = 0.0;         // scattering rate at the orbit centre, s^-1
    double beta_over_m = 0.0;   // scalar velocity drag / mass, s^-1
    double gradient_rate = 0.0; // g, s^-1
    double gamma_c = 0.0;       // beta/2m * w_c'/(2 w_1) - g
    double gamma_m = 0.0;       // g - beta/2m * w_m/(2 w_1)
};

LaserRateModel analytic_laser_rates(const LaserParams& laser, const ParticleSpecies& species,
                                    const ModeFrequencies& freqs);

/// Scene assembled from the flat config keys (species.*, trap.*, laser.*,
/// drive.*, probe.*, sim.*).
Scene scene_from_config(const Config& cfg);
SimConfig sim_config_from_config(const Config& cfg, const Scene& scene);
CameraModel camera_from_config(const Config& cfg);

/// Detected-rate weights for accumulate_image: one entry per trajectory
/// sample per ion, epsilon * R * sample_interval.
std::vector<double> detection_weights(const Trajectory& traj, const Scene& scene,
                                      double detection_efficiency);

// ---------------------------------------------------------------------------
// Scenario runners. Each computes its results in memory; emit_* writes the
// figure-equivalent artifacts. run_scenario dispatches by name, writes the
// manifest, and returns it.
// ---------------------------------------------------------------------------

struct Fig2CyclingResult {
    double delta = 0.0;
    double quarter_period = 0.0;
    std::vector<double> t;
    std::vector<EnvelopeState> envelope;
    std::vector<double> dyn_r_c, dyn_r_m; // mode radii from the full dynamics
    double conversion_ratio = 0.0;        // dynamics r_c at quarter period / r_m(0)
    double residual_r_m = 0.0;            // dynamics r_m at quarter period / r_m(0)
    double conservation_error = 0.0;      // envelope max |r_c^2+r_m^2 - r0^2|/r0^2
};

struct Fig2AxialiseResult {
    EnvelopeParams params; // analytic (delta, gamma_c, gamma_m)
    double predicted_slow_rate = 0.0;
    double fitted_rate = 0.0; // from the full dynamics magnetron envelope
    std::vector<double> t;
    std::vector<EnvelopeState> envelope;
    std::vector<double> dyn_r_c, dyn_r_m;
};

struct Fig2OrbitResult {
    EnvelopeParams marginal_params; // rates scaled to the stable-orbit point
    double predicted_radius = 0.0;  // from find_stable_orbit_radius
    std::vector<double> t;
    std::vector<double> radius;     // full-dynamics magnetron radius
    double settled_radius = 0.0;    // mean over the final window
    double settle_variation = 0.0;  // max deviation of window means, fractional
    Regime regime_at_orbit = Regime::Expanding;
};

struct Fig4Point {
    double drive_hz = 0.0;
    double rms_x = 0.0;
    double rms_z = 0.0;
    double fwhm_x = 0.0;
    Image image;
};

struct Fig4Result {
    std::vector<Fig4Point> points;
    double true_cyclotron_hz = 0.0;
    std::size_t min_index = 0; // index of the smallest rms_x
};

struct Fig5Amplitude {
    double amplitude_v = 0.0;
    double gamma_fit = 0.0;   // s^-1
    double omega_0 = 0.0;
    std::vector<PhaseMeasurement> scan;
};

struct Fig5Result {
    double synthetic_gamma_true = 0.0;
    double synthetic_gamma_fit = 0.0; // phase_response_scan on generated data
    std::vector<Fig5Amplitude> amplitudes;
    double linear_r_squared = 0.0;    // gamma vs amplitude
    double enhancement_ratio = 0.0;   // gamma(max V)/gamma(0)
};

struct Fig6Result {
    PhotonRecord photons; // settled-window stream the correlator analysed
    WaitingTimeHistogram histogram;
    SpectrumPeaks analysis;
    double chi2_per_dof = 0.0;
    double f_m_hz = 0.0;      // trap magnetron frequency
    double f_c_prime_hz = 0.0;
    double peak_2fm_hz = -1.0;     // detected peak positions, -1 when absent
    double peak_fcp_hz = -1.0;
    Image image;
    double lobe_separation = 0.0;  // m, distance between the two fluorescence maxima
    double lobe_contrast = 0.0;    // lobe peak / midpoint value
    double predicted_radius = 0.0;
    double incoherent_fraction = 0.0; // N=5 random-phase control
    double incoherent_sigma = 0.0;
    int n_control_ions = 5;
};

struct DopplerResult {
    double t_cyclotron = 0.0; // K
    double t_axial = 0.0;     // K
    double t_pooled = 0.0;    // K, (2 T_cyc + T_ax)/3
    double doppler_limit = 0.0;
};

Fig2CyclingResult run_fig2_cycling(const Config& cfg);
Fig2AxialiseResult run_fig2_axialise(const Config& cfg);
Fig2OrbitResult run_fig2_orbit(const Config& cfg);
Fig4Result run_fig4_sweep(const Config& cfg);
Fig5Result run_fig5_phase_scan(const Config& cfg);
Fig6Result run_fig6_orbit_correlation(const Config& cfg);
DopplerResult run_doppler_equilibrium(const Config& cfg);

/// Runs one named scenario, writes its artifacts and manifest under out_dir,
/// returns the manifest.
RunManifest run_scenario(const std::string& name, const Config& cfg,
                         const std::string& out_dir);

std::vector<std::string> scenario_names();

struct SweepPointOutcome {
    std::string value;
    bool ok = false;
    std::string error;
    RunManifest manifest;
};

/// Runs the scenario template once per value of cfg key `sweep.key`
/// (comma-separated `sweep.values`), each in its own subdirectory. Failures
/// are recorded per point without aborting the sweep.
std::vector<SweepPointOutcome> run_sweep(const Config& cfg, const std::string& out_dir);

} // namespace penning
