#pragma once

#include <cstdint>
#include <vector>

#include "penning/dynamics.hpp"
#include "penning/spectrum.hpp"

namespace penning {

/// Start-stop waiting times t_{i+1} - t_i binned at fixed width; lags beyond
/// max_lag are counted in `overflow` rather than dropped silently.
struct WaitingTimeHistogram {
    double bin_width = 0.0; // s
    std::vector<std::uint64_t> counts;
    std::uint64_t overflow = 0;
    std::uint64_t total_starts = 0; // number of start-stop pairs considered
};

WaitingTimeHistogram waiting_time_histogram(const PhotonRecord& photons, double bin_width,
                                            double max_lag);

struct ExponentialFit {
    double amplitude = 0.0; // A in A exp(-R t)
    double rate = 0.0;      // R, s^-1
    double chi2_per_dof = 0.0;
    bool fit_ok = true; // false -> mean-subtraction fallback was used
};

/// Weighted fit of the exponential background A exp(-R t) to the histogram
/// (Poisson sigma = sqrt(max(count,1))). A nonzero mask_period_s excludes
/// bins within +-mask_half_width_s of every multiple of that lag from the
/// fit (the standard way to fit a smooth background under known correlation
/// bumps); chi2 is then reported over the unmasked bins.
ExponentialFit fit_exponential_background(const WaitingTimeHistogram& h,
                                          double mask_period_s = 0.0,
                                          double mask_half_width_s = 0.0);

struct SpectrumPeaks {
    PowerSpectrum spectrum;
    std::vector<SpectralPeak> peaks;
    ExponentialFit background;
    std::vector<double> detrended; // counts/fit - 1 per bin
};

/// Divides out the exponential background, Hann-windows, and runs peak
/// detection (SNR >= snr_threshold over the median floor). The optional mask
/// is forwarded to the background fit.
SpectrumPeaks detrend_and_fft(const WaitingTimeHistogram& h, double snr_threshold = 4.0,
                              double mask_period_s = 0.0, double mask_half_width_s = 0.0);

struct PhaseMeasurement {
    double drive_omega = 0.0; // angular s^-1
    double phase = 0.0;       // rad in (-pi, pi]
    double depth = 0.0;       // modulation depth in [0, 1]
    double uncertainty = 0.0; // rad
    std::uint64_t n_photons = 0;
};

/// First circular moment m = <exp(i theta)> of photon arrival phases folded
/// at the drive: phase = arg m, depth = 2|m|, sigma = 1/sqrt(N |m|).
/// Throws TooFewPhotonsError (< 200 photons) and NoModulationError when
/// depth < 3 sigma.
PhaseMeasurement rf_photon_phase(const PhotonRecord& photons, double drive_omega,
                                 double drive_phase0);

struct PhaseScanFit {
    double gamma = 0.0;   // s^-1
    double omega_0 = 0.0; // angular s^-1
    double phi_0 = 0.0;   // rad
    double residual_rms = 0.0;
    double swing = 0.0;   // observed phase swing across the scan
};

/// Least-squares fit of phi(w) = phi_0 - atan((w - w_0)/gamma), the
/// steady-state phase of a first-order rotating-mode response. Phases are
/// unwrapped before fitting. Throws IncompleteSwingError when the observed
/// swing is below pi/2 and FitFailedError when the optimiser fails.
PhaseScanFit phase_response_scan(const std::vector<PhaseMeasurement>& scan);

struct CorrelatedFraction {
    double fraction = 0.0; // excess area near the modulation lag / total area
    double sigma = 0.0;    // Poisson statistical error of the fraction
    double peak_lag = 0.0; // s
};

/// Fractional area of the modulation bump in the waiting-time histogram,
/// evaluated around the lag 1/peak_freq_hz. Throws PeakNotFoundError when no
/// excess bump is present near that lag.
CorrelatedFraction correlated_fraction(const WaitingTimeHistogram& h,
                                       const ExponentialFit& background,
                                       double peak_freq_hz);

} // namespace penning
