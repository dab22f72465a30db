#pragma once

#include <span>
#include <vector>

namespace penning {

/// One-sided power spectrum of a real series sampled at sample_rate_hz,
/// after mean removal and a Hann window (FFTW r2c backend). Bin k maps to
/// frequency k * sample_rate_hz / n.
struct PowerSpectrum {
    std::vector<double> frequency_hz;
    std::vector<double> power;
    double bin_width_hz = 0.0;
};

PowerSpectrum power_spectrum(std::span<const double> samples, double sample_rate_hz);

struct SpectralPeak {
    double frequency_hz = 0.0; // parabolic-interpolated position
    double power = 0.0;
    double snr = 0.0; // peak power over median noise floor
};

/// Local maxima with power >= snr_threshold * median(power), sorted by
/// frequency. The DC bin and the Nyquist bin are excluded.
std::vector<SpectralPeak> detect_peaks(const PowerSpectrum& spec, double snr_threshold);

/// Frequency of the single strongest bin in [f_lo, f_hi], refined by
/// parabolic interpolation on log power. Returns < 0 if the window is empty.
double strongest_frequency(const PowerSpectrum& spec, double f_lo, double f_hi);

} // namespace penning
