#include "penning/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <fftw3.h>

#include "penning/constants.hpp"

namespace penning {

PowerSpectrum power_spectrum(std::span<const double> samples, double sample_rate_hz) {
    const std::size_t n = samples.size();
    PowerSpectrum out;
    if (n < 4) return out;

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> windowed(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann =
            0.5 * (1.0 - std::cos(constants::two_pi * static_cast<double>(i) / (n - 1)));
        windowed[i] = (samples[i] - mean) * hann;
    }

    const std::size_t nf = n / 2 + 1;
    std::vector<fftw_complex> spec(nf);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), windowed.data(), spec.data(),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    out.bin_width_hz = sample_rate_hz / static_cast<double>(n);
    out.frequency_hz.resize(nf);
    out.power.resize(nf);
    for (std::size_t k = 0; k < nf; ++k) {
        out.frequency_hz[k] = out.bin_width_hz * static_cast<double>(k);
        out.power[k] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
    }
    return out;
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

// Vertex of the parabola through (-1,a), (0,b), (1,c) in bin units.
double parabolic_offset(double a, double b, double c) {
    const double denom = a - 2.0 * b + c;
    if (std::abs(denom) < 1e-300) return 0.0;
    return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

} // namespace

std::vector<SpectralPeak> detect_peaks(const PowerSpectrum& spec, double snr_threshold) {
    std::vector<SpectralPeak> peaks;
    const std::size_t nf = spec.power.size();
    if (nf < 8) return peaks;

    const double floor = median_of({spec.power.begin() + 1, spec.power.end()});
    if (floor <= 0.0) return peaks;

    for (std::size_t k = 2; k + 2 < nf; ++k) {
        const double p = spec.power[k];
        if (p < spec.power[k - 1] || p <= spec.power[k + 1]) continue;
        // Amplitude SNR: noise power is exponentially distributed, so a
        // power-ratio threshold would fire on a fixed fraction of bins no
        // matter how clean the data.
        const double snr = std::sqrt(p / floor);
        if (snr < snr_threshold) continue;
        // Keep only the strongest bin within +-4: rejects the Hann mainlobe
        // shoulder bins and the first sidelobes of strong tones.
        bool dominated = false;
        for (std::size_t j = (k >= 4 ? k - 4 : 0); j <= std::min(k + 4, nf - 1); ++j)
            if (j != k && spec.power[j] > p) dominated = true;
        if (dominated) continue;
        const double off = parabolic_offset(std::log(spec.power[k - 1] + 1e-300),
                                            std::log(p + 1e-300),
                                            std::log(spec.power[k + 1] + 1e-300));
        peaks.push_back({spec.frequency_hz[k] + off * spec.bin_width_hz, p, snr});
    }
    return peaks;
}

double strongest_frequency(const PowerSpectrum& spec, double f_lo, double f_hi) {
    const std::size_t nf = spec.power.size();
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t k = 1; k + 1 < nf; ++k) {
        if (spec.frequency_hz[k] < f_lo || spec.frequency_hz[k] > f_hi) continue;
        if (spec.power[k] > best_p) { best_p = spec.power[k]; best = k; }
    }
    if (best_p < 0.0) return -1.0;
    const double off = parabolic_offset(std::log(spec.power[best - 1] + 1e-300),
                                        std::log(spec.power[best] + 1e-300),
                                        std::log(spec.power[best + 1] + 1e-300));
    return spec.frequency_hz[best] + off * spec.bin_width_hz;
}

} // namespace penning
