#include "penning/photon_stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "penning/errors.hpp"
#include "penning/fitting.hpp"

namespace penning {

WaitingTimeHistogram waiting_time_histogram(const PhotonRecord& photons, double bin_width,
                                            double max_lag) {
    if (photons.timestamps.size() < 2)
        throw TooFewPhotonsError("need at least 2 photons for waiting times");
    if (bin_width <= 0.0) throw ConfigError("bin width must be positive");

    WaitingTimeHistogram h;
    h.bin_width = bin_width;
    h.counts.assign(static_cast<std::size_t>(std::ceil(max_lag / bin_width)), 0);
    const auto& ts = photons.timestamps;
    h.total_starts = ts.size() - 1;
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const double lag = ts[i] - ts[i - 1];
        const auto bin = static_cast<std::size_t>(lag / bin_width);
        if (bin < h.counts.size())
            ++h.counts[bin];
        else
            ++h.overflow;
    }
    return h;
}

ExponentialFit fit_exponential_background(const WaitingTimeHistogram& h,
                                          double mask_period_s,
                                          double mask_half_width_s) {
    const std::size_t n = h.counts.size();
    ExponentialFit out;

    auto masked = [&](double lag) {
        if (mask_period_s <= 0.0) return false;
        const double nearest = std::round(lag / mask_period_s) * mask_period_s;
        return nearest > 0.0 && std::abs(lag - nearest) <= mask_half_width_s;
    };

    // Log-linear seed on the non-empty unmasked bins.
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
        const double lag = (static_cast<double>(i) + 0.5) * h.bin_width;
        if (h.counts[i] == 0 || masked(lag)) continue;
        xs.push_back(lag);
        ys.push_back(std::log(static_cast<double>(h.counts[i])));
    }
    if (xs.size() < 3) {
        out.fit_ok = false;
        return out;
    }
    const LinearFit seed = fit_linear(xs, ys);
    double a0 = std::exp(seed.intercept);
    double r0 = std::max(-seed.slope, 1.0 / (h.bin_width * static_cast<double>(n)));

    std::vector<double> y, sigma, t;
    for (std::size_t i = 0; i < n; ++i) {
        const double lag = (static_cast<double>(i) + 0.5) * h.bin_width;
        if (masked(lag)) continue;
        t.push_back(lag);
        y.push_back(static_cast<double>(h.counts[i]));
        sigma.push_back(std::sqrt(std::max(static_cast<double>(h.counts[i]), 1.0)));
    }
    const std::size_t m = y.size();
    auto model = [&](std::span<const double> p, std::span<double> pred) {
        for (std::size_t i = 0; i < m; ++i) pred[i] = p[0] * std::exp(-p[1] * t[i]);
    };
    const std::vector<double> init{a0, r0};
    const LmResult fit = fit_levenberg_marquardt(model, y, sigma, init);
    if (!fit.converged || !(fit.params[0] > 0.0) || !(fit.params[1] > 0.0) ||
        !std::isfinite(fit.params[0]) || !std::isfinite(fit.params[1])) {
        out.fit_ok = false;
        return out;
    }
    out.amplitude = fit.params[0];
    out.rate = fit.params[1];
    out.chi2_per_dof = fit.chi2 / std::max<std::size_t>(1, m - 2);
    return out;
}

SpectrumPeaks detrend_and_fft(const WaitingTimeHistogram& h, double snr_threshold,
                              double mask_period_s, double mask_half_width_s) {
    const std::size_t n = h.counts.size();
    if (n < 64) throw Error("TooFewBins", "detrend_and_fft needs at least 64 bins");

    SpectrumPeaks out;
    out.background = fit_exponential_background(h, mask_period_s, mask_half_width_s);
    out.detrended.assign(n, 0.0);

    if (out.background.fit_ok) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = (static_cast<double>(i) + 0.5) * h.bin_width;
            const double fit = out.background.amplitude * std::exp(-out.background.rate * t);
            // Below one expected count the ratio is dominated by shot noise;
            // leave those bins at zero instead of amplifying the tail.
            if (fit >= 1.0) out.detrended[i] = static_cast<double>(h.counts[i]) / fit - 1.0;
        }
    } else {
        // Fallback, flagged via background.fit_ok: plain mean subtraction.
        const double mean =
            std::accumulate(h.counts.begin(), h.counts.end(), 0.0) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            out.detrended[i] = static_cast<double>(h.counts[i]) - mean;
    }

    out.spectrum = power_spectrum(out.detrended, 1.0 / h.bin_width);
    out.peaks = detect_peaks(out.spectrum, snr_threshold);
    return out;
}

PhaseMeasurement rf_photon_phase(const PhotonRecord& photons, double drive_omega,
                                 double drive_phase0) {
    const std::size_t n = photons.timestamps.size();
    if (n < 200) throw TooFewPhotonsError("rf_photon_phase needs at least 200 photons");

    std::complex<double> moment{0.0, 0.0};
    for (double t : photons.timestamps) {
        const double theta = drive_omega * t + drive_phase0;
        moment += std::complex<double>(std::cos(theta), std::sin(theta));
    }
    moment /= static_cast<double>(n);

    PhaseMeasurement m;
    m.drive_omega = drive_omega;
    m.n_photons = n;
    m.phase = std::atan2(moment.imag(), moment.real());
    m.depth = std::min(1.0, 2.0 * std::abs(moment));
    m.uncertainty = 1.0 / std::sqrt(static_cast<double>(n) * std::max(std::abs(moment), 1e-12));
    if (m.depth < 3.0 * m.uncertainty)
        throw NoModulationError("modulation depth " + std::to_string(m.depth) +
                                " below 3 sigma = " + std::to_string(3.0 * m.uncertainty));
    return m;
}

PhaseScanFit phase_response_scan(const std::vector<PhaseMeasurement>& scan) {
    if (scan.size() < 5)
        throw FitFailedError("phase scan needs at least 5 points across the resonance");

    std::vector<PhaseMeasurement> pts = scan;
    std::sort(pts.begin(), pts.end(),
              [](const PhaseMeasurement& a, const PhaseMeasurement& b) {
                  return a.drive_omega < b.drive_omega;
              });
    const std::size_t n = pts.size();
    std::vector<double> w(n), phi(n), sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = pts[i].drive_omega;
        phi[i] = pts[i].phase;
        sigma[i] = std::max(pts[i].uncertainty, 1e-6);
    }
    unwrap_phases(phi);

    const auto [mn, mx] = std::minmax_element(phi.begin(), phi.end());
    const double swing = *mx - *mn;
    if (swing < constants::pi / 2.0)
        throw IncompleteSwingError("observed phase swing " + std::to_string(swing) +
                                   " rad < pi/2; widen the scan");

    // Seeds: steepest-descent point for omega_0, inverse max slope for gamma.
    double max_slope = 0.0, w0_seed = w[n / 2];
    for (std::size_t i = 1; i < n; ++i) {
        const double s = std::abs((phi[i] - phi[i - 1]) / (w[i] - w[i - 1]));
        if (s > max_slope) { max_slope = s; w0_seed = 0.5 * (w[i] + w[i - 1]); }
    }
    const double gamma_seed = (max_slope > 0.0) ? 1.0 / max_slope : (w[n - 1] - w[0]) / 4.0;
    const double phi0_seed = std::accumulate(phi.begin(), phi.end(), 0.0) / n;

    // Parameters: {phi_0, omega_0, ln gamma} so gamma stays positive.
    auto model = [&](std::span<const double> p, std::span<double> pred) {
        const double g = std::exp(p[2]);
        for (std::size_t i = 0; i < n; ++i) pred[i] = p[0] - std::atan((w[i] - p[1]) / g);
    };
    const std::vector<double> init{phi0_seed, w0_seed, std::log(gamma_seed)};
    const LmResult fit = fit_levenberg_marquardt(model, phi, sigma, init);
    if (!fit.converged || !std::isfinite(fit.params[2]))
        throw FitFailedError("phase response fit did not converge");

    PhaseScanFit out;
    out.phi_0 = fit.params[0];
    out.omega_0 = fit.params[1];
    out.gamma = std::exp(fit.params[2]);
    out.swing = swing;
    std::vector<double> pred(n);
    model(fit.params, pred);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (phi[i] - pred[i]) * (phi[i] - pred[i]);
    out.residual_rms = std::sqrt(ss / n);
    return out;
}

CorrelatedFraction correlated_fraction(const WaitingTimeHistogram& h,
                                       const ExponentialFit& background,
                                       double peak_freq_hz) {
    if (!(peak_freq_hz > 0.0)) throw PeakNotFoundError("peak frequency must be positive");
    const double lag = 1.0 / peak_freq_hz;
    const double lo = 0.7 * lag, hi = 1.3 * lag;
    const std::size_t n = h.counts.size();
    const auto bin_lo = static_cast<std::size_t>(lo / h.bin_width);
    const auto bin_hi = static_cast<std::size_t>(hi / h.bin_width);
    if (bin_hi >= n)
        throw PeakNotFoundError("modulation lag outside histogram range");

    double excess = 0.0, window_counts = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += static_cast<double>(h.counts[i]);
    for (std::size_t i = bin_lo; i <= bin_hi; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * h.bin_width;
        const double fit = background.amplitude * std::exp(-background.rate * t);
        excess += static_cast<double>(h.counts[i]) - fit;
        window_counts += static_cast<double>(h.counts[i]);
    }
    if (total <= 0.0) throw PeakNotFoundError("empty histogram");

    CorrelatedFraction out;
    out.peak_lag = lag;
    out.fraction = std::clamp(excess / total, 0.0, 1.0);
    out.sigma = std::sqrt(std::max(window_counts, 1.0)) / total;
    return out;
}

} // namespace penning
