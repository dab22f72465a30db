#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "penning/errors.hpp"
#include "penning/photon_stats.hpp"
#include "test_util.hpp"

using namespace penning;

namespace {

PhotonRecord homogeneous_stream(double rate, double duration, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate);
    PhotonRecord rec;
    for (double t = gap(rng); t < duration; t += gap(rng)) rec.timestamps.push_back(t);
    return rec;
}

// Oracle generator: inhomogeneous Poisson stream by thinning against the
// peak rate.
template <typename RateFn>
PhotonRecord thinned_stream(RateFn rate, double rate_max, double duration,
                            std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate_max);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PhotonRecord rec;
    for (double t = gap(rng); t < duration; t += gap(rng))
        if (u(rng) * rate_max < rate(t)) rec.timestamps.push_back(t);
    return rec;
}

} // namespace

TEST_CASE("waiting-time histogram: strict start-stop pairing") {
    SUBCASE("two photons 1 ms apart give one count in the 1 ms bin") {
        PhotonRecord rec;
        rec.timestamps = {0.0, 1e-3};
        const auto h = waiting_time_histogram(rec, 1e-4, 5e-3);
        CHECK(h.total_starts == 1);
        CHECK(h.counts[10] == 1);
        std::uint64_t total = 0;
        for (auto c : h.counts) total += c;
        CHECK(total == 1);
    }
    SUBCASE("count conservation with overflow") {
        const auto rec = homogeneous_stream(1e4, 1.0, 7);
        const auto h = waiting_time_histogram(rec, 2e-5, 3e-4);
        std::uint64_t total = 0;
        for (auto c : h.counts) total += c;
        CHECK(total == rec.timestamps.size() - 1 - h.overflow);
        CHECK(h.overflow > 0); // 0.3 ms cut at mean gap 0.1 ms must overflow
    }
    SUBCASE("fewer than two photons is an error") {
        PhotonRecord rec;
        rec.timestamps = {0.5};
        CHECK_THROWS_AS(waiting_time_histogram(rec, 1e-4, 1e-2), TooFewPhotonsError);
    }
    SUBCASE("bursts every half period concentrate mass at multiples of T/2") {
        const double f = 20e3, period = 1.0 / f;
        auto rate = [&](double t) {
            // Two bursts per period, as an orbit crossing the beam twice.
            return 4e4 * std::exp(6.0 * (std::cos(constants::two_pi * 2.0 * f * t) - 1.0));
        };
        const auto rec = thinned_stream(rate, 4e4, 20.0, 11);
        const auto h = waiting_time_histogram(rec, 1e-6, 3.0 * period);
        // Mass within +-15% of k*T/2 against total.
        std::uint64_t near = 0, total = 0;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            total += h.counts[i];
            const double lag = (i + 0.5) * h.bin_width;
            for (int k = 1; k <= 6; ++k) {
                if (std::abs(lag - k * period / 2.0) < 0.15 * period / 2.0) {
                    near += h.counts[i];
                    break;
                }
            }
        }
        CHECK(static_cast<double>(near) > 0.55 * static_cast<double>(total));
    }
}

TEST_CASE("exponential background fit: Poisson stream passes chi^2/dof < 2") {
    const double rate = 1e4;
    const auto rec = homogeneous_stream(rate, 10.0, 3);
    const auto h = waiting_time_histogram(rec, 2e-5, 1e-3);
    const auto fit = fit_exponential_background(h);
    REQUIRE(fit.fit_ok);
    CHECK(fit.rate == doctest::Approx(rate).epsilon(0.03));
    CHECK(fit.chi2_per_dof < 2.0);
}

TEST_CASE("detrend_and_fft") {
    SUBCASE("pure exponential yields no peaks") {
        const auto rec = homogeneous_stream(2e4, 10.0, 5);
        const auto h = waiting_time_histogram(rec, 5e-6, 6.4e-4);
        REQUIRE(h.counts.size() == 128);
        const auto res = detrend_and_fft(h);
        CHECK(res.background.fit_ok);
        CHECK(res.peaks.empty());
    }
    SUBCASE("closed-form modulated histogram shows one peak at 60 kHz") {
        // Synthetic histogram: counts = A exp(-R t) (1 + 0.5 cos(2 pi 60 kHz t)).
        WaitingTimeHistogram h;
        h.bin_width = 1e-6;
        h.counts.resize(512);
        std::mt19937_64 rng(9);
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double t = (i + 0.5) * h.bin_width;
            const double mean =
                5e4 * std::exp(-6e3 * t) * (1.0 + 0.5 * std::cos(constants::two_pi * 60e3 * t));
            h.counts[i] = std::poisson_distribution<std::uint64_t>(mean)(rng);
            h.total_starts += h.counts[i];
        }
        const auto res = detrend_and_fft(h);
        REQUIRE(!res.peaks.empty());
        // Strongest peak within one FFT bin of 60 kHz, and no other peak
        // stronger than half of it.
        const auto& top = *std::max_element(
            res.peaks.begin(), res.peaks.end(),
            [](const SpectralPeak& a, const SpectralPeak& b) { return a.power < b.power; });
        CHECK(std::abs(top.frequency_hz - 60e3) <= res.spectrum.bin_width_hz);
        for (const auto& p : res.peaks)
            if (std::abs(p.frequency_hz - top.frequency_hz) > 2 * res.spectrum.bin_width_hz)
                CHECK(p.power < 0.5 * top.power);
    }
    SUBCASE("null case: pure Poisson gives zero peaks in >= 95 of 100 trials") {
        int clean = 0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto rec = homogeneous_stream(2e4, 5.0, 1000 + trial);
            const auto h = waiting_time_histogram(rec, 5e-6, 6.4e-4);
            if (detrend_and_fft(h).peaks.empty()) ++clean;
        }
        CHECK(clean >= 95);
    }
    SUBCASE("too few bins rejected") {
        PhotonRecord rec;
        rec.timestamps = {0.0, 1e-3, 2e-3};
        const auto h = waiting_time_histogram(rec, 1e-4, 3e-3);
        CHECK_THROWS(detrend_and_fft(h));
    }
}

TEST_CASE("rf-photon phase via the circular moment") {
    const double omega = constants::two_pi * 31e3;

    SUBCASE("inverse-transform oracle: rate ~ 1 + cos(theta - pi/4)") {
        auto rate = [&](double t) { return 1e4 * (1.0 + std::cos(omega * t - constants::pi / 4)); };
        const auto rec = thinned_stream(rate, 2e4, 20.0, 13);
        const auto m = rf_photon_phase(rec, omega, 0.0);
        CHECK(std::abs(m.phase - constants::pi / 4) < 3.0 * m.uncertainty);
        CHECK(m.depth == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("uniform phases carry no modulation") {
        const auto rec = homogeneous_stream(1e4, 5.0, 17);
        CHECK_THROWS_AS(rf_photon_phase(rec, omega, 0.0), NoModulationError);
    }
    SUBCASE("recovered depth converges to beta (N = 1e5, 3 sigma)") {
        const double beta = 0.6;
        auto rate = [&](double t) { return 1e4 * (1.0 + beta * std::cos(omega * t + 1.0)); };
        const auto rec = thinned_stream(rate, 1.6e4, 10.5, 19);
        REQUIRE(rec.timestamps.size() > 100000);
        const auto m = rf_photon_phase(rec, omega, 0.0);
        // Var(depth) ~ 2/N for small depth; allow 3 sigma plus binning bias.
        CHECK(std::abs(m.depth - beta) < 3.0 * std::sqrt(2.0 / rec.timestamps.size()) + 0.01);
    }
    SUBCASE("time-origin shift compensated in phase0 leaves the phase unchanged") {
        auto rate = [&](double t) { return 1e4 * (1.0 + 0.8 * std::cos(omega * t + 0.3)); };
        const auto rec = thinned_stream(rate, 1.8e4, 4.0, 23);
        const double shift = 1.2345e-3;
        PhotonRecord moved = rec;
        for (auto& t : moved.timestamps) t += shift;
        const auto a = rf_photon_phase(rec, omega, 0.0);
        const auto b = rf_photon_phase(moved, omega, -omega * shift);
        CHECK(a.phase == doctest::Approx(b.phase).epsilon(1e-9));
        CHECK(a.depth == doctest::Approx(b.depth).epsilon(1e-9));
    }
    SUBCASE("too few photons") {
        PhotonRecord rec;
        for (int i = 0; i < 150; ++i) rec.timestamps.push_back(i * 1e-4);
        CHECK_THROWS_AS(rf_photon_phase(rec, omega, 0.0), TooFewPhotonsError);
    }
}

TEST_CASE("phase response scan") {
    const double gamma_true = constants::two_pi * 300.0;
    const double w0_true = constants::two_pi * 30e3;

    auto make_scan = [&](double noise_sigma, std::uint64_t seed, double scale = 1.0,
                         double offset = 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_sigma);
        std::vector<PhaseMeasurement> scan;
        for (int i = -8; i <= 8; ++i) {
            PhaseMeasurement m;
            m.drive_omega = (w0_true + i * constants::two_pi * 250.0) * scale;
            m.phase = 0.7 + offset -
                      std::atan((m.drive_omega - w0_true * scale) / (gamma_true * scale)) +
                      noise(rng);
            m.uncertainty = std::max(noise_sigma, 1e-3);
            m.depth = 0.5;
            scan.push_back(m);
        }
        return scan;
    };

    SUBCASE("recovers a planted gamma within 5% despite 1% phase noise") {
        const auto fit = phase_response_scan(make_scan(0.0314, 31));
        CHECK(std::abs(fit.gamma - gamma_true) < 0.05 * gamma_true);
        CHECK(std::abs(fit.omega_0 - w0_true) < 0.01 * w0_true);
        CHECK(fit.swing > constants::pi / 2);
    }
    SUBCASE("constant phase offset moves phi_0 only") {
        const auto a = phase_response_scan(make_scan(0.001, 37));
        const auto b = phase_response_scan(make_scan(0.001, 37, 1.0, 0.9));
        CHECK(b.phi_0 - a.phi_0 == doctest::Approx(0.9).epsilon(1e-3));
        CHECK(b.gamma == doctest::Approx(a.gamma).epsilon(1e-6));
        CHECK(b.omega_0 == doctest::Approx(a.omega_0).epsilon(1e-9));
    }
    SUBCASE("equivariance under frequency scaling") {
        const auto a = phase_response_scan(make_scan(0.001, 41));
        const auto b = phase_response_scan(make_scan(0.001, 41, 3.0));
        CHECK(b.gamma == doctest::Approx(3.0 * a.gamma).epsilon(1e-6));
        CHECK(b.omega_0 == doctest::Approx(3.0 * a.omega_0).epsilon(1e-9));
    }
    SUBCASE("narrow scan raises IncompleteSwing") {
        // All points far out on one wing: the observed swing is tiny.
        std::vector<PhaseMeasurement> scan;
        for (int i = 0; i <= 6; ++i) {
            PhaseMeasurement m;
            m.drive_omega = w0_true + (30.0 + i) * gamma_true;
            m.phase = -std::atan((m.drive_omega - w0_true) / gamma_true);
            m.uncertainty = 0.01;
            scan.push_back(m);
        }
        CHECK_THROWS_AS(phase_response_scan(scan), IncompleteSwingError);
    }
    SUBCASE("five points minimum") {
        std::vector<PhaseMeasurement> scan(4);
        CHECK_THROWS_AS(phase_response_scan(scan), FitFailedError);
    }
}

TEST_CASE("correlated fraction and the 1/N bound") {
    const double f_mod = 15e3, period = 1.0 / f_mod;
    const double kappa = 7.0;
    const double peak_rate = 1.2e5;
    const double duration = 10.0;
    auto ion_rate = [&](double t, double phase) {
        return peak_rate *
               std::exp(kappa * (std::cos(constants::two_pi * f_mod * t + phase) - 1.0));
    };

    auto analyse = [&](const PhotonRecord& rec) {
        const auto h = waiting_time_histogram(rec, 2e-6, 3.0 * period);
        const auto fit = fit_exponential_background(h);
        return correlated_fraction(h, fit, f_mod);
    };

    SUBCASE("single modulated emitter is strongly self-correlated") {
        const auto rec = thinned_stream([&](double t) { return ion_rate(t, 0.0); }, peak_rate,
                                        duration, 51);
        const auto frac = analyse(rec);
        CHECK(frac.fraction > 0.3);
    }
    SUBCASE("five incoherent ions obey fraction <= 1/5 + 3 sigma; coherent do not") {
        // Per-ion rate scaled down by N so the pooled stream keeps the same
        // sparsity as the single-emitter case (start-stop correlation washes
        // out when several photons land in one burst).
        std::mt19937_64 rng(53);
        std::uniform_real_distribution<double> u(0.0, constants::two_pi);
        std::vector<double> merged;
        for (int ion = 0; ion < 5; ++ion) {
            const double phase = u(rng);
            const auto rec =
                thinned_stream([&](double t) { return ion_rate(t, phase) / 5.0; },
                               peak_rate / 5.0, duration, 100 + ion);
            merged.insert(merged.end(), rec.timestamps.begin(), rec.timestamps.end());
        }
        std::sort(merged.begin(), merged.end());
        PhotonRecord pooled;
        pooled.timestamps = merged;
        const auto incoherent = analyse(pooled);
        CHECK(incoherent.fraction <= 0.2 + 3.0 * incoherent.sigma);

        std::vector<double> merged_coh;
        for (int ion = 0; ion < 5; ++ion) {
            const auto rec =
                thinned_stream([&](double t) { return ion_rate(t, 1.0) / 5.0; },
                               peak_rate / 5.0, duration, 200 + ion);
            merged_coh.insert(merged_coh.end(), rec.timestamps.begin(), rec.timestamps.end());
        }
        std::sort(merged_coh.begin(), merged_coh.end());
        PhotonRecord coherent;
        coherent.timestamps = merged_coh;
        const auto coh = analyse(coherent);
        CHECK(coh.fraction > 0.2 + 3.0 * coh.sigma);
        CHECK(coh.fraction > 2.0 * incoherent.fraction);
    }
    SUBCASE("missing peak is reported") {
        const auto rec = homogeneous_stream(2e4, 5.0, 57);
        const auto h = waiting_time_histogram(rec, 2e-6, 3.0 * period);
        const auto fit = fit_exponential_background(h);
        CHECK_THROWS_AS(correlated_fraction(h, fit, 1e-7), PeakNotFoundError);
    }
}
