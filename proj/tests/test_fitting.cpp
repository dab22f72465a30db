#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "penning/constants.hpp"
#include "penning/fitting.hpp"

using namespace penning;

TEST_CASE("linear fit recovers slope, intercept, r^2") {
    std::vector<double> x{0, 1, 2, 3, 4}, y;
    for (double v : x) y.push_back(3.0 - 2.0 * v);
    const auto f = fit_linear(x, y);
    CHECK(f.slope == doctest::Approx(-2.0));
    CHECK(f.intercept == doctest::Approx(3.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
}

TEST_CASE("levenberg-marquardt fits a noisy exponential") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> noise(0.0, 0.5);
    const double a_true = 120.0, r_true = 3.0;
    const int n = 200;
    std::vector<double> t(n), y(n);
    for (int i = 0; i < n; ++i) {
        t[i] = i * 0.01;
        y[i] = a_true * std::exp(-r_true * t[i]) + noise(rng);
    }
    auto model = [&](std::span<const double> p, std::span<double> out) {
        for (int i = 0; i < n; ++i) out[i] = p[0] * std::exp(-p[1] * t[i]);
    };
    const std::vector<double> init{50.0, 1.0};
    const auto res = fit_levenberg_marquardt(model, y, {}, init);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(a_true).epsilon(0.02));
    CHECK(res.params[1] == doctest::Approx(r_true).epsilon(0.02));
}

TEST_CASE("levenberg-marquardt handles the arctan resonance model") {
    const double phi0 = 0.4, w0 = 2.0e5, g = 1.5e3;
    const int n = 15;
    std::vector<double> w(n), y(n);
    for (int i = 0; i < n; ++i) {
        w[i] = w0 + (i - n / 2) * 1.2e3;
        y[i] = phi0 - std::atan((w[i] - w0) / g);
    }
    auto model = [&](std::span<const double> p, std::span<double> out) {
        for (int i = 0; i < n; ++i) out[i] = p[0] - std::atan((w[i] - p[1]) / std::exp(p[2]));
    };
    const std::vector<double> init{0.0, w0 + 4e3, std::log(5e3)};
    const auto res = fit_levenberg_marquardt(model, y, {}, init);
    CHECK(res.converged);
    CHECK(res.params[0] == doctest::Approx(phi0).epsilon(1e-6));
    CHECK(res.params[1] == doctest::Approx(w0).epsilon(1e-6));
    CHECK(std::exp(res.params[2]) == doctest::Approx(g).epsilon(1e-6));
}

TEST_CASE("phase unwrap removes 2pi jumps") {
    std::vector<double> phi;
    for (int i = 0; i < 40; ++i) {
        double p = 0.3 * i;
        while (p > constants::pi) p -= constants::two_pi;
        phi.push_back(p);
    }
    unwrap_phases(phi);
    for (int i = 1; i < 40; ++i)
        CHECK(phi[i] - phi[i - 1] == doctest::Approx(0.3).epsilon(1e-12));
}
