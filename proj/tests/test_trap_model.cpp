#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "penning/errors.hpp"
#include "penning/trap_model.hpp"
#include "test_util.hpp"

using namespace penning;
using testutil::ulp_distance;

namespace {

// Independent oracle: literal evaluation of the frequency formulas, without
// the rationalized omega_m used by the implementation.
ModeFrequencies oracle_frequencies(const ParticleSpecies& sp, const TrapGeometry& g,
                                   const TrapFields& f) {
    ModeFrequencies o;
    o.omega_c = sp.charge * f.magnetic_field / sp.mass;
    o.omega_z = std::sqrt(4.0 * sp.charge * f.trap_voltage / (sp.mass * g.r_squared()));
    o.omega_1 = std::sqrt(o.omega_c * o.omega_c / 4.0 - o.omega_z * o.omega_z / 2.0);
    o.omega_c_prime = o.omega_c / 2.0 + o.omega_1;
    o.omega_m = o.omega_c / 2.0 - o.omega_1;
    return o;
}

const double kTwoPi = constants::two_pi;

} // namespace

TEST_CASE("mg24 reference point reproduces the expected kHz-scale frequencies") {
    const auto sp = ParticleSpecies::mg24();
    const auto g = TrapGeometry::ideal(5e-3);
    const TrapFields f{1.0, 4.7};

    const auto m = derive_frequencies(sp, g, f);
    const auto o = oracle_frequencies(sp, g, f);

    // Frozen oracle values (direct evaluation with CODATA 2018 constants).
    CHECK(m.omega_c / kTwoPi == doctest::Approx(640238.38).epsilon(1e-6));
    CHECK(m.omega_z / kTwoPi == doctest::Approx(195737.86).epsilon(1e-6));
    CHECK(m.omega_c_prime / kTwoPi == doctest::Approx(608770.61).epsilon(1e-6));
    CHECK(m.omega_m / kTwoPi == doctest::Approx(31467.77).epsilon(1e-6));

    CHECK(testutil::close_rel(m.omega_c, o.omega_c, 1e-15));
    CHECK(testutil::close_rel(m.omega_m, o.omega_m, 1e-12));
    CHECK(testutil::close_rel(m.omega_c_prime, o.omega_c_prime, 1e-15));

    // Fig 1 caption scale: roughly 2 pi x 600 kHz and 2 pi x 30 kHz.
    CHECK(m.omega_c_prime / kTwoPi > 550e3);
    CHECK(m.omega_c_prime / kTwoPi < 650e3);
    CHECK(m.omega_m / kTwoPi > 25e3);
    CHECK(m.omega_m / kTwoPi < 40e3);
}

TEST_CASE("zero voltage kills the magnetron and axial modes") {
    const auto sp = ParticleSpecies::mg24();
    const auto m = derive_frequencies(sp, TrapGeometry::ideal(5e-3), TrapFields{1.0, 0.0});
    CHECK(m.omega_z == 0.0);
    CHECK(m.omega_m == 0.0);
    CHECK(m.omega_c_prime == m.omega_c);
}

TEST_CASE("overlarge voltage reports the stability limit") {
    const auto sp = ParticleSpecies::mg24();
    const auto g = TrapGeometry::ideal(5e-3);
    // Find the boundary: omega_z^2/2 = omega_c^2/4.
    const double wc = sp.charge * 1.0 / sp.mass;
    const double v_max = sp.mass * g.r_squared() * wc * wc / (8.0 * sp.charge);
    CHECK_THROWS_AS(derive_frequencies(sp, g, TrapFields{1.0, 1.01 * v_max}),
                    UnstableTrapError);
    try {
        derive_frequencies(sp, g, TrapFields{1.0, 1.01 * v_max});
    } catch (const UnstableTrapError& e) {
        CHECK(e.max_stable_voltage == doctest::Approx(v_max).epsilon(1e-9));
    }
    CHECK_NOTHROW(derive_frequencies(sp, g, TrapFields{1.0, 0.99 * v_max}));
}

TEST_CASE("algebraic identities hold to <= 4 ulp over random configurations") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> b_dist(0.2, 5.0);
    std::uniform_real_distribution<double> r_dist(1e-3, 2e-2);
    std::uniform_real_distribution<double> mass_dist(5.0, 200.0);
    std::uniform_real_distribution<double> frac(0.0, 0.999);

    std::uint64_t worst_sum = 0, worst_prod = 0;
    for (int i = 0; i < 10000; ++i) {
        ParticleSpecies sp;
        sp.mass = mass_dist(rng) * constants::atomic_mass_unit;
        sp.natural_linewidth = 1.0;
        const auto g = TrapGeometry::ideal(r_dist(rng));
        const double b = b_dist(rng);
        const double wc = sp.charge * b / sp.mass;
        const double v_max = sp.mass * g.r_squared() * wc * wc / (8.0 * sp.charge);
        const TrapFields f{b, frac(rng) * v_max};

        const auto m = derive_frequencies(sp, g, f);
        worst_sum = std::max(worst_sum, ulp_distance(m.omega_c_prime + m.omega_m, m.omega_c));
        worst_prod = std::max(
            worst_prod,
            ulp_distance(m.omega_c_prime * m.omega_m, m.omega_z * m.omega_z / 2.0));
        // omega_m <= omega_1 holds only away from the stability edge
        // (algebraically: omega_z^2 <= 3 omega_c^2 / 8).
        if (m.omega_z * m.omega_z <= 0.375 * m.omega_c * m.omega_c)
            CHECK(m.omega_m <= m.omega_1 + 1e-9 * m.omega_c);
        CHECK(m.omega_1 <= m.omega_c_prime + 1e-9 * m.omega_c);
        CHECK(m.omega_m <= m.omega_c_prime + 1e-9 * m.omega_c);
    }
    CHECK(worst_sum <= 4);
    CHECK(worst_prod <= 4);
}

TEST_CASE("magnetron frequency is monotone in voltage, modified cyclotron opposite") {
    const auto sp = ParticleSpecies::mg24();
    const auto g = TrapGeometry::ideal(5e-3);
    double prev_m = -1.0, prev_cp = 1e12;
    for (int i = 0; i <= 50; ++i) {
        const auto m = derive_frequencies(sp, g, TrapFields{1.0, 0.2 * i});
        CHECK(m.omega_m > prev_m);
        CHECK(m.omega_c_prime < prev_cp);
        prev_m = m.omega_m;
        prev_cp = m.omega_c_prime;
    }
}

TEST_CASE("voltage_for_magnetron_frequency inverts derive_frequencies") {
    const auto sp = ParticleSpecies::mg24();
    const auto g = TrapGeometry::ideal(5e-3);

    SUBCASE("bisection oracle confirms the closed form near 4.7 V") {
        const double target = 31.6e3;
        const double v = voltage_for_magnetron_frequency(sp, g, 1.0, target);
        CHECK(v == doctest::Approx(4.7187).epsilon(1e-3)); // frozen oracle value

        // Oracle: bisect omega_m(V) - target on [0, v_max].
        const double wc = sp.charge / sp.mass;
        double lo = 0.0, hi = sp.mass * g.r_squared() * wc * wc / (8.0 * sp.charge);
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto m = derive_frequencies(sp, g, TrapFields{1.0, mid});
            (m.omega_m / constants::two_pi < target ? lo : hi) = mid;
        }
        CHECK(v == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-9));
    }

    SUBCASE("round trip hits the target within 1e-9 relative") {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> t_dist(1e2, 200e3);
        for (int i = 0; i < 200; ++i) {
            const double target = t_dist(rng);
            double v;
            try {
                v = voltage_for_magnetron_frequency(sp, g, 1.0, target);
            } catch (const UnreachableError&) {
                continue; // target above f_c/2 for this draw
            }
            const auto m = derive_frequencies(sp, g, TrapFields{1.0, v});
            CHECK(testutil::close_rel(m.omega_m / constants::two_pi, target, 1e-9));
        }
    }

    SUBCASE("edge cases") {
        CHECK(voltage_for_magnetron_frequency(sp, g, 1.0, 0.0) == 0.0);
        const double f_c = sp.charge / sp.mass / constants::two_pi;
        CHECK_THROWS_AS(voltage_for_magnetron_frequency(sp, g, 1.0, f_c / 2.0),
                        UnreachableError);
    }
}
