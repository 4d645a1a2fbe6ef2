#include "opo/errors.hpp"
#include "opo/optics.hpp"

#include <doctest.h>

#include <cmath>

using namespace opo;
using namespace opo::optics;

namespace
{
double db(double x) { return 10.0 * std::log10(x); }
} // namespace

TEST_CASE("gain from seed extremes")
{
    CHECK(gain_from_minmax(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(gain_from_minmax(9.0, 1.0) == doctest::Approx(4.0));
    CHECK(gain_from_minmax(4.0, 1.0) == doctest::Approx(2.25));
    CHECK_THROWS_AS(gain_from_minmax(1.0, 0.0), Error);
    CHECK_THROWS_AS(gain_from_minmax(0.5, 1.0), Error);
}

TEST_CASE("parametric gain below threshold")
{
    CHECK(parametric_gain(0.0, 0.87) == 1.0);
    CHECK(parametric_gain(0.2175, 0.87) == doctest::Approx(4.0).epsilon(1e-12));
    // (1 - mu)^2 = 1/1.4 solved by hand
    const double mu = 1.0 - 1.0 / std::sqrt(1.4);
    CHECK(pump_for_gain(1.4, 0.87) == doctest::Approx(0.87 * mu * mu).epsilon(1e-12));
    CHECK(pump_for_gain(1.4, 0.87) == doctest::Approx(0.0209).epsilon(0.01));
    CHECK_THROWS_WITH_AS(pump_parameter(0.87, 0.87), doctest::Contains("threshold"), Error);
    CHECK_THROWS_AS(parametric_gain(1.0, 0.87), Error);
    CHECK_THROWS_AS(pump_for_gain(0.5, 0.87), Error);
}

TEST_CASE("seed extremes close onto the gain formula")
{
    for (double p : {0.001, 0.02, 0.1, 0.3, 0.6, 0.85}) {
        const double mu = pump_parameter(p, 0.87);
        const double g = gain_from_minmax(amplified_gain(mu), deamplified_gain(mu));
        CHECK(std::abs(g - parametric_gain(p, 0.87)) < 1e-9 * g);
    }
}

TEST_CASE("oscillation threshold")
{
    CavityParams c;
    c.d_per_cm = 7.43e-4;
    c.crystal_length_cm = 1.0;
    const double tp = 0.31, t = 0.14, enl = 7.43e-4;
    const double b = (2.0 - tp / 2.0) * (2.0 - tp / 2.0);
    const double expect = tp / (1.0 - tp) * t * t / (4.0 * b * enl);
    CHECK(threshold_power(c) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(threshold_power(c) - 0.870) < 1e-3);

    CavityParams twice = c;
    twice.d_per_cm *= 2.0;
    CHECK(threshold_power(twice) == doctest::Approx(threshold_power(c) / 2.0));
    CavityParams wide = c;
    wide.T_out *= 2.0;
    CHECK(threshold_power(wide) == doctest::Approx(4.0 * threshold_power(c)));

    CavityParams none = c;
    none.d_per_cm = 0.0;
    try {
        threshold_power(none);
        FAIL("expected infinite threshold");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::infinite_threshold);
    }
}

TEST_CASE("default cavity sits near the fitted threshold")
{
    CHECK(threshold_power(CavityParams{}) == doctest::Approx(0.8716).epsilon(1e-3));
}

TEST_CASE("quadrature noise spectra")
{
    for (double w : {0.0, 10.0, 300.0}) {
        CHECK(quadrature_noise(w, 0.0, 0.75, Quadrature::squeezed) == 1.0);
        CHECK(quadrature_noise(w, 0.0, 0.3, Quadrature::antisqueezed) == 1.0);
    }
    const double mu = 0.155, eta = 0.75;
    const double sq = 1.0 - 4.0 * eta * mu / ((1.0 + mu) * (1.0 + mu));
    const double asq = 1.0 + 4.0 * eta * mu / ((1.0 - mu) * (1.0 - mu));
    CHECK(quadrature_noise(0.0, mu, eta, Quadrature::squeezed) == doctest::Approx(sq).epsilon(1e-14));
    CHECK(quadrature_noise(0.0, mu, eta, Quadrature::antisqueezed) == doctest::Approx(asq).epsilon(1e-14));
    CHECK(sq == doctest::Approx(0.6514).epsilon(1e-3));
    CHECK(asq == doctest::Approx(1.651).epsilon(1e-3));
    CHECK(std::abs(db(sq) + 1.86) < 0.01);
    CHECK(std::abs(db(asq) - 2.18) < 0.01);

    // frequency enters through (freq / halfwidth)^2
    const double x = 10.0 / 125.0;
    CHECK(quadrature_noise(10.0, mu, eta, Quadrature::squeezed) ==
          doctest::Approx(1.0 - 4.0 * eta * mu / ((1.0 + mu) * (1.0 + mu) + x * x)));
    CHECK(std::abs(quadrature_noise(1e7, 0.5, 0.9, Quadrature::squeezed) - 1.0) < 1e-9);
    CHECK(std::abs(quadrature_noise(1e7, 0.5, 0.9, Quadrature::antisqueezed) - 1.0) < 1e-9);

    CHECK_THROWS_AS(quadrature_noise(0.0, 1.0, 0.75, Quadrature::squeezed), Error);
    CHECK_THROWS_AS(quadrature_noise(0.0, 0.1, 1.5, Quadrature::squeezed), Error);
}

TEST_CASE("noise property grid")
{
    for (int i = 1; i <= 95; ++i) {
        const double mu = 0.01 * i;
        const double product = quadrature_noise(0.0, mu, 1.0, Quadrature::squeezed) *
                               quadrature_noise(0.0, mu, 1.0, Quadrature::antisqueezed);
        CHECK(std::abs(product - 1.0) < 1e-12);
        for (double eta : {0.1, 0.5, 0.75, 1.0})
            for (double w : {0.0, 50.0, 125.0, 1000.0}) {
                CHECK(quadrature_noise(w, mu, eta, Quadrature::squeezed) >= 1.0 - eta - 1e-15);
                CHECK(quadrature_noise(w, mu, eta, Quadrature::antisqueezed) >= 1.0);
            }
    }
}

TEST_CASE("passive loss map")
{
    CHECK(apply_passive_loss(1.0, 0.5) == 1.0);
    CHECK(apply_passive_loss(0.7943, 0.5) == doctest::Approx(0.89715).epsilon(1e-4));
    CHECK(std::abs(db(apply_passive_loss(std::pow(10.0, -0.1), 0.5)) + 0.47) < 0.01);
    CHECK(apply_passive_loss(0.3, 0.0) == 1.0);
    CHECK(apply_passive_loss(3.0, 0.0) == 1.0);
    for (double v : {0.2, 0.65, 1.0, 1.8})
        for (double a : {0.1, 0.5, 0.9})
            for (double b : {0.3, 0.7})
                CHECK(apply_passive_loss(apply_passive_loss(v, a), b) ==
                      doctest::Approx(apply_passive_loss(v, a * b)).epsilon(1e-14));
    CHECK_THROWS_AS(apply_passive_loss(1.0, 1.2), Error);
}

TEST_CASE("thermal tuning response")
{
    const TuningResponse r;
    CHECK(tuning_factor(r.optimum(), r) == doctest::Approx(1.0));
    auto off_s = ThermalState::from_coordinates(r.T_A_opt, r.T_S_opt + r.w_S, r.T_D_opt);
    CHECK(tuning_factor(off_s, r) == doctest::Approx(0.5));
    auto off_d = ThermalState::from_coordinates(r.T_A_opt, r.T_S_opt, r.T_D_opt + 0.5 * r.lambda_D);
    CHECK(tuning_factor(off_d, r) == doctest::Approx(0.0).epsilon(1e-12));
    auto off_a = ThermalState::from_coordinates(r.T_A_opt + r.w_A, r.T_S_opt, r.T_D_opt);
    CHECK(tuning_factor(off_a, r) == doctest::Approx(0.0).epsilon(1e-12));

    const auto t = ThermalState::from_coordinates(35.0, 36.4, -0.25);
    CHECK(t.sum_coordinate() == doctest::Approx(36.4));
    CHECK(t.diff_coordinate() == doctest::Approx(-0.25));
}

TEST_CASE("slow resonance shift relaxation")
{
    KerrState k;
    k.coupling = 3.0;
    CHECK(kerr_step({}, 0.0, 1.0).shift == 0.0);
    const auto one_tau = kerr_step(k, 2.0, k.tau_s);
    CHECK(one_tau.shift == doctest::Approx(6.0 * (1.0 - std::exp(-1.0))).epsilon(1e-12));
    KerrState s = k;
    for (int i = 0; i < 2000; ++i)
        s = kerr_step(s, 2.0, 0.1);
    CHECK(s.shift == doctest::Approx(6.0).epsilon(1e-6));
}
