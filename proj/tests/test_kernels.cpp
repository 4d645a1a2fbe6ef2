#include "opo/kernels.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>

using namespace opo;
using namespace opo::kernels;

TEST_CASE("homodyne block statistics")
{
    const CounterRng rng(3);
    HomodyneBlock b{1.0, 2.0e-7, 0.0, 1'000'000, 5};
    CHECK(block_power_parallel(b, rng) == doctest::Approx(2.0e-7).epsilon(0.005));

    b.variance = 0.6514;
    b.shot = 1.0;
    const double rel = 10.0 * std::log10(block_power_parallel(b, rng));
    CHECK(std::abs(rel + 1.86) < 0.05);

    HomodyneBlock dark{1.0, 0.0, 8.4e-8, 1'000'000, 9};
    CHECK(block_power_serial(dark, rng) == doctest::Approx(8.4e-8).epsilon(0.005));
}

TEST_CASE("homodyne kernel: serial and parallel agree")
{
    const CounterRng rng(17);
    for (std::uint64_t n : {std::uint64_t{1}, std::uint64_t{6000}, std::uint64_t{100'003}}) {
        const HomodyneBlock b{1.3, 1e-6, 2e-7, n, 42};
        CHECK(block_power_parallel(b, rng) == doctest::Approx(block_power_serial(b, rng)).epsilon(1e-12));
    }
}

TEST_CASE("parallel kernels are bit-identical across thread counts")
{
    const CounterRng rng(99);
    const HomodyneBlock b{0.8, 1e-6, 1e-7, 300'000, 7};
    GridSpec g{35.2, 36.0, 37.0, -0.5, 1.0, 101, 151};
    ThresholdTrials trials{{0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.20, 0.23}, 0.87, 0.02, 64};

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double p1 = block_power_parallel(b, rng);
    const auto g1 = tuning_grid_scan_parallel(g, optics::TuningResponse{});
    const auto m1 = threshold_fit_trials_parallel(trials, rng);
    for (int threads : {2, 3, 4}) {
        omp_set_num_threads(threads);
        CHECK(block_power_parallel(b, rng) == p1);
        const auto gn = tuning_grid_scan_parallel(g, optics::TuningResponse{});
        CHECK(gn.T_S == g1.T_S);
        CHECK(gn.T_D == g1.T_D);
        CHECK(gn.factor == g1.factor);
        CHECK(threshold_fit_trials_parallel(trials, rng) == m1);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("tuning grid scan")
{
    const optics::TuningResponse r;
    GridSpec g{r.T_A_opt, 36.0, 37.0, -0.2, 0.8, 201, 201};
    const auto s = tuning_grid_scan_serial(g, r);
    const auto p = tuning_grid_scan_parallel(g, r);
    CHECK(s.T_S == p.T_S);
    CHECK(s.T_D == p.T_D);
    // grid spacing 0.005 on both axes and the optimum lies on a node
    CHECK(s.T_S == doctest::Approx(r.T_S_opt).epsilon(1e-9));
    CHECK(s.T_D == doctest::Approx(r.T_D_opt).epsilon(1e-9));
    CHECK(s.factor == doctest::Approx(1.0));
}

TEST_CASE("threshold Monte-Carlo trials")
{
    const CounterRng rng(5);
    ThresholdTrials t{{0.02, 0.05, 0.08, 0.11, 0.14, 0.17, 0.20, 0.23}, 0.87, 0.02, 200};
    const auto s = threshold_fit_trials_serial(t, rng);
    const auto p = threshold_fit_trials_parallel(t, rng);
    REQUIRE(s.size() == 200);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(s[i] == doctest::Approx(p[i]).epsilon(1e-12));

    t.relative_noise = 0.0;
    for (double v : threshold_fit_trials_parallel(t, rng))
        CHECK(std::abs(v - 0.87) < 1e-6);
}
