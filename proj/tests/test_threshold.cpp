#include "doctest.h"

#include "sirhjb/eradication.hpp"
#include "sirhjb/error.hpp"
#include "sirhjb/threshold.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace sirhjb;

namespace {

RateSchedule scenario_a() { return RateSchedule::constant(0.5, 0.2); }

RateSchedule scenario_b() {
    return RateSchedule(SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, RateBounds{0.4, 0.4, 0.1, 0.5});
}

RateSchedule scenario_c() {
    return RateSchedule(FrozenRates{SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, std::log(10.0), 0.4, 0.3},
                        RateBounds{0.4, 0.4, 0.3, 0.5});
}

ControlSignal random_control(std::mt19937_64& rng, double span) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> b;
    std::vector<double> v{u(rng) < 0.5 ? 0.0 : 1.0};
    const int n = int(rng() % 7);
    double t = 0.0;
    for (int k = 0; k < n; ++k) {
        t += 0.05 + span * u(rng) / (n + 1);
        b.push_back(t);
        v.push_back(1.0 - v.back());
    }
    return ControlSignal(b, v);
}

} // namespace

TEST_CASE("exit time at the lower end of X is zero") {
    CHECK(exit_time(0.25, scenario_b(), ControlSignal{}, 0.1) == 0.0);
    CHECK(exit_time(scenario_c().x_lo(), scenario_c(), ControlSignal{}, 0.1) == 0.0);
}

TEST_CASE("vaccination never delays the exit") {
    const auto c = scenario_c();
    for (double x0 : {0.8, 0.95, 1.1, 1.25}) {
        const double lazy = exit_time(x0, c, ControlSignal{}, 0.1);
        const double full = exit_time(x0, c, ControlSignal::constant(1.0), 0.1);
        CHECK(full <= lazy);
    }
}

TEST_CASE("scenario C exit time against the oracle") {
    // DOP853 at rtol 1e-12 with max step 1e-3 on the frozen schedule, event S = 0.75.
    CHECK(std::abs(exit_time(1.25, scenario_c(), ControlSignal{}, 0.1) - 8.992676040886145) < 1e-7);
    CHECK(std::abs(exit_time(1.25, shift(scenario_c(), 0.0719557841560639), ControlSignal{}, 0.1) -
                   8.994169288321316) < 1e-7);
}

TEST_CASE("scenario B exit-time map is unbounded") {
    // From (1.25, 0.1) the DOP853 oracle settles at S = 0.32664 > 0.25 with I ~ 1e-22 at s = 400,
    // so S never reaches gamma_lo / beta_hi.
    ExitOptions opt;
    opt.horizon_cap = 2000.0;
    try {
        exit_time(1.25, scenario_b(), ControlSignal{}, 0.1, opt);
        FAIL("expected non-termination");
    } catch (const NonTerminationError& e) {
        CHECK(e.reached() == 2000.0);
        CHECK(std::string(e.what()).find("S = 0.3266") != std::string::npos);
    }
}

TEST_CASE("sweep on degenerate and constant domains") {
    const ExitSweep s = sup_exit_time(scenario_a(), 0.1, 8);
    CHECK(s.M_hat == 0.0);
    CHECK(s.phase_count == 1);
    CHECK_THROWS(sup_exit_time(scenario_a(), 0.1, 1));
}

TEST_CASE("scenario C sweep: phase maximiser and sampling stability") {
    const ExitSweep s64 = sup_exit_time(scenario_c(), 0.1, 64);
    CHECK(s64.argmax_x0 == 1.25);
    CHECK(std::abs(s64.max_observed - 8.994169288321316) < 1e-7);
    CHECK(s64.M_hat == doctest::Approx(1.1 * s64.max_observed).epsilon(1e-15));
    const ExitSweep s128 = sup_exit_time(scenario_c(), 0.1, 128);
    CHECK(s128.max_observed >= s64.max_observed - 1e-12);
    CHECK(std::abs(s128.M_hat - s64.M_hat) < 0.1 * s64.M_hat);
}

TEST_CASE("mu1 certificates") {
    const Mu1Certificate a = mu1(0.1, scenario_a(), 64);
    CHECK(a.M == 0.0);
    CHECK(a.mu1 == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(a.X_lo == a.X_hi);

    const Mu1Certificate c = mu1(0.1, scenario_c(), 64);
    CHECK(c.route == Mu1Route::freeze_time);
    CHECK(c.M == doctest::Approx(std::log(10.0)).epsilon(1e-15));
    CHECK(c.mu1 == doctest::Approx(0.05 / std::sqrt(10.0)).epsilon(1e-14));
    CHECK(c.mu1 == doctest::Approx(0.5 * c.mu0 * std::exp(-0.5 * c.M)).epsilon(1e-15));
    REQUIRE(c.sweep_M_hat.has_value());
    CHECK(*c.sweep_M_hat > c.M);

    Mu1Options sub;
    sub.x_domain_max = 0.2;
    const Mu1Certificate s = mu1(0.1, scenario_b(), 64, sub);
    CHECK(s.route == Mu1Route::subcritical);
    CHECK(s.mu1 == 0.1);

    Mu1Options quick;
    quick.sweep.exit.horizon_cap = 500.0;
    CHECK_THROWS_AS(mu1(0.1, scenario_b(), 64, quick), NonTerminationError);

    std::ostringstream os;
    c.write_report(os);
    CHECK(os.str().find("route: freeze_time\n") != std::string::npos);
    CHECK(os.str().find("mu1: 0.0158113883") != std::string::npos);
}

TEST_CASE("stationary values stay above mu1 on random data") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& sch : {scenario_a(), scenario_c()}) {
        const Mu1Certificate cert = mu1(0.1, sch, 64);
        for (int trial = 0; trial < 300; ++trial) {
            const Datum d{2.0 * u(rng), 0.1 + 0.9 * u(rng), 2.0 * std::numbers::pi * u(rng), random_control(rng, 20.0)};
            Trajectory tr = flow(d, sch, 0.0);
            certified_horizon(tr, cert.mu1);
            for (double s : tr.extrema()) REQUIRE(tr.state(s).I > cert.mu1);
        }
    }
}
