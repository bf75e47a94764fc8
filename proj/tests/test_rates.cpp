#include "doctest.h"

#include "sirhjb/error.hpp"
#include "sirhjb/rates.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace sirhjb;

namespace {

RateSchedule scenario_b() {
    return RateSchedule(SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, RateBounds{0.4, 0.4, 0.1, 0.5});
}

RateSchedule scenario_c() {
    FrozenRates f{SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, std::log(10.0), 0.4, 0.3};
    return RateSchedule(f, RateBounds{0.4, 0.4, 0.3, 0.5});
}

} // namespace

TEST_CASE("eval_rates on constant, sinusoidal and frozen kinds") {
    const auto c = RateSchedule::constant(0.5, 0.2);
    CHECK(eval_rates(c, 3.7) == RatePair{0.5, 0.2});

    const auto b = scenario_b();
    const RatePair r = eval_rates(b, std::numbers::pi / 2);
    CHECK(r.beta == 0.4);
    CHECK(r.gamma == doctest::Approx(0.5).epsilon(1e-15));

    const auto fr = RateSchedule(FrozenRates{SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, 2.3026, 0.4, 0.3},
                                 RateBounds{0.4, 0.4, 0.3, 0.5});
    CHECK(eval_rates(fr, 5.0) == RatePair{0.4, 0.3});
    CHECK(fr.kind() == RateKind::frozen_after);
    CHECK(fr.constant_from() == 2.3026);
}

TEST_CASE("negative time is a domain error") {
    CHECK_THROWS_AS(eval_rates(RateSchedule::constant(0.5, 0.2), -1e-9), DomainError);
    CHECK_THROWS_AS(shift(RateSchedule::constant(0.5, 0.2), -1.0), DomainError);
    CHECK_THROWS_AS(shift_control(ControlSignal{}, -1.0), DomainError);
}

TEST_CASE("bounds are certified at construction") {
    CHECK_THROWS(RateSchedule(SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, RateBounds{0.4, 0.4, 0.15, 0.5}));
    CHECK_THROWS(RateSchedule(ConstantRates{0.5, 0.2}, RateBounds{0.6, 0.7, 0.1, 0.3}));
    CHECK_THROWS(RateSchedule(ConstantRates{0.5, 0.2}, RateBounds{0.0, 0.7, 0.1, 0.3}));
    CHECK_NOTHROW(scenario_b());
    CHECK_NOTHROW(scenario_c());
}

TEST_CASE("dense sampling of shipped schedules stays inside bounds") {
    for (const auto& s : {scenario_b(), scenario_c(), RateSchedule::constant(0.5, 0.2)}) {
        const RateBounds& b = s.bounds();
        for (int k = 0; k < 10000; ++k) {
            const RatePair r = s.at(100.0 * k / 9999.0);
            REQUIRE(r.beta >= b.beta_lo);
            REQUIRE(r.beta <= b.beta_hi);
            REQUIRE(r.gamma >= b.gamma_lo);
            REQUIRE(r.gamma <= b.gamma_hi);
        }
    }
}

TEST_CASE("shift identities") {
    const auto b = scenario_b();
    const auto z = shift(b, 0.0);
    for (int k = 0; k < 100; ++k) CHECK(z.at(0.37 * k) == b.at(0.37 * k));

    const auto c = RateSchedule::constant(0.5, 0.2);
    const auto cs = shift(c, 12.5);
    for (int k = 0; k < 100; ++k) CHECK(cs.at(0.37 * k) == c.at(0.37 * k));

    const auto bp = shift(b, std::numbers::pi);
    CHECK(bp.at(0.0).gamma == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(bp.at(std::numbers::pi / 2).gamma == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(bp.bounds().gamma_lo == b.bounds().gamma_lo);
}

TEST_CASE("double shift composes exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (const auto& s : {scenario_b(), scenario_c()}) {
        for (int trial = 0; trial < 20; ++trial) {
            const double a = u(rng), b = u(rng);
            const auto twice = shift(shift(s, a), b);
            const auto once = shift(s, a + b);
            for (int k = 0; k < 100; ++k) {
                const double t = 0.1 * k;
                CHECK(twice.at(t).gamma == doctest::Approx(once.at(t).gamma).epsilon(1e-14));
                CHECK(twice.at(t).beta == once.at(t).beta);
            }
        }
    }
}

TEST_CASE("frozen schedule is continuous across its ramp") {
    const auto c = scenario_c();
    const double tf = c.constant_from();
    double prev = c.at(tf - 0.01).gamma;
    for (int k = 1; k <= 2000; ++k) {
        const double t = tf - 0.01 + 0.02 * k / 2000.0;
        const double g = c.at(t).gamma;
        CHECK(std::abs(g - prev) <= 0.2 / 1e-3 * (0.02 / 2000.0));
        prev = g;
    }
    CHECK(c.at(tf).gamma == 0.3);
    CHECK(c.terminal_rates().value() == RatePair{0.4, 0.3});
    CHECK(shift(c, 1.0).constant_from() == doctest::Approx(tf - 1.0));
    CHECK(shift(c, 5.0).constant_from() == 0.0);
}

TEST_CASE("piecewise kind is smoothed by ramps") {
    PiecewiseRates p{{2.0}, {0.5, 0.3}, {0.2, 0.2}, 1e-3};
    const RateSchedule s(p, RateBounds{0.3, 0.5, 0.2, 0.2});
    CHECK(s.at(1.0).beta == 0.5);
    CHECK(s.at(2.0).beta == doctest::Approx(0.4));
    CHECK(s.at(2.1).beta == 0.3);
    CHECK(s.kind() == RateKind::piecewise_constant);
    CHECK(s.integral(0.0, 4.0).beta == doctest::Approx(0.5 * 2.0 + 0.3 * 2.0).epsilon(1e-14));
    CHECK_THROWS(RateSchedule(PiecewiseRates{{2.0}, {0.5}, {0.2, 0.2}}, RateBounds{0.3, 0.5, 0.2, 0.2}));
}

TEST_CASE("rate integrals match composite quadrature") {
    for (const auto& s : {scenario_b(), scenario_c(), shift(scenario_c(), 1.3)}) {
        for (auto [a, b] : {std::pair{0.0, 1.0}, std::pair{0.5, 7.25}, std::pair{2.0, 2.4}}) {
            const int n = 200000;
            double qb = 0.0, qg = 0.0;
            for (int k = 0; k < n; ++k) {
                const double t = a + (b - a) * (k + 0.5) / n;
                qb += s.at(t).beta;
                qg += s.at(t).gamma;
            }
            qb *= (b - a) / n;
            qg *= (b - a) / n;
            const RatePair r = s.integral(a, b);
            CHECK(r.beta == doctest::Approx(qb).epsilon(1e-9));
            CHECK(r.gamma == doctest::Approx(qg).epsilon(1e-8));
        }
    }
}

TEST_CASE("control evaluation is right-continuous") {
    CHECK(eval_control(ControlSignal::constant(1.0), 7.0) == 1.0);
    const ControlSignal step({2.0}, {0.0, 1.0});
    CHECK(eval_control(step, 2.0) == 1.0);
    CHECK(eval_control(step, 1.999999) == 0.0);
    const ControlSignal pulse({1.0, 3.0}, {0.0, 1.0, 0.0});
    CHECK(eval_control(pulse, 2.5) == 1.0);
    CHECK(eval_control(pulse, 3.0) == 0.0);
}

TEST_CASE("control validation") {
    CHECK_THROWS(ControlSignal({1.0, 1.0}, {0.0, 1.0, 0.0}));
    CHECK_THROWS(ControlSignal({2.0, 1.0}, {0.0, 1.0, 0.0}));
    CHECK_THROWS(ControlSignal({1.0}, {0.0, 1.5}));
    CHECK_THROWS(ControlSignal({1.0}, {0.0}));
    CHECK_THROWS(ControlSignal({0.0}, {0.0, 1.0}));
}

TEST_CASE("shift_control re-indexes") {
    CHECK(shift_control(ControlSignal{}, 5.0) == ControlSignal{});
    const ControlSignal pulse({1.0, 3.0}, {0.0, 1.0, 0.0});
    const ControlSignal s = shift_control(pulse, 2.0);
    CHECK(s.breakpoints() == std::vector<double>{1.0});
    CHECK(s.values() == std::vector<double>{1.0, 0.0});
    CHECK(shift_control(pulse, 0.0) == pulse);
}

TEST_CASE("shift_control matches evaluation on random controls") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> b;
        std::vector<double> v{double(rng() % 2)};
        double t = 0.0;
        const int n = int(rng() % 6);
        for (int k = 0; k < n; ++k) {
            t += 0.1 + 3.0 * u(rng);
            b.push_back(t);
            v.push_back(u(rng));
        }
        const ControlSignal c(b, v);
        const double t0 = 10.0 * u(rng);
        const ControlSignal s = shift_control(c, t0);
        for (int k = 0; k < 100; ++k) {
            const double q = 0.123 * k;
            REQUIRE(s.at(q) == c.at(q + t0));
        }
        const ControlSignal back = shift_control(c.delayed(t0), t0);
        CHECK(back.values() == c.values());
        REQUIRE(back.breakpoints().size() == c.breakpoints().size());
        for (std::size_t k = 0; k < b.size(); ++k)
            CHECK(back.breakpoints()[k] == doctest::Approx(b[k]).epsilon(1e-14));
        CHECK(c.canonical().values().size() <= c.values().size());
    }
}
