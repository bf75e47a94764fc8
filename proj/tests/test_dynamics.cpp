#include "doctest.h"

#include "sirhjb/dynamics.hpp"
#include "sirhjb/error.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace sirhjb;

namespace {

RateSchedule scenario_b() {
    return RateSchedule(SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, RateBounds{0.4, 0.4, 0.1, 0.5});
}

// Independent reference: plain midpoint-free RK4 on the raw system, no dense output,
// no step-grid alignment; used with Richardson extrapolation as an oracle.
std::pair<double, double> reference_rk4(double S, double I, double beta, double gamma, double T, int n) {
    const double h = T / n;
    auto f = [&](double s, double i) { return std::pair{-beta * s * i, beta * s * i - gamma * i}; };
    for (int k = 0; k < n; ++k) {
        auto [a1, b1] = f(S, I);
        auto [a2, b2] = f(S + 0.5 * h * a1, I + 0.5 * h * b1);
        auto [a3, b3] = f(S + 0.5 * h * a2, I + 0.5 * h * b2);
        auto [a4, b4] = f(S + h * a3, I + h * b3);
        S += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
        I += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
    }
    return {S, I};
}

} // namespace

TEST_CASE("derivative examples") {
    const auto sch = RateSchedule::constant(0.5, 0.2);
    const Derivative z = derivative(0.0, 0.3, 1.0, sch, 1.0);
    CHECK(z.dS == 0.0);
    CHECK(z.dI == doctest::Approx(-0.2 * 0.3));
    const Derivative d0 = derivative(1.0, 0.1, 0.0, sch, 0.0);
    CHECK(d0.dS == doctest::Approx(-0.05));
    CHECK(d0.dI == doctest::Approx(0.03));
    const Derivative d1 = derivative(1.0, 0.1, 0.0, sch, 1.0);
    CHECK(d1.dS == doctest::Approx(-1.05));
    CHECK(d1.dI == doctest::Approx(0.03));
}

TEST_CASE("lipschitz_bound and decay_floor formulas") {
    CHECK(lipschitz_bound(0.6, 0.4, RateSchedule::constant(0.5, 0.2)) == doctest::Approx(1.5));
    CHECK(lipschitz_bound(0.0, 0.0, RateSchedule::constant(0.5, 0.2)) == 0.0);
    CHECK(lipschitz_bound(1.5, 0.5, RateSchedule::constant(0.6, 1.5)) == doctest::Approx(5.4));
    CHECK(decay_floor(0.1, 0.5, 2.0) == doctest::Approx(0.0367879441171).epsilon(1e-10));
    CHECK(decay_floor(0.1, 0.5, 0.0) == 0.1);
    const double T = std::log(0.1 / 0.01) / (2 * 0.5);
    CHECK(decay_floor(0.1, 0.5, T) == doctest::Approx(0.0316227766017).epsilon(1e-10));
}

TEST_CASE("x = 0 axis decays exponentially") {
    const auto sch = RateSchedule::constant(0.5, 0.2);
    const Trajectory tr = flow(Datum{0.0, 0.1, 0.0, {}}, sch, 10.0);
    CHECK(tr.horizon() == 10.0);
    CHECK(std::abs(tr.state(10.0).I - 0.1 * std::exp(-2.0)) < 1e-8);
    CHECK(std::abs(tr.state(3.3333).I - 0.1 * std::exp(-0.2 * 3.3333)) < 1e-8);
}

TEST_CASE("regression value at s = 20 against the fine-step oracle") {
    // Frozen from a DOP853 run at rtol 1e-13 and confirmed by the Richardson check below.
    const double I20 = 0.09367976529585172;
    const double S20 = 0.10507041290252161;
    const auto [s1, i1] = reference_rk4(1.0, 0.1, 0.5, 0.2, 20.0, 200000);
    const auto [s2, i2] = reference_rk4(1.0, 0.1, 0.5, 0.2, 20.0, 100000);
    const double rich = i1 + (i1 - i2) / 15.0;
    CHECK(std::abs(rich - I20) < 1e-13);
    CHECK(std::abs(s1 - S20) < 1e-12);

    const auto sch = RateSchedule::constant(0.5, 0.2);
    const Trajectory tr = flow(Datum{1.0, 0.1, 0.0, {}}, sch, 40.0);
    CHECK(std::abs(tr.state(20.0).I - I20) < 1e-8);
    CHECK(std::abs(tr.state(20.0).S - S20) < 1e-8);
}

TEST_CASE("shifted start equals shifting the schedule") {
    const auto b = scenario_b();
    const Trajectory a = flow(Datum{1.0, 0.1, 5.0, {}}, b, 30.0);
    const Trajectory c = flow(Datum{1.0, 0.1, 0.0, {}}, shift(b, 5.0), 30.0);
    REQUIRE(a.samples().size() == c.samples().size());
    for (std::size_t k = 0; k < a.samples().size(); ++k) {
        CHECK(a.samples()[k].S == c.samples()[k].S);
        CHECK(a.samples()[k].I == c.samples()[k].I);
    }
}

TEST_CASE("oversized step is refused with a suggestion") {
    const auto sch = RateSchedule::constant(0.5, 0.2);
    try {
        flow(Datum{1.0, 0.1, 0.0, {}}, sch, 10.0, 1.0);
        FAIL("expected refusal");
    } catch (const StepSizeError& e) {
        CHECK(e.suggested() > 0.0);
        CHECK(e.suggested() < 0.5);
        CHECK_NOTHROW(flow(Datum{1.0, 0.1, 0.0, {}}, sch, 10.0, e.suggested()));
    }
    CHECK_THROWS_AS(flow(Datum{-1.0, 0.1, 0.0, {}}, sch, 10.0), DomainError);
    CHECK_THROWS_AS(flow(Datum{1.0, 0.1, -1.0, {}}, sch, 10.0), DomainError);
}

TEST_CASE("extension reproduces direct integration") {
    const auto b = scenario_b();
    const ControlSignal ctrl({1.3, 4.0}, {0.0, 1.0, 0.0});
    Trajectory grown = flow(Datum{0.8, 0.2, 0.7, ctrl}, b, 3.37);
    grown.extend(9.11);
    grown.extend(20.0);
    const Trajectory direct = flow(Datum{0.8, 0.2, 0.7, ctrl}, b, 20.0);
    REQUIRE(grown.samples().size() == direct.samples().size());
    for (std::size_t k = 0; k < direct.samples().size(); ++k) {
        CHECK(grown.samples()[k].s == direct.samples()[k].s);
        CHECK(grown.samples()[k].I == direct.samples()[k].I);
    }
}

TEST_CASE("trajectory invariants on random data") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto b = scenario_b();
    for (int trial = 0; trial < 100; ++trial) {
        const double x = 2.0 * u(rng);
        const double y = 0.1 + 0.9 * u(rng) * (2.0 - x) / 2.0;
        std::vector<double> bps;
        std::vector<double> vals{double(rng() % 2)};
        double t = 0.0;
        for (int k = 0, n = int(rng() % 7); k < n; ++k) {
            t += 0.2 + 4.0 * u(rng);
            bps.push_back(t);
            vals.push_back(u(rng) < 0.5 ? 0.0 : 1.0);
        }
        const Datum d{x, y, 6.0 * u(rng), ControlSignal(bps, vals)};
        const Trajectory tr = flow(d, b, 40.0);
        const double L = lipschitz_bound(x, y, b);
        const auto& smp = tr.samples();
        for (std::size_t k = 0; k < smp.size(); ++k) {
            REQUIRE(smp[k].S >= 0.0);
            REQUIRE(smp[k].I > 0.0);
            REQUIRE(smp[k].I >= decay_floor(y, 0.5, smp[k].s) - 1e-9);
            if (k > 0) {
                REQUIRE(smp[k].S <= smp[k - 1].S + 1e-12);
                REQUIRE(smp[k].S + smp[k].I <= smp[k - 1].S + smp[k - 1].I + 1e-12);
            }
            if (k < tr.step_count()) {
                const Derivative dd = tr.start_derivative(k);
                REQUIRE(std::abs(dd.dS) <= L + 1e-9);
                REQUIRE(std::abs(dd.dI) <= L + 1e-9);
            }
        }
    }
}

TEST_CASE("extrema are stationary points of I") {
    const auto b = scenario_b();
    const Trajectory tr = flow(Datum{1.0, 0.05, 0.0, {}}, b, 60.0);
    const auto ex = tr.extrema();
    CHECK(ex.size() >= 3);
    for (double s : ex) CHECK(std::abs(tr.idot(s)) < 1e-12);
}

TEST_CASE("csv export") {
    const Trajectory tr = flow(Datum{0.0, 0.1, 0.0, {}}, RateSchedule::constant(0.5, 0.2), 0.2);
    std::ostringstream os;
    tr.write_csv(os);
    const std::string s = os.str();
    CHECK(s.rfind("s,S,I\n0,0,0.10000000000000001\n", 0) == 0);
}
