#include "doctest.h"

#include "sirhjb/error.hpp"
#include "sirhjb/hjb.hpp"
#include "sirhjb/optimize.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace sirhjb;

namespace {

RateSchedule scenario_c() {
    return RateSchedule(FrozenRates{SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, std::log(10.0), 0.4, 0.3},
                        RateBounds{0.4, 0.4, 0.3, 0.5});
}

GridSpec small_grid(double t_max = 0.0, std::size_t nt = 1) {
    GridSpec g;
    g.x_max = 1.5;
    g.nx = 31;
    g.y_min = 0.01;
    g.y_max = 1.21;
    g.ny = 41;
    g.t_max = t_max;
    g.nt = nt;
    return g;
}

GridSpec scenario_c_grid() {
    GridSpec g;
    g.nt = 47;
    g.t_max = std::log(10.0);
    return g;
}

double spacing_sum(const GridSpec& g) { return g.dx() + g.dy() + g.dt(); }

// Independent oracle for scenario C under full vaccination: fixed-step RK4 on the raw system
// with the frozen-after rates written out by hand; last downward crossing of mu located by
// linear interpolation inside the step.
double scenario_c_full_vaccination(double x, double y, double t, double mu) {
    const double T = std::log(10.0), w = 1e-3;
    auto gamma = [&](double s) {
        if (s >= T) return 0.3;
        const double g = 0.3 + 0.2 * std::sin(s);
        if (s <= T - w) return g;
        return g + (0.3 - g) * (s - (T - w)) / w;
    };
    auto f = [&](double s, double S, double I) {
        return std::pair{-0.4 * S * I - S, 0.4 * S * I - gamma(s) * I};
    };
    const double h = 1e-4;
    double S = x, I = y, s = t, last = 0.0;
    for (int k = 0; k < 400000; ++k) {
        auto [a1, b1] = f(s, S, I);
        auto [a2, b2] = f(s + h / 2, S + h / 2 * a1, I + h / 2 * b1);
        auto [a3, b3] = f(s + h / 2, S + h / 2 * a2, I + h / 2 * b2);
        auto [a4, b4] = f(s + h, S + h * a3, I + h * b3);
        const double S1 = S + h / 6 * (a1 + 2 * a2 + 2 * a3 + a4);
        const double I1 = I + h / 6 * (b1 + 2 * b2 + 2 * b3 + b4);
        if (I >= mu && I1 < mu) last = s - t + h * (I - mu) / (I - I1);
        S = S1;
        I = I1;
        s += h;
    }
    return last;
}

} // namespace

TEST_CASE("hamiltonian identities") {
    const auto c = scenario_c();
    CHECK(hamiltonian(0.7, 0.9, 0.2, 0.0, 0.0, c) == 0.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        const double t = std::abs(u(rng)), x = std::abs(u(rng)), y = std::abs(u(rng)), p = u(rng), q = u(rng);
        CHECK(hamiltonian(t, x, y, 2 * p, 2 * q, c) == doctest::Approx(2 * hamiltonian(t, x, y, p, q, c)).epsilon(1e-14));
    }
    const double y = 0.3, g0 = 0.2;
    CHECK(hamiltonian(0.0, 0.0, y, 5.0, 1.0 / (g0 * y), RateSchedule::constant(0.5, g0)) ==
          doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("semi-Lagrangian update") {
    const GridSpec g = small_grid();
    const auto a = RateSchedule::constant(0.5, 0.2);
    const BoundaryData none;
    const double dt = 0.5 * std::min(g.dx(), g.dy()) / lipschitz_bound(g.x_max, g.y_max, a);
    const std::vector<double> zero(g.nx * g.ny, 0.0);
    CHECK(sl_update(zero, g, 0.6, 0.5, 0.0, dt, a, none, ValueForm::u).value == dt);

    // At x = 0 the control does not move the foot: the tie goes to a = 0.
    CHECK(sl_update(zero, g, 0.0, 0.5, 0.0, dt, a, none, ValueForm::u).control == 0);

    CHECK_THROWS_AS(sl_update(zero, g, 0.6, 0.5, 0.0, 10 * dt, a, none, ValueForm::u), StepSizeError);
    try {
        sl_update(zero, g, 0.6, 0.5, 0.0, 10 * dt, a, none, ValueForm::u);
    } catch (const StepSizeError& e) {
        CHECK(e.suggested() == doctest::Approx(2 * dt));
    }

    // Iterating the update on the x = 0 column reproduces ln(y / mu_b) / gamma.
    std::vector<double> cur(g.nx * g.ny, 0.0), next = cur;
    for (int it = 0; it < 200000; ++it) {
        double change = 0.0;
        for (std::size_t j = 0; j < g.ny; ++j) {
            next[j * g.nx] = sl_update(cur, g, 0.0, g.y(j), 0.0, dt, a, none, ValueForm::u).value;
            change = std::max(change, std::abs(next[j * g.nx] - cur[j * g.nx]));
        }
        cur.swap(next);
        if (change < 1e-10) break;
    }
    for (std::size_t j = 0; j < g.ny; ++j)
        CHECK(std::abs(cur[j * g.nx] - std::log(g.y(j) / g.y_min) / 0.2) <= (dt + g.dy()) / 0.2);
}

TEST_CASE("stationary solve") {
    const GridSpec g = small_grid();
    StationaryReport rep;
    const std::vector<double> u = stationary_solve(g, 0.5, 0.2, ValueForm::u, &rep);
    for (std::size_t i = 0; i < g.nx; ++i)
        if (0.5 * g.x(i) <= 0.2) CHECK(u[i] == 0.0);
    for (std::size_t j = 0; j < g.ny; ++j)
        CHECK(std::abs(u[j * g.nx] - std::log(g.y(j) / g.y_min) / 0.2) <= 1e-12);

    // Without the imposed axis the scheme computes the column itself.
    const std::vector<double> free_axis = stationary_solve(g, 0.5, 0.2, ValueForm::u, nullptr, false);
    for (std::size_t j = 0; j < g.ny; ++j)
        CHECK(std::abs(free_axis[j * g.nx] - std::log(g.y(j) / g.y_min) / 0.2) <= (g.dx() + g.dy()) / 0.2);

    // Interior node (0.9, 0.1) in scenario A against the trajectory optimizer, within
    // 3 (dx + dy + dt) L with L the largest difference quotient around the node.
    const std::size_t i = 18, j = 3;
    REQUIRE(std::abs(g.x(i) - 0.9) < 1e-12);
    REQUIRE(std::abs(g.y(j) - 0.1) < 1e-12);
    const double ref = minimize_lower(0.9, 0.1, 0.0, 0.01, RateSchedule::constant(0.5, 0.2)).value;
    double L = 0.0;
    for (std::size_t jj = j - 1; jj <= j + 1; ++jj)
        for (std::size_t ii = i - 1; ii <= i + 1; ++ii) {
            L = std::max(L, std::abs(u[jj * g.nx + ii + 1] - u[jj * g.nx + ii]) / g.dx());
            L = std::max(L, std::abs(u[(jj + 1) * g.nx + ii] - u[jj * g.nx + ii]) / g.dy());
        }
    const double dt = g.courant * std::min(g.dx(), g.dy()) / lipschitz_bound(g.x_max, g.y_max, RateSchedule::constant(0.5, 0.2));
    CHECK(std::abs(u[j * g.nx + i] - ref) <= 3 * (g.dx() + g.dy() + dt) * L);
    CHECK(rep.iterations == rep.residuals.size());
    CHECK(rep.residuals.back() < g.tol_vi);

    GridSpec capped = g;
    capped.max_iterations = 5;
    CHECK_THROWS_AS(stationary_solve(capped, 0.5, 0.2, ValueForm::u), ConvergenceError);
}

TEST_CASE("v-form value iteration contracts") {
    const GridSpec g = small_grid();
    StationaryReport rep;
    stationary_solve(g, 0.5, 0.2, ValueForm::v, &rep);
    const double dt = g.courant * std::min(g.dx(), g.dy()) / lipschitz_bound(g.x_max, g.y_max, RateSchedule::constant(0.5, 0.2));
    // Below 1e-13 the sweep-to-sweep change is rounding noise on values of order one.
    std::size_t checked = 0;
    for (std::size_t k = 1; k < rep.residuals.size() && rep.residuals[k - 1] > 1e-13; ++k, ++checked)
        CHECK(rep.residuals[k] <= (std::exp(-dt) + 1e-12) * rep.residuals[k - 1]);
    CHECK(checked > 1000);
}

TEST_CASE("backward march: stationarity, axis, rejection") {
    const auto a = RateSchedule::constant(0.5, 0.2);
    const GridSpec g = small_grid(1.0, 5);
    const std::vector<double> h = stationary_solve(g, 0.5, 0.2, ValueForm::u);
    const ValueGrid grid = march_backward(g, a, h, threshold_boundary(g, a));
    // Each substep from the converged slice moves it by at most the final residual tol_vi.
    const std::size_t n_sub = substeps(g, a);
    for (std::size_t k = 0; k < g.nt; ++k) {
        const double bound = double((g.nt - 1 - k) * n_sub) * g.tol_vi + 1e-12;
        for (std::size_t n = 0; n < h.size(); ++n) REQUIRE(std::abs(grid.slice(k)[n] - h[n]) <= bound);
    }
    for (std::size_t k = 0; k < g.nt; ++k)
        for (std::size_t j = 0; j < g.ny; ++j)
            CHECK(grid.at(0, j, k) == doctest::Approx(std::log(g.y(j) / g.y_min) / 0.2).epsilon(1e-12));

    const RateSchedule never(SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, RateBounds{0.4, 0.4, 0.1, 0.5});
    CHECK_THROWS_AS(march_backward(g, never, h, BoundaryData{}), DomainError);
    CHECK_THROWS_AS(march_backward(small_grid(1.0, 5), scenario_c(), h, BoundaryData{}), DomainError);
}

TEST_CASE("axis time integrates the recovery rate") {
    const auto c = scenario_c();
    for (double t : {0.0, 0.7, 2.0, 3.0}) {
        const double s = axis_time(0.2, t, 0.01, c);
        CHECK(shift(c, t).integral(0.0, s).gamma == doctest::Approx(std::log(20.0)).epsilon(1e-12));
    }
    CHECK(axis_time(0.01, 0.0, 0.01, c) == 0.0);
}

TEST_CASE("scenario C probes against the trajectory layer") {
    // Full vaccination is the optimum of the 2^8 family at both probes; the RK4 oracle
    // reproduces the optimizer values.
    const auto c = scenario_c();
    const double r0 = minimize_lower(0.6, 0.15, 0.0, 0.01, c).value;
    const double r1 = minimize_lower(0.9, 0.2, 1.0, 0.01, c).value;
    CHECK(std::abs(r0 - scenario_c_full_vaccination(0.6, 0.15, 0.0, 0.01)) < 1e-5);
    CHECK(std::abs(r1 - scenario_c_full_vaccination(0.9, 0.2, 1.0, 0.01)) < 1e-5);

    const GridSpec g = scenario_c_grid();
    const BoundaryData b = threshold_boundary(g, c);
    b.validate(g, 1e300);
    const ValueGrid u = solve_hjb(g, c, b);
    CHECK(std::abs(sample_value(u, 0.6, 0.15, 0.0) - r0) <= spacing_sum(g));
    CHECK(std::abs(sample_value(u, 0.9, 0.2, 1.0) - r1) <= spacing_sum(g));
    for (double v : u.values()) REQUIRE(v >= 0.0);
    // Imposed boundary data hold exactly at nodes.
    for (std::size_t k = 0; k < g.nt; ++k) {
        for (std::size_t i = 0; i < g.nx; ++i)
            if (!std::isnan(b.f[k * g.nx + i])) REQUIRE(u.at(i, 0, k) == b.f[k * g.nx + i]);
        for (std::size_t j = 0; j < g.ny; ++j) REQUIRE(u.at(0, j, k) == b.g[k * g.ny + j]);
    }

    const ValueGrid v = kruzkov_solve(g, c, b);
    CHECK(v.form() == ValueForm::v);
    double sup = 0.0;
    for (double x : v.values()) {
        REQUIRE(x > 0.0);
        REQUIRE(x <= 1.0);
    }
    for (std::size_t k = 0; k < g.nt; ++k) {
        for (std::size_t i = 0; i < g.nx; ++i)
            if (b.f[k * g.nx + i] == 0.0) REQUIRE(v.at(i, 0, k) == 1.0);
        for (std::size_t j = 1; j + 1 < g.ny; ++j)
            for (std::size_t i = 1; i + 1 < g.nx; ++i)
                sup = std::max(sup, std::abs(std::exp(-u.at(i, j, k)) - v.at(i, j, k)));
    }
    CHECK(sup <= 5 * spacing_sum(g));
}

TEST_CASE("sample_value interpolation") {
    GridSpec g = small_grid(1.0, 3);
    ValueGrid grid(g, ValueForm::u);
    for (std::size_t k = 0; k < g.nt; ++k)
        for (std::size_t j = 0; j < g.ny; ++j)
            for (std::size_t i = 0; i < g.nx; ++i) grid.at(i, j, k) = 1.0 + 2.0 * g.x(i) - 3.0 * g.y(j) + 0.5 * g.t(k);
    CHECK(sample_value(grid, g.x(7), g.y(11), g.t(1)) == grid.at(7, 11, 1));
    const double x = 0.5 * (g.x(3) + g.x(4)), y = 0.5 * (g.y(5) + g.y(6)), t = 0.25;
    CHECK(sample_value(grid, x, y, t) == doctest::Approx(1.0 + 2.0 * x - 3.0 * y + 0.5 * t).epsilon(1e-13));
    CHECK_THROWS_AS(sample_value(grid, 1.6, 0.5, 0.0), DomainError);
    CHECK_THROWS_AS(sample_value(grid, 0.5, 0.005, 0.0), DomainError);
    CHECK_THROWS_AS(sample_value(grid, 0.5, 0.5, 1.5), DomainError);
}

TEST_CASE("value grid persistence") {
    const auto a = RateSchedule::constant(0.5, 0.2);
    const GridSpec g = small_grid(1.0, 3);
    ValueGrid grid = march_backward(g, a, stationary_solve(g, 0.5, 0.2, ValueForm::u), threshold_boundary(g, a));
    grid.clamp_count = 7;
    std::stringstream bin;
    grid.write_binary(bin);
    CHECK(bin.str().substr(0, 8) == "SIRVGRD1");
    const ValueGrid back = ValueGrid::read_binary(bin);
    CHECK(back == grid);
    CHECK(back.schedule_digest == schedule_digest(a));
    CHECK(schedule_digest(a) != schedule_digest(RateSchedule::constant(0.5, 0.25)));

    std::stringstream bad("NOTAGRID");
    CHECK_THROWS(ValueGrid::read_binary(bad));

    std::ostringstream csv;
    grid.write_slice_csv(csv, 0);
    const std::string s = csv.str();
    CHECK(s.rfind("x,y,value\n0,0.01,0\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == std::ptrdiff_t(g.nx * g.ny + 1));
}

TEST_CASE("boundary data validation") {
    const GridSpec g = small_grid(1.0, 3);
    BoundaryData b = threshold_boundary(g, RateSchedule::constant(0.5, 0.2));
    CHECK_NOTHROW(b.validate(g, 20.0));
    CHECK_THROWS_AS(b.validate(g, 1e-6), DomainError);
    b.g[3] = -1.0;
    CHECK_THROWS_AS(b.validate(g, 20.0), DomainError);
}

TEST_CASE("trace boundary on y = mu0") {
    const auto c = scenario_c();
    GridSpec g;
    g.nx = 16;
    g.ny = 11;
    g.y_min = 0.1;
    g.y_max = 1.1;
    g.nt = 3;
    g.t_max = std::log(10.0);
    const BoundaryData b = trace_boundary(g, c, 0.01, [](double x, double t) { return 1.0 + x + t; });
    for (std::size_t k = 0; k < g.nt; ++k) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (g.x(i) <= c.x_hi())
                CHECK(b.f[k * g.nx + i] == 1.0 + g.x(i) + g.t(k));
            else
                CHECK(std::isnan(b.f[k * g.nx + i]));
        }
        for (std::size_t j = 0; j < g.ny; ++j) CHECK(b.g[k * g.ny + j] == axis_time(g.y(j), g.t(k), 0.01, c));
    }
    CHECK(b.exit_value(0.35, 0.6) == doctest::Approx(1.95).epsilon(1e-13));
}
