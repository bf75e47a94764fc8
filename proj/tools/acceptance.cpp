#include "sirhjb/commands.hpp"
#include "sirhjb/error.hpp"
#include "sirhjb/threshold.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <regex>
#include <sstream>

using namespace sirhjb;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets, one block per criterion.
constexpr double kAxisTrajectoryTol = 1e-6;
constexpr double kAxisPdeFactor = 3.0;
constexpr double kAxisBudget = 10.0;
constexpr double kGapFactor = 10.0;
constexpr double kUnsafeMu = 0.04;
constexpr double kUnsafeGap = 0.1;
constexpr double kThresholdBudget = 120.0;
constexpr std::size_t kEnsembleSize = 1000;
constexpr std::size_t kCollapseSize = 500;
constexpr double kCollapseBudget = 30.0;
constexpr double kProbeTol = 0.05;
constexpr double kRefinementFactor = 1.7;
constexpr double kGridBudget = 300.0;
constexpr double kTwoFormFactor = 5.0;
constexpr double kSemiconcavityRatio = 1.2;
constexpr std::size_t kSemiconcavityStep = 4;
constexpr std::size_t kMinCrossings = 3;
constexpr std::uint64_t kSeed = 2024;

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RateSchedule scenario_a() { return RateSchedule::constant(0.5, 0.2); }

RateSchedule scenario_b() {
    return RateSchedule(SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, RateBounds{0.4, 0.4, 0.1, 0.5});
}

RateSchedule scenario_c() {
    return RateSchedule(FrozenRates{SinusoidalRates{Wave{0.4}, Wave{0.3, 0.2}}, std::log(10.0), 0.4, 0.3},
                        RateBounds{0.4, 0.4, 0.3, 0.5});
}

constexpr double kMu0 = 0.1;
constexpr double kMu = 0.01;
constexpr double kGammaHiC = 0.5;

GridSpec scenario_c_grid(std::size_t n, std::size_t nt, double mu_b) {
    GridSpec g;
    g.x_max = 1.5;
    g.nx = n;
    g.y_min = mu_b;
    g.y_max = mu_b + 1.0;
    g.ny = n;
    g.t_max = freeze_time(kMu0, kMu, kGammaHiC);
    g.nt = nt;
    return g;
}

const std::vector<std::array<double, 3>> kProbes{{0.6, 0.15, 0.0}, {0.9, 0.2, 1.0},   {0.3, 0.1, 0.5},
                                                 {1.2, 0.3, 0.0},  {0.45, 0.25, 1.5}, {1.05, 0.12, 2.0},
                                                 {0.75, 0.4, 0.25}, {1.35, 0.18, 1.0}};

EnsembleSpec ensemble(std::size_t size) {
    EnsembleSpec e;
    e.size = size;
    e.seed = kSeed;
    e.y_lo = kMu0;
    e.y_hi = 1.0;
    e.max_switches = 6;
    return e;
}

Outcome criterion_axis() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_traj = 0.0, worst_pde_ratio = 0.0;
    for (double gamma0 : {0.1, 0.2, 0.5}) {
        const RateSchedule s = RateSchedule::constant(0.5, gamma0);
        GridSpec g;
        g.x_max = 1.0;
        g.nx = 11;
        g.y_min = kMu;
        g.y_max = 1.01;
        g.ny = 101;
        g.nt = 1;
        ValueGrid grid(g, ValueForm::u);
        grid.set_slice(0, stationary_solve(g, 0.5, gamma0, ValueForm::u, nullptr, false));
        const double pde_tol = kAxisPdeFactor * (g.dx() + g.dy() + g.dt()) / gamma0;
        OptimizeOptions o;
        o.family.n_intervals = 4;
        for (double ratio : {2.0, 10.0, 100.0}) {
            const double y = ratio * kMu, exact_value = std::log(ratio) / gamma0;
            const Datum d{0.0, y, 0.0, {}};
            for (double v : {upper_time(d, s, kMu), lower_time(d, s, kMu), minimize_lower(0.0, y, 0.0, kMu, s, o).value,
                             minimize_upper(0.0, y, 0.0, kMu, s, o).value})
                worst_traj = std::max(worst_traj, std::abs(v - exact_value));
            worst_pde_ratio = std::max(worst_pde_ratio, std::abs(sample_value(grid, 0.0, y, 0.0) - exact_value) / pde_tol);
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_traj <= kAxisTrajectoryTol && worst_pde_ratio <= 1.0 && secs < kAxisBudget;
    return {ok, "trajectory max error " + num(worst_traj) + " (tol " + num(kAxisTrajectoryTol) +
                    "), PDE max error / 3(dx+dy+dt)/gamma0 = " + num(worst_pde_ratio) + " (tol 1), runtime " + num(secs) +
                    " s (budget " + num(kAxisBudget) + " s)"};
}

Outcome criterion_threshold() {
    const auto t0 = std::chrono::steady_clock::now();
    const RateSchedule b = scenario_b();
    std::string detail;
    bool ok = true;
    try {
        const Mu1Certificate cert = mu1(kMu0, b, 64);
        const GapReport g = gap_report(b, cert.mu1, ensemble(kEnsembleSize));
        const bool pass = g.max_gap <= kGapFactor * g.tol_cross;
        ok = ok && pass;
        detail += "mu1 = " + num(cert.mu1) + ", max gap " + num(g.max_gap) + " (tol " + num(kGapFactor * g.tol_cross) + ")";
    } catch (const NonTerminationError& e) {
        ok = false;
        detail += std::string("no mu1 certificate on scenario B: ") + e.what();
    }
    EnsembleSpec e = ensemble(kEnsembleSize);
    e.tangent_members = kEnsembleSize;
    const GapReport unsafe = gap_report(b, kUnsafeMu, e);
    ok = ok && unsafe.max_gap > kUnsafeGap;
    const double secs = seconds_since(t0);
    ok = ok && secs < kThresholdBudget;
    detail += "; mu = " + num(kUnsafeMu) + " max gap " + num(unsafe.max_gap) + " (needs > " + num(kUnsafeGap) +
              "); runtime " + num(secs) + " s (budget " + num(kThresholdBudget) + " s)";
    return {ok, detail};
}

Outcome criterion_stationary() {
    const RateSchedule b = scenario_b();
    try {
        const Mu1Certificate cert = mu1(kMu0, b, 64);
        const ExtremumCheck c = stationary_point_check(b, cert.mu1, cert.mu1, ensemble(kEnsembleSize));
        return {c.violations == 0, std::to_string(c.violations) + " violations among " + std::to_string(c.events) +
                                       " stationary points (mu1 = " + num(cert.mu1) + ")"};
    } catch (const NonTerminationError& e) {
        // Without a certificate, report how low stationary values go on the same ensemble.
        const ExtremumCheck c = stationary_point_check(b, 0.0, 1e-6, ensemble(kEnsembleSize));
        return {false, std::string("no mu1 certificate on scenario B (") + e.what() +
                           "); lowest stationary value of I on the ensemble (horizons certified at 1e-6): " +
                           num(c.min_value) + " over " + std::to_string(c.events) + " events"};
    }
}

Outcome criterion_collapse() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0, tol = 0.0;
    for (double mu : {kMu, 0.05}) {
        const GapReport g = gap_report(scenario_a(), mu, ensemble(kCollapseSize));
        worst = std::max(worst, g.max_gap);
        tol = kGapFactor * g.tol_cross;
    }
    const double secs = seconds_since(t0);
    return {worst <= tol && secs < kCollapseBudget, "max gap " + num(worst) + " over " + std::to_string(kCollapseSize) +
                                                        " data at mu in {0.01, 0.05} (tol " + num(tol) + "), runtime " +
                                                        num(secs) + " s (budget " + num(kCollapseBudget) + " s)"};
}

Outcome criterion_agreement() {
    const RateSchedule c = scenario_c();
    std::vector<double> reference;
    for (const auto& p : kProbes) reference.push_back(minimize_lower(p[0], p[1], p[2], kMu, c).value);
    double errors[2] = {0.0, 0.0}, secs[2] = {0.0, 0.0};
    const std::size_t sizes[2][2] = {{101, 47}, {201, 93}};
    for (int level = 0; level < 2; ++level) {
        const auto t0 = std::chrono::steady_clock::now();
        const GridSpec g = scenario_c_grid(sizes[level][0], sizes[level][1], kMu);
        const ValueGrid u = solve_hjb(g, c, threshold_boundary(g, c));
        secs[level] = seconds_since(t0);
        for (std::size_t k = 0; k < kProbes.size(); ++k)
            errors[level] =
                std::max(errors[level], std::abs(sample_value(u, kProbes[k][0], kProbes[k][1], kProbes[k][2]) - reference[k]));
    }
    const double factor = errors[0] / errors[1];
    const bool ok = errors[0] <= kProbeTol && factor >= kRefinementFactor && secs[0] < kGridBudget && secs[1] < kGridBudget;
    return {ok, "max |HJB - optimizer| " + num(errors[0]) + " on 101x101x47 (tol " + num(kProbeTol) + "), " +
                    num(errors[1]) + " on 201x201x93, reduction " + num(factor) + " (needs >= " + num(kRefinementFactor) +
                    "), runtimes " + num(secs[0]) + " s / " + num(secs[1]) + " s (budget " + num(kGridBudget) + " s each)"};
}

Outcome criterion_two_forms() {
    const RateSchedule c = scenario_c();
    const GridSpec g = scenario_c_grid(101, 47, kMu0);
    OptimizeOptions o;
    o.family.n_intervals = 1;
    o.refine = false;
    o.threads = 1;
    const BoundaryData b =
        trace_boundary(g, c, kMu, [&](double x, double t) { return minimize_lower(x, kMu0, t, kMu, c, o).value; });
    const ValueGrid u = solve_hjb(g, c, b), v = kruzkov_solve(g, c, b);
    double sup = 0.0;
    for (std::size_t k = 0; k < g.nt; ++k)
        for (std::size_t j = 1; j + 1 < g.ny; ++j)
            for (std::size_t i = 1; i + 1 < g.nx; ++i) sup = std::max(sup, std::abs(u.at(i, j, k) + std::log(v.at(i, j, k))));
    const double tol = kTwoFormFactor * (g.dx() + g.dy() + g.dt());
    return {sup <= tol, "sup |u + ln v| on the interior of the mu0 = 0.1 problem, 101x101x47: " + num(sup) + " (tol " +
                            num(tol) + ")"};
}

Outcome criterion_semiconcavity() {
    const RateSchedule c = scenario_c();
    const double T = freeze_time(kMu0, kMu, kGammaHiC);
    const GridSpec g = scenario_c_grid(101, 47, kMu);
    const ValueGrid u = solve_hjb(g, c, threshold_boundary(g, c));
    const Box K{{0.3, 0.15, 0.5}, {0.9, 0.4, T - 0.5}};
    const SemiconcavityReport coarse = semiconcavity_probe(u, K, kSemiconcavityStep);
    const SemiconcavityReport fine = semiconcavity_probe(u, K, kSemiconcavityStep / 2);
    const bool ok = std::isfinite(fine.C) && semiconcavity_stable(coarse, fine, kSemiconcavityRatio);
    const double ratio = coarse.C > 0.0 ? fine.C / coarse.C : 1.0;
    return {ok, "T_freeze = " + num(T) + ", C = " + num(coarse.C) + " (h = " + std::to_string(coarse.h) + " cells) -> " +
                    num(fine.C) + " (h = " + std::to_string(fine.h) + "), ratio " + num(ratio) + " (needs within " +
                    num(kSemiconcavityRatio) + ")"};
}

Outcome criterion_figure(const std::string& config_dir, const fs::path& work) {
    const ExperimentConfig config = load_config(config_dir + "/scenario_b.json");
    const fs::path dir = work / "fig1";
    fs::remove_all(dir);
    std::ostringstream log;
    run_command("fig1", config, dir.string(), log);
    std::istringstream summary(read_text(dir / "fig1_summary.csv"));
    std::string header, row;
    std::getline(summary, header);
    std::getline(summary, row);
    std::vector<std::string> f;
    std::stringstream rs(row);
    for (std::string cell; std::getline(rs, cell, ',');) f.push_back(cell);
    if (f.size() != 8) return {false, "fig1_summary.csv has an unexpected row: " + row};
    const Datum d{std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), config.datum.control};
    const CrossingReport rep = eradication_report(d, config.schedule, std::stod(f[3]), config.eradication);
    const std::string svg = read_text(dir / "fig1.svg");
    std::smatch up, lo;
    const bool markers = std::regex_search(svg, up, std::regex("id=\"marker-upper\" data-x=\"([^\"]+)\"")) &&
                         std::regex_search(svg, lo, std::regex("id=\"marker-lower\" data-x=\"([^\"]+)\""));
    const bool distinct = markers && up[1].str() != lo[1].str();
    const bool gap_exact = f[7] == exact(rep.gap());
    const bool ok = rep.crossings.size() >= kMinCrossings && distinct && gap_exact;
    return {ok, std::to_string(rep.crossings.size()) + " mu-crossings (needs >= " + std::to_string(kMinCrossings) +
                    "), markers upper " + (markers ? up[1].str() : "?") + " / lower " + (markers ? lo[1].str() : "?") +
                    ", CSV gap " + f[7] + (gap_exact ? " == " : " != ") + "report gap " + exact(rep.gap())};
}

Outcome criterion_determinism(const std::string& config_dir, const fs::path& work) {
    const ExperimentConfig config = load_config(config_dir + "/scenario_c.json");
    const fs::path a = work / "verify_run1", b = work / "verify_run2";
    fs::remove_all(a);
    fs::remove_all(b);
    std::ostringstream log;
    run_command("verify", config, a.string(), log);
    run_command("verify", config, b.string(), log);
    std::size_t compared = 0, differing = 0;
    std::string first_diff;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        ++compared;
        const fs::path other = b / entry.path().filename();
        if (!fs::exists(other) || read_text(entry.path()) != read_text(other)) {
            ++differing;
            if (first_diff.empty()) first_diff = entry.path().filename().string();
        }
    }
    std::size_t in_b = 0;
    for (const auto& entry : fs::directory_iterator(b)) in_b += entry.path().extension() == ".csv";
    const bool ok = compared > 0 && differing == 0 && in_b == compared;
    return {ok, std::to_string(compared) + " CSV files compared across two verify runs (seed " +
                    std::to_string(config.ensemble.seed) + "), " + std::to_string(differing) + " differ" +
                    (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria: one pass/fail line per criterion"};
    std::vector<int> selected;
    std::string config_dir = SIRHJB_SOURCE_DIR "/configs";
    std::string work = (fs::temp_directory_path() / "sirhjb_acceptance").string();
    app.add_option("--criterion", selected, "Criteria to run (1-9); all when omitted")->check(CLI::Range(1, 9));
    app.add_option("--configs", config_dir, "Directory holding scenario_{a,b,c}.json");
    app.add_option("--work", work, "Scratch directory for command outputs");
    CLI11_PARSE(app, argc, argv);
    if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"analytic axis", criterion_axis},
        {"threshold theorem at desk scale", criterion_threshold},
        {"stationary-point exclusion", criterion_stationary},
        {"constant-rate collapse", criterion_collapse},
        {"PDE-trajectory agreement", criterion_agreement},
        {"two-form agreement", criterion_two_forms},
        {"semiconcavity", criterion_semiconcavity},
        {"figure 1 reproduction", [&] { return criterion_figure(config_dir, work); }},
        {"determinism", [&] { return criterion_determinism(config_dir, work); }},
    };
    fs::create_directories(work);
    bool all = true;
    for (int n : selected) {
        const auto& [name, run] = criteria[std::size_t(n - 1)];
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.passed;
        std::cout << "criterion " << n << " (" << name << "): " << (o.passed ? "PASS" : "FAIL") << " - " << o.detail
                  << std::endl;
    }
    return all ? 0 : 1;
}
