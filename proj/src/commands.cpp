#include "sirhjb/commands.hpp"

#include "sirhjb/error.hpp"
#include "sirhjb/plot.hpp"
#include "sirhjb/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace sirhjb {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::string& dir, const std::string& name, const std::function<void(std::ostream&)>& body,
                std::ostream& log, bool binary = false) {
    const fs::path path = fs::path(dir) / name;
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    body(out);
    if (!out) throw std::runtime_error("failed while writing " + path.string());
    log << "wrote " << path.string() << "\n";
}

const HjbSettings& require_grid(const ExperimentConfig& c) {
    if (!c.hjb) throw DomainError("config has no grid section");
    return *c.hjb;
}

Mu1Options mu1_options(const ExperimentConfig& c) {
    Mu1Options o;
    o.sweep.threads = c.threads;
    return o;
}

OptimizeOptions optimize_options(const ExperimentConfig& c) {
    OptimizeOptions o = c.optimize;
    o.eradication = c.eradication;
    o.threads = c.threads;
    return o;
}

int simulate(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const Trajectory tr = flow(c.datum, c.schedule, c.simulate_horizon, c.eradication.step);
    write_file(dir, "trajectory.csv", [&](std::ostream& o) { tr.write_csv(o); }, log);
    return 0;
}

int eradication(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const CrossingReport r = eradication_report(c.datum, c.schedule, c.mu, c.eradication);
    write_file(dir, "eradication.csv", [&](std::ostream& o) { r.write_csv(o); }, log);
    log << "upper " << num(r.upper_time) << " lower " << num(r.lower_time) << " gap " << num(r.gap()) << "\n";
    return 0;
}

int certificate(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const Mu1Certificate cert = mu1(c.mu0, c.schedule, c.mu1_samples, mu1_options(c));
    write_file(dir, "mu1.txt", [&](std::ostream& o) { cert.write_report(o); }, log);
    log << "mu1 " << num(cert.mu1) << " (route " << to_string(cert.route) << ")\n";
    return 0;
}

int optimize(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const OptimizationResult r = minimize_lower(c.datum.x, c.datum.y, c.datum.t0, c.mu, c.schedule, optimize_options(c));
    write_file(dir, "optimize.csv", [&](std::ostream& o) { r.write_csv(o); }, log);
    log << "value " << num(r.value) << " after " << r.evaluations << " evaluations\n";
    return 0;
}

void write_grid(const ValueGrid& u, const std::string& dir, const std::string& stem, std::ostream& log) {
    write_file(dir, stem + ".bin", [&](std::ostream& o) { u.write_binary(o); }, log, true);
    write_file(dir, stem + "_t0.csv", [&](std::ostream& o) { u.write_slice_csv(o, 0); }, log);
}

int hjb(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const HjbSettings& h = require_grid(c);
    const ValueGrid u = configured_hjb(c);
    write_grid(u, dir, "value_u", log);
    write_file(
        dir, "hjb_summary.txt",
        [&](std::ostream& o) {
            char digest[20];
            std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(u.schedule_digest));
            o << "hjb solve\n";
            o << "  grid: " << h.grid.nx << " x " << h.grid.ny << " x " << h.grid.nt << "\n";
            o << "  boundary: " << (h.boundary == GridBoundary::threshold ? "threshold" : "trace") << "\n";
            o << "  substeps_per_slice: " << substeps(h.grid, c.schedule) << "\n";
            o << "  clamp_count: " << u.clamp_count << "\n";
            o << "  schedule_digest: " << digest << "\n";
        },
        log);
    return 0;
}

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

int verify(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    std::vector<Check> checks;
    const VerifySettings& v = c.verify;
    auto record = [&](std::string name, bool ok, std::string detail) {
        log << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
        checks.push_back({std::move(name), ok, std::move(detail)});
    };

    // Certificate and the gap / stationary-point checks that depend on it.
    std::optional<double> mu1_value;
    try {
        const Mu1Certificate cert = mu1(c.mu0, c.schedule, c.mu1_samples, mu1_options(c));
        write_file(dir, "mu1.txt", [&](std::ostream& o) { cert.write_report(o); }, log);
        mu1_value = cert.mu1;
        record("mu1_certificate", true, "mu1 = " + num(cert.mu1) + " via " + to_string(cert.route));
    } catch (const NonTerminationError& e) {
        record("mu1_certificate", false, e.what());
    }
    if (mu1_value) {
        const GapReport g = gap_report(c.schedule, *mu1_value, c.ensemble, c.eradication, c.threads);
        write_file(dir, "gap_mu1.csv", [&](std::ostream& o) { g.write_csv(o); }, log);
        write_file(dir, "gap_mu1_summary.txt", [&](std::ostream& o) { g.write_summary(o); }, log);
        record("gap_at_mu1", g.max_gap <= 10.0 * g.tol_cross,
               "max_gap = " + num(g.max_gap) + " (limit " + num(10.0 * g.tol_cross) + ")");
        const ExtremumCheck s =
            stationary_point_check(c.schedule, *mu1_value, *mu1_value, c.ensemble, c.eradication, c.threads);
        write_file(dir, "stationary_points.txt", [&](std::ostream& o) { s.write_summary(o); }, log);
        record("stationary_points_above_mu1", s.violations == 0,
               std::to_string(s.violations) + " of " + std::to_string(s.events) + " events at or below mu1");
    } else {
        record("gap_at_mu1", false, "no certificate");
        record("stationary_points_above_mu1", false, "no certificate");
    }
    if (v.unsafe_mu) {
        EnsembleSpec e = c.ensemble;
        if (e.tangent_members == 0) e.tangent_members = e.size;
        const GapReport g = gap_report(c.schedule, *v.unsafe_mu, e, c.eradication, c.threads);
        write_file(dir, "gap_unsafe.csv", [&](std::ostream& o) { g.write_csv(o); }, log);
        write_file(dir, "gap_unsafe_summary.txt", [&](std::ostream& o) { g.write_summary(o); }, log);
        record("gap_at_unsafe_mu", g.max_gap > v.unsafe_gap,
               "max_gap = " + num(g.max_gap) + " at mu = " + num(*v.unsafe_mu) + " (needs > " + num(v.unsafe_gap) + ")");
    }

    // Flow stability.
    {
        std::vector<double> deltas = v.stability_deltas;
        const auto rows = stability_check(c.datum, c.schedule, deltas, v.stability_horizon);
        write_file(
            dir, "stability.csv",
            [&](std::ostream& o) {
                o << "delta,distance\n";
                for (const auto& r : rows) o << num(r.delta) << "," << num(r.distance) << "\n";
            },
            log);
        bool ok = true;
        std::string worst;
        for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
            const double expected = rows[k].delta / rows[k + 1].delta;
            const double ratio = rows[k].distance / rows[k + 1].distance;
            ok = ok && ratio <= expected * v.stability_ratio_slack && ratio >= expected / v.stability_ratio_slack;
            worst += (k ? ", " : "") + num(ratio);
        }
        record("stability_ratios", ok, "ratios " + worst);
    }

    if (c.hjb) {
        const ValueGrid u = configured_hjb(c);
        write_grid(u, dir, "value_u", log);
        const ResidualStats r = residual_check(u, c.schedule);
        write_file(dir, "residual.txt", [&](std::ostream& o) { r.write_summary(o); }, log);
        record("pde_residual", r.constant <= v.residual_constant_max,
               "C_res = " + num(r.constant) + " (limit " + num(v.residual_constant_max) + ")");
        if (v.semiconcavity_box) {
            const SemiconcavityReport coarse = semiconcavity_probe(u, *v.semiconcavity_box, v.semiconcavity_step);
            const SemiconcavityReport fine = semiconcavity_probe(u, *v.semiconcavity_box, v.semiconcavity_step / 2);
            write_file(
                dir, "semiconcavity.txt",
                [&](std::ostream& o) {
                    coarse.write_summary(o);
                    fine.write_summary(o);
                },
                log);
            record("semiconcavity", semiconcavity_stable(coarse, fine, v.semiconcavity_ratio),
                   "C = " + num(coarse.C) + " -> " + num(fine.C));
        }
        if (!v.probes.empty()) {
            const ProbeTable t = hjb_vs_trajectory(u, v.probes, c.schedule, c.mu, optimize_options(c));
            write_file(dir, "probes.csv", [&](std::ostream& o) { t.write_csv(o); }, log);
            record("hjb_vs_trajectory", t.max_discrepancy <= v.probe_tolerance,
                   "max discrepancy = " + num(t.max_discrepancy) + " (limit " + num(v.probe_tolerance) + ")");
        }
    }

    bool all = true;
    for (const Check& ch : checks) all = all && ch.passed;
    write_file(
        dir, "verify_report.txt",
        [&](std::ostream& o) {
            o << "verify " << c.name << "\n";
            for (const Check& ch : checks) o << (ch.passed ? "PASS " : "FAIL ") << ch.name << ": " << ch.detail << "\n";
            o << (all ? "all checks passed\n" : "some checks failed\n");
        },
        log);
    return all ? 0 : 1;
}

int fig1(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const double mu = c.fig1.mu;
    Datum d = c.datum;
    if (c.fig1.find_tangency) {
        const auto t = tangent_datum(d, c.schedule, mu, mu, c.eradication);
        if (!t) throw DomainError("fig1: no tangency of I with mu bracketed from the configured datum");
        d = *t;
    }
    const CrossingReport rep = eradication_report(d, c.schedule, mu, c.eradication);
    const Trajectory tr = flow(d, c.schedule, std::max(c.fig1.horizon, rep.certified_horizon), c.eradication.step);
    write_file(dir, "fig1_trajectory.csv", [&](std::ostream& o) { tr.write_csv(o); }, log);
    write_file(dir, "fig1_crossings.csv", [&](std::ostream& o) { rep.write_csv(o); }, log);
    write_file(
        dir, "fig1_summary.csv",
        [&](std::ostream& o) {
            o << "x,y,t,mu,crossings,upper,lower,gap\n";
            o << num(d.x) << "," << num(d.y) << "," << num(d.t0) << "," << num(mu) << "," << rep.crossings.size() << ","
              << num(rep.upper_time) << "," << num(rep.lower_time) << "," << num(rep.gap()) << "\n";
        },
        log);

    Figure f;
    f.title = "Upper and lower eradication times";
    f.x_label = "s";
    f.y_label = "I(s)";
    PlotSeries I{"I(s)", {}, {}, "#1f77b4", 1.5};
    for (const Sample& z : tr.samples()) {
        I.x.push_back(z.s);
        I.y.push_back(z.I);
    }
    f.series.push_back(I);
    f.segments.push_back({"mu = " + num(mu), 0.0, mu, tr.horizon(), mu, "#7f7f7f", 1.5, true});
    for (std::size_t k = 0; k < rep.crossings.size(); ++k)
        f.markers.push_back({"crossing-" + std::to_string(k), k == 0 ? "mu crossings" : "", rep.crossings[k].time, mu,
                             "#bcbd22"});
    f.markers.push_back({"lower", "lower time", rep.lower_time, mu, "#2ca02c"});
    f.markers.push_back({"upper", "upper time", rep.upper_time, tr.state(std::min(rep.upper_time, tr.horizon())).I,
                         "#d62728"});
    f.x_min = 0.0;
    f.x_max = tr.horizon();
    f.y_min = 0.0;
    write_file(dir, "fig1.svg", [&](std::ostream& o) { write_svg(f, o); }, log);
    log << "crossings " << rep.crossings.size() << " upper " << num(rep.upper_time) << " lower "
        << num(rep.lower_time) << " gap " << num(rep.gap()) << "\n";
    return 0;
}

int fig2(const ExperimentConfig& c, const std::string& dir, std::ostream& log) {
    const double edge = c.schedule.x_hi();
    const double x_max = c.hjb ? c.hjb->grid.x_max : 1.5 * edge;
    const double y_max = c.hjb && c.hjb->boundary == GridBoundary::trace ? c.hjb->grid.y_max : std::max(1.0, 2.0 * c.mu0);
    struct Piece {
        std::string name;
        double x0, y0, x1, y1;
    };
    const std::vector<Piece> pieces{{"y_mu0_effective", 0.0, c.mu0, edge, c.mu0},
                                    {"x_zero", 0.0, c.mu0, 0.0, y_max},
                                    {"t_zero_slab", 0.0, c.mu0, x_max, y_max},
                                    {"y_mu0_outflow", edge, c.mu0, x_max, c.mu0}};
    write_file(
        dir, "fig2.csv",
        [&](std::ostream& o) {
            o << "piece,x0,y0,x1,y1\n";
            for (const Piece& p : pieces)
                o << p.name << "," << num(p.x0) << "," << num(p.y0) << "," << num(p.x1) << "," << num(p.y1) << "\n";
        },
        log);
    Figure f;
    f.title = "Effective boundary projected onto the (x, y) plane";
    f.x_label = "x (susceptible)";
    f.y_label = "y (infected)";
    f.rects.push_back({"t = 0 slab", 0.0, c.mu0, x_max, y_max, "#d62728", 0.10});
    f.segments.push_back({"y = mu0, x <= gamma_hi/beta_lo", 0.0, c.mu0, edge, c.mu0, "#d62728", 4.0, false});
    f.segments.push_back({"x = 0", 0.0, c.mu0, 0.0, y_max, "#d62728", 4.0, false});
    f.segments.push_back({"y = mu0, no data needed", edge, c.mu0, x_max, c.mu0, "#7f7f7f", 2.0, true});
    f.x_min = 0.0;
    f.x_max = x_max;
    f.y_min = 0.0;
    f.y_max = y_max;
    write_file(dir, "fig2.svg", [&](std::ostream& o) { write_svg(f, o); }, log);
    return 0;
}

} // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"simulate", "eradication", "mu1",  "optimize",
                                                "hjb",      "verify",      "fig1", "fig2"};
    return names;
}

BoundaryData configured_boundary(const ExperimentConfig& c) {
    const HjbSettings& h = require_grid(c);
    if (h.boundary == GridBoundary::threshold) return threshold_boundary(h.grid, c.schedule);
    OptimizeOptions o = optimize_options(c);
    o.family = h.trace_family;
    o.refine = false;
    o.threads = 1;
    return trace_boundary(h.grid, c.schedule, c.mu,
                          [&](double x, double t) { return minimize_lower(x, c.mu0, t, c.mu, c.schedule, o).value; });
}

ValueGrid configured_hjb(const ExperimentConfig& c, ValueForm form) {
    const HjbSettings& h = require_grid(c);
    const BoundaryData b = configured_boundary(c);
    return form == ValueForm::u ? solve_hjb(h.grid, c.schedule, b) : kruzkov_solve(h.grid, c.schedule, b);
}

int run_command(const std::string& name, const ExperimentConfig& config, const std::string& out_dir, std::ostream& log) {
    fs::create_directories(out_dir);
    if (name == "simulate") return simulate(config, out_dir, log);
    if (name == "eradication") return eradication(config, out_dir, log);
    if (name == "mu1") return certificate(config, out_dir, log);
    if (name == "optimize") return optimize(config, out_dir, log);
    if (name == "hjb") return hjb(config, out_dir, log);
    if (name == "verify") return verify(config, out_dir, log);
    if (name == "fig1") return fig1(config, out_dir, log);
    if (name == "fig2") return fig2(config, out_dir, log);
    throw DomainError("unknown subcommand '" + name + "'");
}

} // namespace sirhjb
