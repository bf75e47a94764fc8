#include "sirhjb/verify.hpp"

#include "sirhjb/error.hpp"
#include "sirhjb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace sirhjb {

namespace {

constexpr double kGrowth = 1.05;
constexpr int kScanSteps = 40;
constexpr int kBisectionCap = 200;

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Peak {
    double time;
    double excess;
};

struct PeakScan {
    double first_down = -1.0;
    std::vector<Peak> peaks;
};

// Local maxima of I on the integrated range (which extends past the certified horizon) and the
// first downward crossing of mu.
PeakScan scan_peaks(const Datum& datum, const RateSchedule& schedule, double mu, const EradicationOptions& options) {
    Trajectory tr = flow(datum, schedule, 0.0, options.step);
    const double H = certified_horizon(tr, mu, options);
    const CrossingReport rep = crossings(tr, mu, H, options);
    PeakScan out;
    for (const Crossing& c : rep.crossings)
        if (c.direction == Direction::down) {
            out.first_down = c.time;
            break;
        }
    for (double s : tr.extrema()) {
        if (tr.start_derivative(tr.locate(s)).dI > 0.0) out.peaks.push_back({s, tr.state(s).I - mu});
    }
    return out;
}

// Excess over mu of the peak closest in time to `reference`; updates the reference.
std::optional<double> tracked_excess(const Datum& datum, const RateSchedule& schedule, double mu,
                                     const EradicationOptions& options, double& reference) {
    const PeakScan scan = scan_peaks(datum, schedule, mu, options);
    if (scan.peaks.empty()) return std::nullopt;
    const Peak* best = &scan.peaks.front();
    for (const Peak& p : scan.peaks)
        if (std::abs(p.time - reference) < std::abs(best->time - reference)) best = &p;
    reference = best->time;
    return best->excess;
}

} // namespace

std::vector<Datum> draw_ensemble(const EnsembleSpec& spec) {
    if (!(spec.x_hi >= spec.x_lo) || !(spec.y_hi >= spec.y_lo) || !(spec.t_hi >= 0.0) || !(spec.control_span > 0.0))
        throw DomainError("ensemble ranges must be ordered and the control span positive");
    PortableRng rng(spec.seed);
    std::vector<Datum> out;
    out.reserve(spec.size);
    for (std::size_t k = 0; k < spec.size; ++k) {
        Datum d;
        d.x = rng.uniform(spec.x_lo, spec.x_hi);
        d.y = rng.uniform(spec.y_lo, spec.y_hi);
        d.t0 = rng.uniform(0.0, spec.t_hi);
        const double first = rng.uniform() < 0.5 ? 0.0 : 1.0;
        const std::size_t n = rng.index(spec.max_switches + 1);
        std::vector<double> b(n);
        for (double& s : b) s = d.t0 + rng.uniform(0.0, spec.control_span);
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        b.erase(std::remove_if(b.begin(), b.end(), [](double s) { return !(s > 0.0); }), b.end());
        std::vector<double> v{first};
        for (std::size_t i = 0; i < b.size(); ++i) v.push_back(1.0 - v.back());
        d.control = ControlSignal(b, v);
        out.push_back(std::move(d));
    }
    return out;
}

std::uint64_t control_digest(const ControlSignal& control) {
    std::string text = "b";
    for (double b : control.breakpoints()) text += "," + num(b);
    text += ";v";
    for (double v : control.values()) text += "," + num(v);
    return fnv1a(text);
}

void GapReport::write_csv(std::ostream& out) const {
    char buf[256];
    out << "x,y,t,control_digest,upper,lower,gap,tangent\n";
    for (const GapRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%016llx,%.17g,%.17g,%.17g,%d\n", r.x, r.y, r.t,
                      static_cast<unsigned long long>(r.control_digest), r.upper, r.lower, r.gap, r.tangent ? 1 : 0);
        out << buf;
    }
}

void GapReport::write_summary(std::ostream& out) const {
    std::size_t tangent = 0;
    for (const GapRow& r : rows) tangent += r.tangent;
    out << "gap report\n";
    out << "  mu: " << num(mu) << "\n";
    out << "  members: " << rows.size() << " (seed " << ensemble.seed << ", tangent members " << tangent << ")\n";
    out << "  max_gap: " << num(max_gap) << "\n";
    out << "  fraction_gap_above_10_tol_cross: " << num(fraction_positive) << "\n";
}

std::optional<Datum> tangent_datum(const Datum& datum, const RateSchedule& schedule, double mu, double y_floor,
                                   const EradicationOptions& options) {
    // Target: the peak after the first downward crossing whose height is closest to mu.
    const PeakScan scan = scan_peaks(datum, schedule, mu, options);
    if (scan.first_down < 0.0) return std::nullopt;
    const Peak* target = nullptr;
    for (const Peak& p : scan.peaks)
        if (p.time > scan.first_down && (!target || std::abs(p.excess) < std::abs(target->excess))) target = &p;
    if (!target) return std::nullopt;
    if (target->excess == 0.0) return datum;

    auto F = [&](double y, double& reference) {
        Datum d = datum;
        d.y = y;
        return tracked_excess(d, schedule, mu, options, reference);
    };
    // Walk y geometrically in whichever direction brings the tracked peak closer to mu.
    double a = datum.y, fa = target->excess, ref_a = target->time;
    double b = a, fb = fa;
    bool bracketed = false;
    int direction = 0;
    for (int k = 0; k < kScanSteps && !bracketed; ++k) {
        struct Try {
            double y, f, ref;
            bool ok;
        };
        auto attempt = [&](double y) {
            Try t{y, 0.0, ref_a, false};
            if (y < y_floor) return t;
            const auto f = F(y, t.ref);
            if (f) {
                t.f = *f;
                t.ok = true;
            }
            return t;
        };
        Try next{};
        if (direction == 0) {
            const Try up = attempt(a * kGrowth), down = attempt(a / kGrowth);
            const bool up_ok = up.ok && ((up.f < 0.0) != (fa < 0.0) || std::abs(up.f) < std::abs(fa));
            const bool down_ok = down.ok && ((down.f < 0.0) != (fa < 0.0) || std::abs(down.f) < std::abs(fa));
            if (up_ok && (!down_ok || (up.f < 0.0) != (fa < 0.0) || std::abs(up.f) <= std::abs(down.f))) {
                next = up;
                direction = 1;
            } else if (down_ok) {
                next = down;
                direction = -1;
            } else {
                return std::nullopt;
            }
        } else {
            next = attempt(direction > 0 ? a * kGrowth : a / kGrowth);
            if (!next.ok) return std::nullopt;
        }
        b = next.y;
        fb = next.f;
        if ((fa < 0.0) != (fb < 0.0)) {
            bracketed = true;
        } else {
            a = b;
            fa = fb;
            ref_a = next.ref;
        }
    }
    if (!bracketed) return std::nullopt;
    const double tol = 0.1 * options.tol_cross * mu;
    for (int it = 0; it < kBisectionCap && std::abs(b - a) > 1e-16 * std::abs(a); ++it) {
        if (std::abs(fa) <= tol || std::abs(fb) <= tol) break;
        const double m = 0.5 * (a + b);
        double ref = ref_a;
        const auto fv = F(m, ref);
        if (!fv) return std::nullopt;
        if ((*fv < 0.0) == (fa < 0.0)) {
            a = m;
            fa = *fv;
            ref_a = ref;
        } else {
            b = m;
            fb = *fv;
        }
    }
    Datum out = datum;
    out.y = std::abs(fa) <= std::abs(fb) ? a : b;
    return out;
}

GapReport gap_report(const RateSchedule& schedule, double mu, const EnsembleSpec& ensemble,
                     const EradicationOptions& options, unsigned threads) {
    std::vector<Datum> data = draw_ensemble(ensemble);
    std::vector<char> tangent(data.size(), 0);
    const std::size_t n_tangent = std::min(ensemble.tangent_members, data.size());
    parallel_for(
        n_tangent,
        [&](std::size_t k) {
            if (auto d = tangent_datum(data[k], schedule, mu, ensemble.y_lo, options)) {
                data[k] = *d;
                tangent[k] = 1;
            }
        },
        threads);

    GapReport rep;
    rep.ensemble = ensemble;
    rep.mu = mu;
    rep.tol_cross = options.tol_cross;
    rep.rows.resize(data.size());
    parallel_for(
        data.size(),
        [&](std::size_t k) {
            const CrossingReport r = eradication_report(data[k], schedule, mu, options);
            GapRow& row = rep.rows[k];
            row.x = data[k].x;
            row.y = data[k].y;
            row.t = data[k].t0;
            row.control_digest = control_digest(data[k].control);
            row.upper = r.upper_time;
            row.lower = r.lower_time;
            row.gap = r.gap();
            row.tangent = tangent[k];
        },
        threads);
    std::size_t positive = 0;
    for (const GapRow& r : rep.rows) {
        rep.max_gap = std::max(rep.max_gap, r.gap);
        positive += r.gap > 10.0 * options.tol_cross;
    }
    rep.fraction_positive = rep.rows.empty() ? 0.0 : double(positive) / double(rep.rows.size());
    return rep;
}

void ExtremumCheck::write_summary(std::ostream& out) const {
    out << "stationary points of I\n";
    out << "  threshold: " << num(threshold) << "\n";
    out << "  members: " << members << "\n";
    out << "  events: " << events << "\n";
    out << "  min_value: " << num(min_value) << "\n";
    out << "  violations: " << violations << "\n";
}

ExtremumCheck stationary_point_check(const RateSchedule& schedule, double threshold, double mu,
                                     const EnsembleSpec& ensemble, const EradicationOptions& options,
                                     unsigned threads) {
    const std::vector<Datum> data = draw_ensemble(ensemble);
    std::vector<std::size_t> events(data.size(), 0), violations(data.size(), 0);
    std::vector<double> lowest(data.size(), std::numeric_limits<double>::infinity());
    parallel_for(
        data.size(),
        [&](std::size_t k) {
            Trajectory tr = flow(data[k], schedule, 0.0, options.step);
            certified_horizon(tr, mu, options);
            for (double s : tr.extrema()) {
                const double v = tr.state(s).I;
                ++events[k];
                lowest[k] = std::min(lowest[k], v);
                if (!(v > threshold)) ++violations[k];
            }
        },
        threads);
    ExtremumCheck out;
    out.threshold = threshold;
    out.members = data.size();
    out.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < data.size(); ++k) {
        out.events += events[k];
        out.violations += violations[k];
        out.min_value = std::min(out.min_value, lowest[k]);
    }
    return out;
}

void ResidualStats::write_summary(std::ostream& out) const {
    out << "PDE residual\n";
    out << "  max: " << num(max) << "\n";
    out << "  mean: " << num(mean) << "\n";
    out << "  checked_nodes: " << checked << "\n";
    out << "  skipped_fraction: " << num(skipped_fraction) << "\n";
    out << "  constant: " << num(constant) << "\n";
}

ResidualStats residual_check(const ValueGrid& grid, const RateSchedule& schedule) {
    if (grid.form() != ValueForm::u) throw FormError("residual check needs a u-form grid");
    const GridSpec& g = grid.spec();
    const double dx = g.dx(), dt = g.dt();
    const bool timed = g.nt >= 3;
    const double min_spacing = timed ? std::min({dx, g.dy(), dt}) : std::min(dx, g.dy());
    const double cap = 50.0 / min_spacing;
    std::vector<double> ly(g.ny);
    for (std::size_t j = 0; j < g.ny; ++j) ly[j] = std::log(g.y(j));

    const std::size_t k_lo = timed ? 1 : 0, k_hi = timed ? g.nt - 1 : g.nt;
    double sum = 0.0, mx = 0.0;
    std::size_t checked = 0, total = 0;
    for (std::size_t k = k_lo; k < k_hi; ++k) {
        const RatePair r = schedule.at(g.t(k));
        for (std::size_t j = 1; j + 1 < g.ny; ++j)
            for (std::size_t i = 0; i + 1 < g.nx; ++i) {
                ++total;
                const double u = grid.at(i, j, k);
                const double hm = ly[j] - ly[j - 1], hp = ly[j + 1] - ly[j];
                const double up = grid.at(i, j + 1, k), um = grid.at(i, j - 1, k);
                const double d2y = 2.0 * ((up - u) / hp - (u - um) / hm) / (hp + hm);
                double d2x = 0.0, p = 0.0;
                if (i > 0) {
                    d2x = (grid.at(i + 1, j, k) - 2.0 * u + grid.at(i - 1, j, k)) / (dx * dx);
                    p = (grid.at(i + 1, j, k) - grid.at(i - 1, j, k)) / (2.0 * dx);
                }
                double d2t = 0.0, ut = 0.0;
                if (timed) {
                    d2t = (grid.at(i, j, k + 1) - 2.0 * u + grid.at(i, j, k - 1)) / (dt * dt);
                    ut = (grid.at(i, j, k + 1) - grid.at(i, j, k - 1)) / (2.0 * dt);
                }
                if (std::abs(d2x) > cap || std::abs(d2y) > cap || std::abs(d2t) > cap) continue;
                const double x = g.x(i), y = g.y(j);
                const double q_log = (up - um) / (hp + hm);
                const double H = r.beta * x * y * p + x * std::max(p, 0.0) + (r.gamma - r.beta * x) * q_log;
                const double res = std::abs(-ut + H - 1.0);
                sum += res;
                mx = std::max(mx, res);
                ++checked;
            }
    }
    ResidualStats s;
    s.max = mx;
    s.mean = checked ? sum / double(checked) : 0.0;
    s.checked = checked;
    s.skipped_fraction = total ? double(total - checked) / double(total) : 0.0;
    s.constant = mx / (dx + g.dy() + dt);
    return s;
}

void SemiconcavityReport::write_summary(std::ostream& out) const {
    out << "semiconcavity probe\n";
    out << "  K: [" << num(K.lo[0]) << ", " << num(K.hi[0]) << "] x [" << num(K.lo[1]) << ", " << num(K.hi[1])
        << "] x [" << num(K.lo[2]) << ", " << num(K.hi[2]) << "]\n";
    out << "  h_cells: " << h << "\n";
    out << "  D2: " << num(D2) << "\n";
    out << "  C: " << num(C) << "\n";
    out << "  probes: " << probes << "\n";
}

SemiconcavityReport semiconcavity_probe(const ValueGrid& grid, const Box& K, std::size_t h) {
    if (h == 0) throw DomainError("semiconcavity probe step must be at least one cell");
    const GridSpec& g = grid.spec();
    const bool timed = g.nt > 1;
    const std::array<double, 3> spacing{g.dx(), g.dy(), timed ? g.dt() : 0.0};
    const std::array<double, 3> origin{0.0, g.y_min, 0.0};
    const std::array<std::size_t, 3> n{g.nx, g.ny, g.nt};
    std::array<std::size_t, 3> first{}, last{};
    for (int a = 0; a < 3; ++a) {
        if (a == 2 && !timed) {
            if (K.lo[2] > 0.0 || K.hi[2] < 0.0) throw DomainError("K misses the single time slice");
            first[2] = last[2] = 0;
            continue;
        }
        const double lo = (K.lo[a] - origin[a]) / spacing[a], hi = (K.hi[a] - origin[a]) / spacing[a];
        const double f = std::ceil(lo - 1e-9), l = std::floor(hi + 1e-9);
        if (l < f) throw DomainError("K contains no grid nodes");
        if (f < double(h) || l + double(h) > double(n[a] - 1))
            throw DomainError("K is not strictly inside the grid box for the probe step");
        first[a] = std::size_t(f);
        last[a] = std::size_t(l);
    }
    std::vector<std::array<int, 3>> dirs;
    for (int ex = -1; ex <= 1; ++ex)
        for (int ey = -1; ey <= 1; ++ey)
            for (int et = -1; et <= 1; ++et) {
                if (!timed && et != 0) continue;
                const std::array<int, 3> e{ex, ey, et};
                // Keep one of each +-e pair: first nonzero component positive.
                int lead = 0;
                for (int c : e)
                    if (c != 0) {
                        lead = c;
                        break;
                    }
                if (lead > 0) dirs.push_back(e);
            }
    SemiconcavityReport rep;
    rep.K = K;
    rep.h = h;
    rep.D2 = -std::numeric_limits<double>::infinity();
    const long hh = long(h);
    for (std::size_t k = first[2]; k <= last[2]; ++k)
        for (std::size_t j = first[1]; j <= last[1]; ++j)
            for (std::size_t i = first[0]; i <= last[0]; ++i) {
                const double u = grid.at(i, j, k);
                for (const auto& e : dirs) {
                    auto at = [&](long s) {
                        return grid.at(std::size_t(long(i) + s * e[0] * hh), std::size_t(long(j) + s * e[1] * hh),
                                       std::size_t(long(k) + s * e[2] * hh));
                    };
                    double norm2 = 0.0;
                    for (int a = 0; a < 3; ++a) norm2 += std::pow(double(e[a]) * double(h) * spacing[a], 2);
                    const double d2 = (at(1) + at(-1) - 2.0 * u) / norm2;
                    rep.D2 = std::max(rep.D2, d2);
                    ++rep.probes;
                }
            }
    rep.C = std::max(rep.D2, 0.0);
    return rep;
}

bool semiconcavity_stable(const SemiconcavityReport& coarse, const SemiconcavityReport& fine, double ratio,
                          double floor) {
    if (!std::isfinite(coarse.C) || !std::isfinite(fine.C)) return false;
    return std::abs(fine.C - coarse.C) <= (ratio - 1.0) * std::max(coarse.C, floor);
}

double freeze_time(double mu0, double mu, double gamma_hi) {
    if (!(mu > 0.0) || !(mu <= mu0)) throw DomainError("freeze time needs 0 < mu <= mu0");
    if (!(gamma_hi > 0.0)) throw DomainError("freeze time needs gamma_hi > 0");
    return std::log(mu0 / mu) / (2.0 * gamma_hi);
}

std::vector<StabilityRow> stability_check(const Datum& datum, const RateSchedule& schedule,
                                          const std::vector<double>& deltas, double horizon, double dir_x,
                                          double dir_y) {
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (!(deltas[k] >= 0.0)) throw DomainError("stability deltas must be nonnegative");
        if (k > 0 && !(deltas[k] < deltas[k - 1])) throw DomainError("stability deltas must be descending");
    }
    const RateSchedule local = shift(schedule, datum.t0);
    double h = default_step(datum.x, datum.y, local);
    if (!deltas.empty())
        h = std::min(h, default_step(datum.x + std::abs(dir_x) * deltas.front(), datum.y + std::abs(dir_y) * deltas.front(),
                                     local));
    const Trajectory base = flow(datum, schedule, horizon, h);
    std::vector<StabilityRow> rows;
    for (double delta : deltas) {
        Datum p = datum;
        p.x += dir_x * delta;
        p.y += dir_y * delta;
        const Trajectory other = flow(p, schedule, horizon, h);
        double sup = 0.0;
        auto probe = [&](double s) {
            const Sample a = base.state(s), b = other.state(s);
            sup = std::max({sup, std::abs(a.S - b.S), std::abs(a.I - b.I)});
        };
        const auto& smp = base.samples();
        for (std::size_t k = 0; k < smp.size(); ++k) {
            probe(smp[k].s);
            if (k + 1 < smp.size()) probe(0.5 * (smp[k].s + smp[k + 1].s));
        }
        rows.push_back({delta, sup});
    }
    return rows;
}

void ProbeTable::write_csv(std::ostream& out) const {
    char buf[200];
    out << "x,y,t,hjb,trajectory,discrepancy\n";
    for (const ProbeRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.x, r.y, r.t, r.hjb, r.trajectory,
                      r.discrepancy);
        out << buf;
    }
}

ProbeTable hjb_vs_trajectory(const ValueGrid& grid, const std::vector<std::array<double, 3>>& probes,
                             const RateSchedule& schedule, double mu, const OptimizeOptions& options) {
    ProbeTable table;
    table.rows.resize(probes.size());
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& p = probes[k];
        const double s = sample_value(grid, p[0], p[1], p[2]);
        table.rows[k] = {p[0], p[1], p[2], grid.form() == ValueForm::u ? s : -std::log(s), 0.0, 0.0};
    }
    OptimizeOptions inner = options;
    inner.threads = 1;
    parallel_for(
        probes.size(),
        [&](std::size_t k) {
            ProbeRow& r = table.rows[k];
            r.trajectory = minimize_lower(r.x, r.y, r.t, mu, schedule, inner).value;
            r.discrepancy = std::abs(r.hjb - r.trajectory);
        },
        options.threads);
    for (const ProbeRow& r : table.rows) table.max_discrepancy = std::max(table.max_discrepancy, r.discrepancy);
    return table;
}

} // namespace sirhjb
