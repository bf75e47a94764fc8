#include "sirhjb/optimize.hpp"

#include "sirhjb/error.hpp"
#include "sirhjb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace sirhjb {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr double kEdgeGap = 1e-9;

std::vector<double> levels_of(bool half_levels) {
    return half_levels ? std::vector<double>{0.0, 0.5, 1.0} : std::vector<double>{0.0, 1.0};
}

FamilyDescriptor describe(const FamilySpec& spec, double x, double y, double t, double mu,
                          const RateSchedule& schedule, const EradicationOptions& options) {
    FamilyDescriptor d;
    d.n_intervals = spec.n_intervals;
    d.levels = levels_of(spec.half_levels);
    d.horizon = spec.horizon;
    if (d.horizon <= 0.0) {
        Trajectory tr = flow(Datum{x, y, t, {}}, schedule, 0.0, options.step);
        d.horizon = certified_horizon(tr, mu, options);
    }
    d.mesh_width = d.horizon / double(std::max<std::size_t>(1, d.n_intervals));
    return d;
}

// Better value wins; exact ties go to the lexicographically smaller control.
bool improves(double value, const ControlSignal& c, double best_value, const ControlSignal& best) {
    if (value != best_value) return value < best_value;
    return control_precedes(c, best);
}

} // namespace

void OptimizationResult::write_csv(std::ostream& out) const {
    char buf[40];
    out << "value,breakpoints,values\n";
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out << buf << ",";
    for (std::size_t k = 0; k < control.breakpoints().size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", control.breakpoints()[k]);
        out << (k ? " " : "") << buf;
    }
    out << ",";
    for (std::size_t k = 0; k < control.values().size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", control.values()[k]);
        out << (k ? " " : "") << buf;
    }
    out << "\n";
}

std::vector<ControlSignal> enumerate_bangbang(double horizon, std::size_t n, bool half_levels) {
    if (n < 1) throw std::invalid_argument("a control family needs at least one interval");
    if (n > 20) throw std::invalid_argument("more than 20 intervals: the family is exponential, use refine_local");
    if (!(horizon > 0.0)) throw DomainError("a control family needs a positive horizon");
    const std::vector<double> levels = levels_of(half_levels);
    const std::size_t base = levels.size();
    std::size_t count = 1;
    for (std::size_t k = 0; k < n; ++k) count *= base;

    std::vector<double> mesh;
    for (std::size_t k = 1; k < n; ++k) mesh.push_back(horizon * double(k) / double(n));

    std::vector<ControlSignal> out;
    out.reserve(count);
    std::vector<double> values(n);
    for (std::size_t code = 0; code < count; ++code) {
        std::size_t c = code;
        for (std::size_t k = n; k-- > 0;) {
            values[k] = levels[c % base];
            c /= base;
        }
        out.push_back(ControlSignal(mesh, values).canonical());
    }
    return out;
}

bool control_precedes(const ControlSignal& a, const ControlSignal& b) {
    if (a.breakpoints() != b.breakpoints())
        return std::lexicographical_compare(a.breakpoints().begin(), a.breakpoints().end(), b.breakpoints().begin(),
                                            b.breakpoints().end());
    return std::lexicographical_compare(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

ControlSignal move_breakpoint(const ControlSignal& control, std::size_t index, double time) {
    const auto& bps = control.breakpoints();
    if (index >= bps.size()) throw std::out_of_range("breakpoint index out of range");
    if (!(time > 0.0)) throw DomainError("breakpoints must stay positive");
    // Each breakpoint carries the value that starts at it.
    std::vector<std::pair<double, double>> pieces;
    for (std::size_t k = 0; k < bps.size(); ++k)
        pieces.emplace_back(k == index ? time : bps[k], control.values()[k + 1]);
    std::stable_sort(pieces.begin(), pieces.end(),
                     [](const auto& l, const auto& r) { return l.first < r.first; });
    std::vector<double> b;
    std::vector<double> v{control.values().front()};
    for (const auto& [at, value] : pieces) {
        if (!b.empty() && b.back() == at) {
            v.back() = value;
            continue;
        }
        b.push_back(at);
        v.push_back(value);
    }
    return ControlSignal(b, v).canonical();
}

double objective_value(double x, double y, double t, double mu, const RateSchedule& schedule,
                       const ControlSignal& control, Objective objective, const EradicationOptions& options) {
    const CrossingReport r = eradication_report_local(x, y, shift(schedule, t), control, mu, options);
    return objective == Objective::lower ? r.lower_time : r.upper_time;
}

OptimizationResult minimize(double x, double y, double t, double mu, const RateSchedule& schedule, Objective objective,
                            const OptimizeOptions& options) {
    if (!(y >= mu)) throw DomainError("minimization needs y >= mu");
    OptimizationResult res;
    res.family = describe(options.family, x, y, t, mu, schedule, options.eradication);
    const std::vector<ControlSignal> family =
        enumerate_bangbang(res.family.horizon > 0.0 ? res.family.horizon : 1.0, res.family.n_intervals,
                           options.family.half_levels);
    std::vector<double> values(family.size());
    parallel_for(
        family.size(),
        [&](std::size_t k) {
            values[k] = objective_value(x, y, t, mu, schedule, family[k], objective, options.eradication);
        },
        options.threads);
    std::size_t best = 0;
    for (std::size_t k = 1; k < family.size(); ++k)
        if (improves(values[k], family[k], values[best], family[best])) best = k;
    res.value = values[best];
    res.control = family[best];
    res.evaluations = family.size();
    if (options.refine) res = refine_local(res, x, y, t, mu, schedule, objective, options);
    return res;
}

OptimizationResult minimize_lower(double x, double y, double t, double mu, const RateSchedule& schedule,
                                  const OptimizeOptions& options) {
    return minimize(x, y, t, mu, schedule, Objective::lower, options);
}

OptimizationResult minimize_upper(double x, double y, double t, double mu, const RateSchedule& schedule,
                                  const OptimizeOptions& options) {
    return minimize(x, y, t, mu, schedule, Objective::upper, options);
}

OptimizationResult refine_local(const OptimizationResult& result, double x, double y, double t, double mu,
                                const RateSchedule& schedule, Objective objective, const OptimizeOptions& options) {
    OptimizationResult cur = result;
    // Moving a switch also moves the integration grid; gains below this are grid noise.
    const double noise = 10.0 * options.eradication.tol_cross;
    auto eval = [&](const ControlSignal& c) {
        ++cur.evaluations;
        return objective_value(x, y, t, mu, schedule, c, objective, options.eradication);
    };
    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        const double start_value = cur.value;
        for (std::size_t i = 0; i < cur.control.breakpoints().size(); ++i) {
            const auto& bps = cur.control.breakpoints();
            const double lo = (i == 0 ? 0.0 : bps[i - 1]) + kEdgeGap;
            const double hi = (i + 1 < bps.size() ? bps[i + 1] : std::max(cur.family.horizon, bps[i])) - kEdgeGap;
            if (!(hi > lo)) continue;
            const ControlSignal base = cur.control;
            auto at = [&](double s) { return move_breakpoint(base, i, s); };
            double best_value = cur.value;
            ControlSignal best = cur.control;
            auto consider = [&](double s) {
                const ControlSignal c = at(s);
                const double v = eval(c);
                if (v < best_value - noise) {
                    best_value = v;
                    best = c;
                }
                return v;
            };
            double a = lo, b = hi;
            double c = b - kGolden * (b - a);
            double d = a + kGolden * (b - a);
            double fc = consider(c);
            double fd = consider(d);
            while (b - a > options.tol_opt) {
                if (fc <= fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - kGolden * (b - a);
                    fc = consider(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + kGolden * (b - a);
                    fd = consider(d);
                }
            }
            if (best_value < cur.value) {
                cur.value = best_value;
                cur.control = best;
            }
        }
        if (start_value - cur.value < options.tol_opt) break;
    }
    return cur;
}

double dpp_defect(double x, double y, double t, double mu, const RateSchedule& schedule,
                  const OptimizationResult& result, double t_probe, Objective objective,
                  const OptimizeOptions& options) {
    if (!(t_probe >= 0.0)) throw DomainError("probe time must be nonnegative");
    if (t_probe == 0.0) return 0.0;
    Trajectory tr = flow_local(x, y, shift(schedule, t), result.control, 0.0, options.eradication.step);
    // First time I reaches mu under the control.
    double hit = -1.0;
    double chunk = 20.0;
    std::size_t next = 0;
    while (hit < 0.0) {
        tr.extend(tr.horizon() + chunk);
        chunk *= 2.0;
        const auto& smp = tr.samples();
        for (; next < smp.size(); ++next) {
            if (smp[next].I > mu) continue;
            if (next == 0) {
                hit = 0.0;
                break;
            }
            double lo = smp[next - 1].s, hi = smp[next].s;
            for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
                const double mid = 0.5 * (lo + hi);
                (tr.state(mid).I > mu ? lo : hi) = mid;
            }
            hit = hi;
            break;
        }
        if (hit < 0.0) {
            next = smp.size() - 1;
            if (tr.horizon() >= options.eradication.horizon_cap)
                throw NonTerminationError("I never reaches mu under the control", tr.horizon());
        }
    }
    if (t_probe > hit) throw DomainError("probe time beyond the first time I reaches mu");
    const Sample z = tr.state(t_probe);
    const OptimizationResult later = minimize(z.S, std::max(z.I, mu), t + t_probe, mu, schedule, objective, options);
    return std::abs(result.value - t_probe - later.value);
}

} // namespace sirhjb
