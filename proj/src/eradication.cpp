#include "sirhjb/eradication.hpp"

#include "sirhjb/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace sirhjb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kBisectionCap = 200;
constexpr double kEnvelopeResolution = 0.01;
constexpr std::size_t kEnvelopeMaxPoints = 20000;

struct Point {
    double s;
    double e;
    double slope;
    bool extremum;
};

double extremum_between(const DenseCurve& c, double lo, double hi, bool lo_positive) {
    for (int it = 0; it < kBisectionCap && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((c.slope(mid) > 0.0) == lo_positive)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Root of value - mu in [lo, hi] given a class change between the ends.
double refine_crossing(const DenseCurve& c, double mu, double lo, double hi, double tol) {
    const double elo = c.value(lo) - mu;
    if (std::abs(elo) <= tol) return lo;
    const double ehi = c.value(hi) - mu;
    if (std::abs(ehi) <= tol) return hi;
    const bool lo_above = elo >= 0.0;
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < kBisectionCap; ++it) {
        mid = 0.5 * (lo + hi);
        const double em = c.value(mid) - mu;
        if (std::abs(em) <= tol) break;
        if ((em >= 0.0) == lo_above)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

std::vector<const Wave*> waves(const SinusoidalRates& s) { return {&s.beta, &s.gamma}; }

} // namespace

double tol_deriv(const RateSchedule& schedule, double mu, const EradicationOptions& options) {
    return options.tol_deriv_factor * schedule.bounds().gamma_hi * mu;
}

void CrossingReport::write_csv(std::ostream& out) const {
    char buf[160];
    out << "time,direction\n";
    for (const Crossing& c : crossings) {
        std::snprintf(buf, sizeof buf, "%.17g,%s\n", c.time, c.direction == Direction::up ? "up" : "down");
        out << buf;
    }
    out << "# upper_time,lower_time,gap,certified_horizon,derivative_at_upper\n";
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", upper_time, lower_time, gap(),
                  certified_horizon, derivative_at_upper);
    out << buf;
}

DenseCurve infected_curve(const Trajectory& trajectory) {
    DenseCurve c;
    c.nodes.reserve(trajectory.samples().size());
    for (const Sample& z : trajectory.samples()) c.nodes.push_back(z.s);
    c.value = [&trajectory](double s) { return trajectory.state(s).I; };
    c.slope = [&trajectory](double s) { return trajectory.idot(s); };
    return c;
}

CrossingReport crossings(const DenseCurve& curve, double mu, double horizon, double tol_cross, double tol_d) {
    if (!(mu > 0.0)) throw DomainError("threshold must be positive");
    if (curve.nodes.empty() || curve.nodes.back() < horizon)
        throw DomainError("curve does not cover the requested horizon");
    const double tol = tol_cross * mu;

    std::vector<Point> pts;
    auto make = [&](double s, bool ext) { return Point{s, curve.value(s) - mu, curve.slope(s), ext}; };
    pts.push_back(make(curve.nodes.front(), false));
    for (std::size_t k = 0; k + 1 < curve.nodes.size() && curve.nodes[k] < horizon; ++k) {
        const double a = curve.nodes[k];
        const double b = std::min(curve.nodes[k + 1], horizon);
        const double sa = pts.back().slope;
        const double sb = curve.slope(b);
        if ((sa > 0.0 && sb < 0.0) || (sa < 0.0 && sb > 0.0))
            pts.push_back(make(extremum_between(curve, a, b, sa > 0.0), true));
        pts.push_back(make(b, false));
    }

    auto is_touch = [&](std::size_t i) {
        if (i == 0 || i + 1 == pts.size()) return false;
        const Point& p = pts[i];
        const bool stationary = p.extremum || p.slope == 0.0;
        return stationary && std::abs(p.e) <= tol && std::abs(p.slope) <= tol_d;
    };

    CrossingReport rep;
    rep.certified_horizon = horizon;
    std::size_t prev = 0;
    bool above = pts[0].e >= 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (is_touch(i)) {
            if (above) {
                rep.crossings.push_back({pts[i].s, Direction::down, true});
                rep.crossings.push_back({pts[i].s, Direction::up, true});
            } else {
                rep.crossings.push_back({pts[i].s, Direction::up, true});
                rep.crossings.push_back({pts[i].s, Direction::down, true});
            }
            continue;
        }
        const bool now_above = pts[i].e >= 0.0;
        if (now_above != above) {
            const double t = refine_crossing(curve, mu, pts[prev].s, pts[i].s, tol);
            rep.crossings.push_back({t, above ? Direction::down : Direction::up, false});
            above = now_above;
        }
        prev = i;
    }

    // Touch pairs approached from below end in a down event that is not a real exit:
    // I stays <= mu around it, so it moves the upper time but not the lower time.
    bool have_upper = false;
    bool have_lower = false;
    for (std::size_t i = rep.crossings.size(); i-- > 0;) {
        const Crossing& c = rep.crossings[i];
        if (c.direction != Direction::down) continue;
        if (!have_upper) {
            rep.upper_time = c.time;
            have_upper = true;
        }
        const bool from_below = c.touch && i > 0 && rep.crossings[i - 1].touch &&
                                rep.crossings[i - 1].direction == Direction::up &&
                                rep.crossings[i - 1].time == c.time;
        if (!from_below) {
            rep.lower_time = c.time;
            have_lower = true;
            break;
        }
    }
    if (!have_lower) rep.lower_time = 0.0;
    rep.derivative_at_upper = curve.slope(rep.upper_time);
    return rep;
}

CrossingReport crossings(const Trajectory& trajectory, double mu, double horizon,
                         const EradicationOptions& options) {
    if (trajectory.horizon() < horizon) throw DomainError("trajectory shorter than the requested horizon");
    return crossings(infected_curve(trajectory), mu, horizon, options.tol_cross,
                     tol_deriv(trajectory.schedule(), mu, options));
}

double envelope_exponent(const RateSchedule& schedule, double S, double s) {
    const RateBounds& b = schedule.bounds();
    double range = 0.0;
    const double from = schedule.constant_from();
    if (std::isfinite(from)) {
        const RatePair tail = *schedule.terminal_rates();
        if (S * tail.beta - tail.gamma >= 0.0) return kInf;
        range = std::max(0.0, from - s);
    } else {
        const auto& sin = std::get<SinusoidalRates>(schedule.profile());
        const double drift = S * sin.beta.mean - sin.gamma.mean;
        if (drift >= 0.0) return kInf;
        double osc = 0.0;
        for (const Wave* w : waves(sin)) {
            if (w->is_constant()) continue;
            const double weight = w == &sin.beta ? S : 1.0;
            osc += weight * 2.0 * std::abs(w->amplitude) / w->frequency;
        }
        range = osc / -drift;
    }
    if (range == 0.0) return 0.0;
    const std::size_t n = std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(range / kEnvelopeResolution)),
                                                  1, kEnvelopeMaxPoints);
    const double delta = range / double(n);
    double best = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        const RatePair r = schedule.integral(s, s + delta * double(k));
        best = std::max(best, S * r.beta - r.gamma);
    }
    return best + 0.5 * delta * (S * b.beta_hi + b.gamma_hi);
}

double certified_horizon(Trajectory& trajectory, double mu, const EradicationOptions& options) {
    if (!(mu > 0.0)) throw DomainError("threshold must be positive");
    const double x_lo = trajectory.schedule().x_lo();
    std::size_t next = 0;
    double retry_after = -kInf;
    double chunk = 20.0;
    while (true) {
        const auto& smp = trajectory.samples();
        for (; next < smp.size(); ++next) {
            const Sample& z = smp[next];
            if (z.I > mu) continue;
            if (z.S < x_lo) return z.s;
            if (z.I < mu && z.s >= retry_after) {
                const double g = envelope_exponent(trajectory.schedule(), z.S, z.s);
                if (std::isfinite(g) && z.I * std::exp(g) < mu) return z.s;
                retry_after = z.s + options.envelope_interval;
            }
        }
        if (trajectory.horizon() >= options.horizon_cap) {
            const Sample& z = smp.back();
            throw NonTerminationError("no certified horizon before the cap " + std::to_string(options.horizon_cap) +
                                          " (S = " + std::to_string(z.S) + ", I = " + std::to_string(z.I) + ")",
                                      trajectory.horizon());
        }
        // Re-examine the tail sample after extension: it may have been a partial step.
        next = smp.size() - 1;
        trajectory.extend(std::min(options.horizon_cap, trajectory.horizon() + chunk));
        chunk *= 2.0;
    }
}

double certified_horizon(const Datum& datum, const RateSchedule& schedule, double mu,
                         const EradicationOptions& options) {
    Trajectory tr = flow(datum, schedule, 0.0, options.step);
    return certified_horizon(tr, mu, options);
}

CrossingReport eradication_report_local(double x, double y, const RateSchedule& schedule,
                                        const ControlSignal& control, double mu,
                                        const EradicationOptions& options) {
    if (!(y >= mu)) throw DomainError("eradication times need y >= mu");
    Trajectory tr = flow_local(x, y, schedule, control, 0.0, options.step);
    const double h = certified_horizon(tr, mu, options);
    CrossingReport rep = crossings(tr, mu, h, options);
    rep.certified_horizon = h;
    return rep;
}

CrossingReport eradication_report(const Datum& datum, const RateSchedule& schedule, double mu,
                                  const EradicationOptions& options, double horizon_scale) {
    if (!(datum.y >= mu)) throw DomainError("eradication times need y >= mu");
    Trajectory tr = flow(datum, schedule, 0.0, options.step);
    const double h = certified_horizon(tr, mu, options);
    const double analysed = std::max(h, h * horizon_scale);
    tr.extend(analysed);
    CrossingReport rep = crossings(tr, mu, analysed, options);
    rep.certified_horizon = h;
    return rep;
}

double upper_time(const Datum& datum, const RateSchedule& schedule, double mu, const EradicationOptions& options) {
    return eradication_report(datum, schedule, mu, options).upper_time;
}

double lower_time(const Datum& datum, const RateSchedule& schedule, double mu, const EradicationOptions& options) {
    return eradication_report(datum, schedule, mu, options).lower_time;
}

} // namespace sirhjb
