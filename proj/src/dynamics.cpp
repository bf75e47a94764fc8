#include "sirhjb/dynamics.hpp"

#include "sirhjb/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace sirhjb {

namespace {

constexpr double kMaxStepProduct = 0.5;

struct State {
    double S;
    double I;
};

State rk4(State y, double s, double h, const RateSchedule& schedule, double a) {
    const Derivative k1 = derivative(y.S, y.I, s, schedule, a);
    const Derivative k2 =
        derivative(y.S + 0.5 * h * k1.dS, y.I + 0.5 * h * k1.dI, s + 0.5 * h, schedule, a);
    const Derivative k3 =
        derivative(y.S + 0.5 * h * k2.dS, y.I + 0.5 * h * k2.dI, s + 0.5 * h, schedule, a);
    const Derivative k4 = derivative(y.S + h * k3.dS, y.I + h * k3.dI, s + h, schedule, a);
    State out{y.S + h / 6.0 * (k1.dS + 2.0 * k2.dS + 2.0 * k3.dS + k4.dS),
              y.I + h / 6.0 * (k1.dI + 2.0 * k2.dI + 2.0 * k3.dI + k4.dI)};
    out.S = std::max(0.0, out.S);
    return out;
}

double hermite(double y0, double m0, double y1, double m1, double h, double th) {
    const double t2 = th * th;
    const double t3 = t2 * th;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + th) * h * m0 + (-2.0 * t3 + 3.0 * t2) * y1 +
           (t3 - t2) * h * m1;
}

} // namespace

Derivative derivative(double S, double I, double s, const RateSchedule& schedule, double a) {
    const RatePair r = schedule.at(s);
    return {-r.beta * S * I - a * S, r.beta * S * I - r.gamma * I};
}

double lipschitz_bound(double x, double y, const RateSchedule& schedule) {
    if (x < 0.0 || y < 0.0) throw DomainError("lipschitz_bound needs nonnegative populations");
    const RateBounds& b = schedule.bounds();
    const double n = x + y;
    return b.beta_hi * n * n + std::max(1.0, b.gamma_hi) * n;
}

double jacobian_bound(double x, double y, const RateSchedule& schedule) {
    const RateBounds& b = schedule.bounds();
    return b.beta_hi * (x + y) + std::max(1.0, b.gamma_hi);
}

double decay_floor(double y, double gamma_hi, double t) { return y * std::exp(-gamma_hi * t); }

double default_step(double x, double y, const RateSchedule& schedule, double factor) {
    return factor / std::max(lipschitz_bound(x, y, schedule), jacobian_bound(x, y, schedule));
}

Trajectory::Trajectory(double x, double y, RateSchedule schedule, ControlSignal control, double h)
    : schedule_(std::move(schedule)), control_(std::move(control)), h_(h) {
    if (!(x >= 0.0) || !(y > 0.0)) throw DomainError("flow needs x >= 0 and y > 0");
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("flow needs a positive finite step");
    const double speed = std::max(lipschitz_bound(x, y, schedule_), jacobian_bound(x, y, schedule_));
    if (h * speed > kMaxStepProduct)
        throw StepSizeError("step " + std::to_string(h) + " too large for the local speed bound " +
                                std::to_string(speed),
                            default_step(x, y, schedule_));
    samples_.push_back({0.0, x, y});
    boundaries_ = control_.breakpoints();
    const std::vector<double> kinks = schedule_.kinks();
    boundaries_.insert(boundaries_.end(), kinks.begin(), kinks.end());
    std::sort(boundaries_.begin(), boundaries_.end());
    boundaries_.erase(std::unique(boundaries_.begin(), boundaries_.end()), boundaries_.end());
}

void Trajectory::push_step(double s1) {
    const Sample& last = samples_.back();
    const double s0 = last.s;
    const double a = control_.at(s0);
    const State next = rk4({last.S, last.I}, s0, s1 - s0, schedule_, a);
    d0_.push_back(derivative(last.S, last.I, s0, schedule_, a));
    d1_.push_back(derivative(next.S, next.I, s1, schedule_, a));
    control_values_.push_back(a);
    samples_.push_back({s1, next.S, next.I});
}

void Trajectory::extend(double target) {
    if (!(target >= 0.0) || !std::isfinite(target)) throw DomainError("invalid trajectory horizon");
    if (target <= horizon()) return;
    if (partial_tail_) {
        samples_.pop_back();
        d0_.pop_back();
        d1_.pop_back();
        control_values_.pop_back();
        partial_tail_ = false;
    }
    const auto& bps = boundaries_;
    while (samples_.back().s < target) {
        const double seg_end = segment_ < bps.size() ? bps[segment_] : std::numeric_limits<double>::infinity();
        const double grid = segment_start_ + double(segment_steps_ + 1) * h_;
        double s1 = grid;
        bool end_segment = false;
        if (seg_end <= grid * (1.0 + 1e-14) + 1e-14) {
            s1 = seg_end;
            end_segment = true;
        }
        if (s1 > target) {
            push_step(target);
            partial_tail_ = true;
            break;
        }
        push_step(s1);
        if (end_segment) {
            ++segment_;
            segment_start_ = seg_end;
            segment_steps_ = 0;
        } else {
            ++segment_steps_;
        }
    }
}

std::size_t Trajectory::locate(double s) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                                     [](double v, const Sample& smp) { return v < smp.s; });
    std::size_t k = static_cast<std::size_t>(it - samples_.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, step_count() == 0 ? 0 : step_count() - 1);
}

Sample Trajectory::state(double s) const {
    if (!(s >= 0.0) || s > horizon()) throw DomainError("dense output requested outside the trajectory");
    if (step_count() == 0) return samples_.front();
    const std::size_t k = locate(s);
    const Sample& a = samples_[k];
    const Sample& b = samples_[k + 1];
    if (s == a.s) return a;
    if (s == b.s) return b;
    const double h = b.s - a.s;
    const double th = (s - a.s) / h;
    return {s, hermite(a.S, d0_[k].dS, b.S, d1_[k].dS, h, th), hermite(a.I, d0_[k].dI, b.I, d1_[k].dI, h, th)};
}

double Trajectory::idot(double s) const {
    const Sample z = state(s);
    const RatePair r = schedule_.at(s);
    return (r.beta * z.S - r.gamma) * z.I;
}

double Trajectory::extremum_in_step(std::size_t k) const {
    double lo = samples_[k].s;
    double hi = samples_[k + 1].s;
    auto growth = [this](double s) {
        const Sample z = state(s);
        const RatePair r = schedule_.at(s);
        return r.beta * z.S - r.gamma;
    };
    const bool lo_positive = d0_[k].dI > 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((growth(mid) > 0.0) == lo_positive)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> Trajectory::extrema() const {
    std::vector<double> out;
    for (std::size_t k = 0; k < step_count(); ++k) {
        const double a = d0_[k].dI;
        const double b = d1_[k].dI;
        if ((a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)) out.push_back(extremum_in_step(k));
    }
    return out;
}

void Trajectory::write_csv(std::ostream& out) const {
    out << "s,S,I\n";
    char buf[96];
    for (const Sample& z : samples_) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", z.s, z.S, z.I);
        out << buf;
    }
}

Trajectory flow_local(double x, double y, const RateSchedule& schedule, const ControlSignal& control,
                      double horizon, double h) {
    if (!(horizon >= 0.0)) throw DomainError("flow needs a nonnegative horizon");
    if (!(x >= 0.0) || !(y > 0.0)) throw DomainError("flow needs x >= 0 and y > 0");
    if (h <= 0.0) h = default_step(x, y, schedule);
    Trajectory traj(x, y, schedule, control, h);
    traj.extend(horizon);
    return traj;
}

Trajectory flow(const Datum& datum, const RateSchedule& schedule, double horizon, double h) {
    if (!(datum.t0 >= 0.0)) throw DomainError("datum start time must be nonnegative");
    return flow_local(datum.x, datum.y, shift(schedule, datum.t0), shift_control(datum.control, datum.t0),
                      horizon, h);
}

} // namespace sirhjb
