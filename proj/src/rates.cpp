#include "sirhjb/rates.hpp"

#include "sirhjb/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sirhjb {

namespace {

constexpr double kBoundSlack = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double piecewise_value(const PiecewiseRates& p, const std::vector<double>& v, double tau) {
    const double half = 0.5 * p.ramp_width;
    std::size_t k = 0;
    while (k < p.breakpoints.size() && p.breakpoints[k] + half <= tau) ++k;
    if (k < p.breakpoints.size() && tau > p.breakpoints[k] - half) {
        const double w = (tau - (p.breakpoints[k] - half)) / p.ramp_width;
        return v[k] + (v[k + 1] - v[k]) * w;
    }
    return v[k];
}

// Integral of a piecewise profile over [0, tau].
double piecewise_antiderivative(const PiecewiseRates& p, const std::vector<double>& v, double tau) {
    const double half = 0.5 * p.ramp_width;
    double acc = 0.0;
    double cursor = 0.0;
    for (std::size_t k = 0; k < p.breakpoints.size(); ++k) {
        const double r0 = p.breakpoints[k] - half;
        const double r1 = p.breakpoints[k] + half;
        if (tau <= r0) return acc + v[k] * (tau - cursor);
        acc += v[k] * (r0 - cursor);
        if (tau <= r1) {
            const double frac = (tau - r0) / p.ramp_width;
            const double end = v[k] + (v[k + 1] - v[k]) * frac;
            return acc + 0.5 * (v[k] + end) * (tau - r0);
        }
        acc += 0.5 * (v[k] + v[k + 1]) * p.ramp_width;
        cursor = r1;
    }
    return acc + v.back() * (tau - cursor);
}

RatePair base_value(const BaseProfile& profile, double tau) {
    return std::visit(
        overloaded{
            [](const ConstantRates& c) { return RatePair{c.beta, c.gamma}; },
            [tau](const PiecewiseRates& p) {
                return RatePair{piecewise_value(p, p.beta, tau), piecewise_value(p, p.gamma, tau)};
            },
            [tau](const SinusoidalRates& s) { return RatePair{s.beta(tau), s.gamma(tau)}; },
        },
        profile);
}

RatePair base_antiderivative(const BaseProfile& profile, double tau) {
    return std::visit(
        overloaded{
            [tau](const ConstantRates& c) { return RatePair{c.beta * tau, c.gamma * tau}; },
            [tau](const PiecewiseRates& p) {
                return RatePair{piecewise_antiderivative(p, p.beta, tau),
                                piecewise_antiderivative(p, p.gamma, tau)};
            },
            [tau](const SinusoidalRates& s) {
                return RatePair{s.beta.integral(0.0, tau), s.gamma.integral(0.0, tau)};
            },
        },
        profile);
}

double freeze_ramp_start(const FrozenRates& f) { return std::max(0.0, f.t_freeze - f.ramp_width); }

RatePair frozen_value(const FrozenRates& f, double tau) {
    if (tau >= f.t_freeze) return {f.beta0, f.gamma0};
    const double r0 = freeze_ramp_start(f);
    if (tau < r0) return base_value(f.before, tau);
    const RatePair from = base_value(f.before, r0);
    const double w = (tau - r0) / (f.t_freeze - r0);
    return {from.beta + (f.beta0 - from.beta) * w, from.gamma + (f.gamma0 - from.gamma) * w};
}

RatePair frozen_antiderivative(const FrozenRates& f, double tau) {
    const double r0 = freeze_ramp_start(f);
    if (tau <= r0) return base_antiderivative(f.before, tau);
    RatePair acc = base_antiderivative(f.before, r0);
    const double ramp_end = std::min(tau, f.t_freeze);
    const RatePair a = frozen_value(f, r0);
    const RatePair b = ramp_end >= f.t_freeze ? RatePair{f.beta0, f.gamma0} : frozen_value(f, ramp_end);
    acc.beta += 0.5 * (a.beta + b.beta) * (ramp_end - r0);
    acc.gamma += 0.5 * (a.gamma + b.gamma) * (ramp_end - r0);
    if (tau > f.t_freeze) {
        acc.beta += f.beta0 * (tau - f.t_freeze);
        acc.gamma += f.gamma0 * (tau - f.t_freeze);
    }
    return acc;
}

void validate_piecewise(const PiecewiseRates& p) {
    if (p.beta.size() != p.breakpoints.size() + 1 || p.gamma.size() != p.breakpoints.size() + 1)
        throw std::invalid_argument("piecewise rates need one value per interval");
    if (!(p.ramp_width > 0.0))
        throw std::invalid_argument("piecewise rates need a positive ramp width to stay continuous");
    for (std::size_t k = 0; k < p.breakpoints.size(); ++k) {
        if (p.breakpoints[k] - 0.5 * p.ramp_width < 0.0)
            throw std::invalid_argument("piecewise breakpoint ramp extends below t = 0");
        if (k > 0 && p.breakpoints[k] - p.breakpoints[k - 1] < p.ramp_width)
            throw std::invalid_argument("piecewise breakpoints closer than the ramp width");
    }
}

void validate_wave(const Wave& w) {
    if (w.amplitude != 0.0 && !(w.frequency > 0.0))
        throw std::invalid_argument("sinusoidal rate needs a positive frequency");
}

void validate_base(const BaseProfile& profile) {
    std::visit(overloaded{
                   [](const ConstantRates&) {},
                   [](const PiecewiseRates& p) { validate_piecewise(p); },
                   [](const SinusoidalRates& s) {
                       validate_wave(s.beta);
                       validate_wave(s.gamma);
                   },
               },
               profile);
}

double clamp_to(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

} // namespace

double Wave::operator()(double t) const {
    if (amplitude == 0.0) return mean;
    return mean + amplitude * std::sin(frequency * t + phase);
}

double Wave::integral(double t0, double t1) const {
    double acc = mean * (t1 - t0);
    if (amplitude != 0.0)
        acc -= amplitude / frequency * (std::cos(frequency * t1 + phase) - std::cos(frequency * t0 + phase));
    return acc;
}

RateSchedule::RateSchedule(RateProfile profile, RateBounds bounds, BoundsCheck check)
    : profile_(std::move(profile)), bounds_(bounds) {
    if (!(bounds_.beta_lo > 0.0) || !(bounds_.gamma_lo > 0.0) || bounds_.beta_hi < bounds_.beta_lo ||
        bounds_.gamma_hi < bounds_.gamma_lo)
        throw std::invalid_argument("rate bounds must satisfy 0 < lo <= hi");
    std::visit(overloaded{
                   [](const ConstantRates&) {},
                   [](const PiecewiseRates& p) { validate_piecewise(p); },
                   [](const SinusoidalRates& s) {
                       validate_wave(s.beta);
                       validate_wave(s.gamma);
                   },
                   [](const FrozenRates& f) {
                       validate_base(f.before);
                       if (f.t_freeze < 0.0) throw std::invalid_argument("negative freeze time");
                       if (!(f.ramp_width > 0.0))
                           throw std::invalid_argument("frozen rates need a positive ramp width");
                   },
               },
               profile_);
    verify_bounds(check);
}

RateSchedule RateSchedule::constant(double beta, double gamma) {
    return RateSchedule(ConstantRates{beta, gamma}, RateBounds{beta, beta, gamma, gamma});
}

RateKind RateSchedule::kind() const {
    switch (profile_.index()) {
    case 0: return RateKind::constant;
    case 1: return RateKind::piecewise_constant;
    case 2: return RateKind::sinusoidal;
    default: return RateKind::frozen_after;
    }
}

void RateSchedule::verify_bounds(const BoundsCheck& check) const {
    std::vector<double> times;
    const std::size_t n = std::max<std::size_t>(check.points, 2);
    times.reserve(n + 8);
    for (std::size_t k = 0; k < n; ++k) times.push_back(check.horizon * double(k) / double(n - 1));
    auto add_breaks = [&times](const BaseProfile& b) {
        if (const auto* p = std::get_if<PiecewiseRates>(&b))
            for (double t : p->breakpoints) times.push_back(t);
    };
    std::visit(overloaded{
                   [&](const PiecewiseRates& p) { add_breaks(p); },
                   [&](const FrozenRates& f) {
                       add_breaks(f.before);
                       times.push_back(f.t_freeze);
                       times.push_back(freeze_ramp_start(f));
                   },
                   [](const auto&) {},
               },
               profile_);

    const double bs = kBoundSlack * bounds_.beta_hi;
    const double gs = kBoundSlack * bounds_.gamma_hi;
    for (double t : times) {
        const RatePair r = base(t);
        if (!(r.beta >= bounds_.beta_lo - bs && r.beta <= bounds_.beta_hi + bs))
            throw std::invalid_argument("beta(" + std::to_string(t) + ") = " + std::to_string(r.beta) +
                                        " violates the declared bounds");
        if (!(r.gamma >= bounds_.gamma_lo - gs && r.gamma <= bounds_.gamma_hi + gs))
            throw std::invalid_argument("gamma(" + std::to_string(t) + ") = " + std::to_string(r.gamma) +
                                        " violates the declared bounds");
    }
}

RatePair RateSchedule::base(double tau) const {
    return std::visit(overloaded{
                          [tau](const FrozenRates& f) { return frozen_value(f, tau); },
                          [tau](const auto& b) { return base_value(BaseProfile{b}, tau); },
                      },
                      profile_);
}

RatePair RateSchedule::at(double t) const {
    if (!(t >= 0.0)) throw DomainError("rates evaluated at negative time");
    const RatePair r = base(t + offset_);
    return {clamp_to(r.beta, bounds_.beta_lo, bounds_.beta_hi),
            clamp_to(r.gamma, bounds_.gamma_lo, bounds_.gamma_hi)};
}

RatePair RateSchedule::integral(double t0, double t1) const {
    if (!(t0 >= 0.0) || t1 < t0) throw DomainError("rate integral over an invalid interval");
    auto anti = [this](double tau) {
        return std::visit(overloaded{
                              [tau](const FrozenRates& f) { return frozen_antiderivative(f, tau); },
                              [tau](const auto& b) { return base_antiderivative(BaseProfile{b}, tau); },
                          },
                          profile_);
    };
    const RatePair a = anti(t0 + offset_);
    const RatePair b = anti(t1 + offset_);
    return {b.beta - a.beta, b.gamma - a.gamma};
}

double RateSchedule::constant_from() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double absolute = std::visit(
        overloaded{
            [](const ConstantRates&) { return 0.0; },
            [](const PiecewiseRates& p) {
                return p.breakpoints.empty() ? 0.0 : p.breakpoints.back() + 0.5 * p.ramp_width;
            },
            [inf](const SinusoidalRates& s) {
                return s.beta.is_constant() && s.gamma.is_constant() ? 0.0 : inf;
            },
            [](const FrozenRates& f) { return f.t_freeze; },
        },
        profile_);
    return std::max(0.0, absolute - offset_);
}

std::optional<RatePair> RateSchedule::terminal_rates() const {
    const double from = constant_from();
    if (!std::isfinite(from)) return std::nullopt;
    return at(from);
}

double RateSchedule::variation_span() const {
    const double absolute = std::visit(
        overloaded{
            [](const ConstantRates&) { return 0.0; },
            [](const PiecewiseRates& p) {
                return p.breakpoints.empty() ? 0.0 : p.breakpoints.back() + 0.5 * p.ramp_width;
            },
            [](const SinusoidalRates& s) {
                double span = 0.0;
                for (const Wave* w : {&s.beta, &s.gamma})
                    if (!w->is_constant()) span = std::max(span, 2.0 * std::numbers::pi / w->frequency);
                return span;
            },
            [](const FrozenRates& f) { return f.t_freeze; },
        },
        profile_);
    if (kind() == RateKind::sinusoidal) return absolute;
    return std::max(0.0, absolute - offset_);
}

std::vector<double> RateSchedule::kinks() const {
    std::vector<double> absolute;
    auto piecewise_kinks = [&absolute](const BaseProfile& b, double until) {
        if (const auto* p = std::get_if<PiecewiseRates>(&b))
            for (double t : p->breakpoints)
                for (double k : {t - 0.5 * p->ramp_width, t + 0.5 * p->ramp_width})
                    if (k < until) absolute.push_back(k);
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::visit(overloaded{
                   [&](const PiecewiseRates& p) { piecewise_kinks(BaseProfile{p}, inf); },
                   [&](const FrozenRates& f) {
                       const double r0 = freeze_ramp_start(f);
                       piecewise_kinks(f.before, r0);
                       absolute.push_back(r0);
                       absolute.push_back(f.t_freeze);
                   },
                   [](const auto&) {},
               },
               profile_);
    std::vector<double> out;
    for (double k : absolute)
        if (k - offset_ > 0.0) out.push_back(k - offset_);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

RatePair eval_rates(const RateSchedule& schedule, double t) { return schedule.at(t); }

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string wave_text(const Wave& w) {
    return "wave(" + num(w.mean) + "," + num(w.amplitude) + "," + num(w.frequency) + "," + num(w.phase) + ")";
}

std::string list_text(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + num(v[k]);
    return out + "]";
}

std::string base_text(const BaseProfile& profile) {
    return std::visit(overloaded{
                          [](const ConstantRates& c) { return "constant(" + num(c.beta) + "," + num(c.gamma) + ")"; },
                          [](const PiecewiseRates& p) {
                              return "piecewise(" + list_text(p.breakpoints) + "," + list_text(p.beta) + "," +
                                     list_text(p.gamma) + "," + num(p.ramp_width) + ")";
                          },
                          [](const SinusoidalRates& s) {
                              return "sinusoidal(" + wave_text(s.beta) + "," + wave_text(s.gamma) + ")";
                          },
                      },
                      profile);
}

} // namespace

std::string canonical_text(const RateSchedule& schedule) {
    const std::string profile = std::visit(
        overloaded{
            [](const FrozenRates& f) {
                return "frozen(" + base_text(f.before) + "," + num(f.t_freeze) + "," + num(f.beta0) + "," +
                       num(f.gamma0) + "," + num(f.ramp_width) + ")";
            },
            [](const auto& p) { return base_text(BaseProfile{p}); },
        },
        schedule.profile());
    const RateBounds& b = schedule.bounds();
    return profile + ";bounds(" + num(b.beta_lo) + "," + num(b.beta_hi) + "," + num(b.gamma_lo) + "," +
           num(b.gamma_hi) + ");offset(" + num(schedule.offset()) + ")";
}

RateSchedule shift(const RateSchedule& schedule, double t0) {
    if (!(t0 >= 0.0)) throw DomainError("schedule shifted by a negative time");
    RateSchedule out = schedule;
    out.offset_ = schedule.offset_ + t0;
    return out;
}

ControlSignal::ControlSignal(std::vector<double> breakpoints, std::vector<double> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (values_.size() != breakpoints_.size() + 1)
        throw std::invalid_argument("control needs exactly one value per interval plus the tail");
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
        if (!std::isfinite(breakpoints_[k]) || !(breakpoints_[k] > 0.0))
            throw std::invalid_argument("control breakpoints must be finite and positive");
        if (k > 0 && !(breakpoints_[k] > breakpoints_[k - 1]))
            throw std::invalid_argument("control breakpoints must be strictly ascending");
    }
    for (double v : values_)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("control values must lie in [0, 1]");
}

ControlSignal ControlSignal::constant(double a) { return ControlSignal({}, {a}); }

double ControlSignal::at(double s) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), s);
    return values_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

ControlSignal ControlSignal::canonical() const {
    std::vector<double> b;
    std::vector<double> v{values_.front()};
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
        if (values_[k + 1] == v.back()) continue;
        b.push_back(breakpoints_[k]);
        v.push_back(values_[k + 1]);
    }
    return ControlSignal(std::move(b), std::move(v));
}

ControlSignal ControlSignal::delayed(double t0) const {
    if (!(t0 >= 0.0)) throw DomainError("control delayed by a negative time");
    std::vector<double> b = breakpoints_;
    for (double& x : b) x += t0;
    return ControlSignal(std::move(b), values_);
}

double eval_control(const ControlSignal& control, double s) { return control.at(s); }

ControlSignal shift_control(const ControlSignal& control, double t0) {
    if (!(t0 >= 0.0)) throw DomainError("control shifted by a negative time");
    std::vector<double> b;
    std::vector<double> v{control.at(t0)};
    const auto& bp = control.breakpoints();
    for (std::size_t k = 0; k < bp.size(); ++k) {
        if (bp[k] <= t0) continue;
        b.push_back(bp[k] - t0);
        v.push_back(control.values()[k + 1]);
    }
    return ControlSignal(std::move(b), std::move(v));
}

} // namespace sirhjb
