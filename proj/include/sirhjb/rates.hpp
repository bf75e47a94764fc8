#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sirhjb {

/// mean + amplitude * sin(frequency * t + phase)
struct Wave {
    double mean = 0.0;
    double amplitude = 0.0;
    double frequency = 1.0;
    double phase = 0.0;

    double operator()(double t) const;
    /// Exact integral over [t0, t1].
    double integral(double t0, double t1) const;
    bool is_constant() const { return amplitude == 0.0; }
};

struct ConstantRates {
    double beta = 0.0;
    double gamma = 0.0;
};

/// Step rates joined by linear ramps of width `ramp_width` centred on each breakpoint.
/// `beta` and `gamma` hold one value per interval (breakpoints.size() + 1 entries).
struct PiecewiseRates {
    std::vector<double> breakpoints;
    std::vector<double> beta;
    std::vector<double> gamma;
    double ramp_width = 1e-3;
};

struct SinusoidalRates {
    Wave beta;
    Wave gamma;
};

using BaseProfile = std::variant<ConstantRates, PiecewiseRates, SinusoidalRates>;

/// Follows `before` until t_freeze, then holds (beta0, gamma0). The hand-over is a linear
/// ramp on [t_freeze - ramp_width, t_freeze], so rates are exactly constant from t_freeze on.
struct FrozenRates {
    BaseProfile before;
    double t_freeze = 0.0;
    double beta0 = 0.0;
    double gamma0 = 0.0;
    double ramp_width = 1e-3;
};

using RateProfile = std::variant<ConstantRates, PiecewiseRates, SinusoidalRates, FrozenRates>;

enum class RateKind { constant, piecewise_constant, sinusoidal, frozen_after };

struct RateBounds {
    double beta_lo = 0.0;
    double beta_hi = 0.0;
    double gamma_lo = 0.0;
    double gamma_hi = 0.0;
};

struct RatePair {
    double beta = 0.0;
    double gamma = 0.0;
    bool operator==(const RatePair&) const = default;
};

/// Sampling used to certify user-supplied bounds at construction.
struct BoundsCheck {
    double horizon = 100.0;
    std::size_t points = 10000;
};

/// Time-varying transmission and recovery rates with certified bounds.
///
/// A schedule carries an internal clock offset: `shift(s, t0)` evaluates the same profile
/// at s + t0. Immutable after construction.
class RateSchedule {
public:
    RateSchedule(RateProfile profile, RateBounds bounds, BoundsCheck check = {});

    /// Constant rates with tight bounds.
    static RateSchedule constant(double beta, double gamma);

    RateKind kind() const;
    const RateProfile& profile() const { return profile_; }
    const RateBounds& bounds() const { return bounds_; }
    double offset() const { return offset_; }

    /// Throws DomainError for t < 0.
    RatePair at(double t) const;

    /// Exact integrals of beta and gamma over [t0, t1] (local clock, 0 <= t0 <= t1).
    RatePair integral(double t0, double t1) const;

    /// Local time from which the rates are constant; +inf when they never freeze.
    double constant_from() const;
    /// The rates held from constant_from() on, if any.
    std::optional<RatePair> terminal_rates() const;

    /// Length of local time over which start-time shifts produce distinct rate histories:
    /// 0 for constant rates, the freeze time for frozen/piecewise kinds, the longest period
    /// for sinusoidal kinds.
    double variation_span() const;

    /// Local times > 0 where the rates are continuous but not smooth (ramp ends), ascending.
    std::vector<double> kinks() const;

    /// gamma_lo / beta_hi and gamma_hi / beta_lo.
    double x_lo() const { return bounds_.gamma_lo / bounds_.beta_hi; }
    double x_hi() const { return bounds_.gamma_hi / bounds_.beta_lo; }

    friend RateSchedule shift(const RateSchedule& schedule, double t0);

private:
    RateSchedule() = default;
    RatePair base(double tau) const;
    void verify_bounds(const BoundsCheck& check) const;

    RateProfile profile_;
    RateBounds bounds_;
    double offset_ = 0.0;
};

RatePair eval_rates(const RateSchedule& schedule, double t);

/// Canonical one-line text of a schedule (kind, parameters at full precision, bounds, offset);
/// equal schedules give equal text.
std::string canonical_text(const RateSchedule& schedule);

/// Schedule whose clock starts t0 later: eval(shift(s, t0), u) == eval(s, u + t0).
RateSchedule shift(const RateSchedule& schedule, double t0);

/// Right-continuous piecewise-constant vaccination control with values in [0, 1].
///
/// values()[i] holds on [breakpoints[i-1], breakpoints[i]); values().back() is the tail.
class ControlSignal {
public:
    ControlSignal() : values_{0.0} {}
    ControlSignal(std::vector<double> breakpoints, std::vector<double> values);

    static ControlSignal constant(double a);

    double at(double s) const;
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<double>& values() const { return values_; }
    double tail() const { return values_.back(); }

    /// Drops breakpoints separating equal values.
    ControlSignal canonical() const;
    /// Inverse of a shift: breakpoints move t0 later, the first value extends back to 0.
    ControlSignal delayed(double t0) const;

    bool operator==(const ControlSignal&) const = default;

private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

double eval_control(const ControlSignal& control, double s);

/// eval_control(result, s) == eval_control(control, s + t0); breakpoints <= t0 are dropped.
ControlSignal shift_control(const ControlSignal& control, double t0);

} // namespace sirhjb
