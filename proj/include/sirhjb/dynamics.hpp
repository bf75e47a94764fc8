#pragma once

#include "sirhjb/rates.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace sirhjb {

/// Initial state (x, y) at absolute start time t0 under an absolute-clock control.
struct Datum {
    double x = 0.0;
    double y = 0.0;
    double t0 = 0.0;
    ControlSignal control;
};

struct Derivative {
    double dS = 0.0;
    double dI = 0.0;
};

/// Right-hand side of the controlled system at local time s.
Derivative derivative(double S, double I, double s, const RateSchedule& schedule, double a);

/// beta_hi (x + y)^2 + max(1, gamma_hi) (x + y): bounds |dS|, |dI| along flows from (x, y).
double lipschitz_bound(double x, double y, const RateSchedule& schedule);

/// Bound on the Jacobian norm of the right-hand side over the invariant region of (x, y).
double jacobian_bound(double x, double y, const RateSchedule& schedule);

/// y exp(-gamma_hi t).
double decay_floor(double y, double gamma_hi, double t);

/// Step used when none is requested: factor / max(lipschitz_bound, jacobian_bound).
double default_step(double x, double y, const RateSchedule& schedule, double factor = 0.05);

struct Sample {
    double s = 0.0;
    double S = 0.0;
    double I = 0.0;
};

/// Fixed-step RK4 solution with cubic Hermite dense output.
///
/// The step grid restarts at every control breakpoint and rate kink, so no step straddles a
/// switch or a ramp end. Grids are nested in the horizon: extending a trajectory reproduces
/// the samples a longer direct integration would produce.
class Trajectory {
public:
    /// Local-clock problem: `schedule` and `control` are already shifted to the start time.
    Trajectory(double x, double y, RateSchedule schedule, ControlSignal control, double h);

    void extend(double horizon);

    double horizon() const { return samples_.back().s; }
    double step() const { return h_; }
    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t step_count() const { return samples_.size() - 1; }
    double step_control(std::size_t k) const { return control_values_[k]; }
    /// dI at the two ends of step k, evaluated with that step's control.
    Derivative start_derivative(std::size_t k) const { return d0_[k]; }
    Derivative end_derivative(std::size_t k) const { return d1_[k]; }

    const RateSchedule& schedule() const { return schedule_; }
    const ControlSignal& control() const { return control_; }

    /// Index of the step containing s.
    std::size_t locate(double s) const;
    /// Dense state; DomainError outside [0, horizon].
    Sample state(double s) const;
    /// dI/ds of the dense state.
    double idot(double s) const;
    /// Interior extremum of I inside step k (dI changes sign), refined by bisection.
    double extremum_in_step(std::size_t k) const;
    /// Times of all interior extrema of I (sign changes of dI).
    std::vector<double> extrema() const;

    void write_csv(std::ostream& out) const;

private:
    void push_step(double s1);

    RateSchedule schedule_;
    ControlSignal control_;
    double h_;
    std::vector<Sample> samples_;
    std::vector<double> control_values_;
    std::vector<Derivative> d0_;
    std::vector<Derivative> d1_;
    std::vector<double> boundaries_;
    bool partial_tail_ = false;
    std::size_t segment_ = 0;
    double segment_start_ = 0.0;
    std::size_t segment_steps_ = 0;
};

/// Integrates the datum's shifted system on [0, horizon]; h <= 0 selects default_step.
/// Throws StepSizeError when h * max(lipschitz_bound, jacobian_bound) > 0.5.
Trajectory flow(const Datum& datum, const RateSchedule& schedule, double horizon, double h = 0.0);

/// Same with the schedule and control already expressed on the local clock.
Trajectory flow_local(double x, double y, const RateSchedule& schedule, const ControlSignal& control,
                      double horizon, double h = 0.0);

} // namespace sirhjb
