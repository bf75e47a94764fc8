#pragma once

#include "sirhjb/dynamics.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace sirhjb {

enum class Direction { up, down };

struct Crossing {
    double time = 0.0;
    Direction direction = Direction::down;
    /// Part of an up/down pair at a tangential touch of the threshold.
    bool touch = false;
};

struct EradicationOptions {
    double tol_cross = 1e-10;
    /// tol_deriv = tol_deriv_factor * gamma_hi * mu.
    double tol_deriv_factor = 1e-8;
    double horizon_cap = 1e4;
    /// Integration step; <= 0 selects default_step.
    double step = 0.0;
    /// Minimum spacing between two failed rate-envelope certificate attempts.
    double envelope_interval = 1.0;
};

double tol_deriv(const RateSchedule& schedule, double mu, const EradicationOptions& options);

struct CrossingReport {
    std::vector<Crossing> crossings;
    double upper_time = 0.0;
    double lower_time = 0.0;
    double certified_horizon = 0.0;
    double derivative_at_upper = 0.0;

    double gap() const { return upper_time - lower_time; }
    /// Rows `time,direction`, then a comment line naming the summary fields and one summary row.
    void write_csv(std::ostream& out) const;
};

/// A scalar curve known through dense evaluation, its derivative, and a node grid on which
/// it is piecewise smooth with at most one extremum between adjacent nodes.
struct DenseCurve {
    std::vector<double> nodes;
    std::function<double(double)> value;
    std::function<double(double)> slope;
};

DenseCurve infected_curve(const Trajectory& trajectory);

/// Threshold crossings of `curve` on [0, horizon] together with the upper/lower times they imply.
CrossingReport crossings(const DenseCurve& curve, double mu, double horizon, double tol_cross, double tol_deriv);

/// Same on a trajectory; DomainError when it does not reach `horizon`.
CrossingReport crossings(const Trajectory& trajectory, double mu, double horizon,
                         const EradicationOptions& options = {});

/// sup over a >= 0 of S * int_s^{s+a} beta - int_s^{s+a} gamma (local clock), with a
/// discretization margin. Since S is nonincreasing, I(s + a) <= I(s) exp(result) for all a.
/// +inf when the exponent is not eventually decreasing.
double envelope_exponent(const RateSchedule& schedule, double S, double s);

/// Extends `trajectory` until a sample time H at which I stays below mu forever, certified
/// either by S < gamma_lo / beta_hi with I <= mu (dI < 0 from then on) or by the rate
/// envelope I(H) exp(envelope_exponent) < mu. Throws NonTerminationError past the cap.
double certified_horizon(Trajectory& trajectory, double mu, const EradicationOptions& options = {});

double certified_horizon(const Datum& datum, const RateSchedule& schedule, double mu,
                         const EradicationOptions& options = {});

/// Trajectory, certified horizon, and crossing analysis for one datum. `horizon_scale`
/// multiplies the analysed horizon (used to check that extra time changes nothing).
CrossingReport eradication_report(const Datum& datum, const RateSchedule& schedule, double mu,
                                  const EradicationOptions& options = {}, double horizon_scale = 1.0);

/// Local-clock variant used by the optimizer.
CrossingReport eradication_report_local(double x, double y, const RateSchedule& schedule,
                                        const ControlSignal& control, double mu,
                                        const EradicationOptions& options = {});

double upper_time(const Datum& datum, const RateSchedule& schedule, double mu,
                  const EradicationOptions& options = {});
double lower_time(const Datum& datum, const RateSchedule& schedule, double mu,
                  const EradicationOptions& options = {});

} // namespace sirhjb
