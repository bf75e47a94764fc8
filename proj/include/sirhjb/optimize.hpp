#pragma once

#include "sirhjb/eradication.hpp"

#include <cstddef>
#include <iosfwd>
#include <vector>

namespace sirhjb {

/// Finite control family: piecewise-constant controls on a uniform mesh of n_intervals cells
/// over [0, horizon], values from `levels`, tail equal to the last cell.
struct FamilySpec {
    std::size_t n_intervals = 8;
    /// Adds the level 1/2 to {0, 1}.
    bool half_levels = false;
    /// <= 0: certified horizon of the alpha = 0 flow from the datum.
    double horizon = 0.0;
};

struct FamilyDescriptor {
    double horizon = 0.0;
    double mesh_width = 0.0;
    std::size_t n_intervals = 0;
    std::vector<double> levels;
};

struct OptimizationResult {
    double value = 0.0;
    /// On the datum's local clock (s = 0 is the start time).
    ControlSignal control;
    FamilyDescriptor family;
    std::size_t evaluations = 0;

    /// Header `value,breakpoints,values`; lists are space separated.
    void write_csv(std::ostream& out) const;
};

enum class Objective { lower, upper };

struct OptimizeOptions {
    FamilySpec family;
    EradicationOptions eradication;
    double tol_opt = 1e-6;
    bool refine = true;
    std::size_t max_sweeps = 50;
    unsigned threads = 0;
};

/// All levels^n controls of the family, lexicographic with the first cell most significant,
/// canonicalized. Refuses n_intervals > 20.
std::vector<ControlSignal> enumerate_bangbang(double horizon, std::size_t n_intervals, bool half_levels = false);

/// Lexicographically smaller breakpoint vector (then value vector); the deterministic tie-break.
bool control_precedes(const ControlSignal& a, const ControlSignal& b);

/// Control with breakpoint `index` moved to `time`, re-sorted and canonicalized.
ControlSignal move_breakpoint(const ControlSignal& control, std::size_t index, double time);

/// Eradication time of one local-clock control for the datum (x, y, t).
double objective_value(double x, double y, double t, double mu, const RateSchedule& schedule,
                       const ControlSignal& control, Objective objective, const EradicationOptions& options = {});

OptimizationResult minimize(double x, double y, double t, double mu, const RateSchedule& schedule, Objective objective,
                            const OptimizeOptions& options = {});

OptimizationResult minimize_lower(double x, double y, double t, double mu, const RateSchedule& schedule,
                                  const OptimizeOptions& options = {});
OptimizationResult minimize_upper(double x, double y, double t, double mu, const RateSchedule& schedule,
                                  const OptimizeOptions& options = {});

/// Golden-section coordinate descent on the switching times; never returns a larger value.
OptimizationResult refine_local(const OptimizationResult& result, double x, double y, double t, double mu,
                                const RateSchedule& schedule, Objective objective, const OptimizeOptions& options = {});

/// |value(x,y,t) - t_probe - value(S(t_probe), I(t_probe), t + t_probe)| with the second value
/// re-optimized over the same family spec. DomainError unless 0 <= t_probe <= the first time
/// I reaches mu under result.control.
double dpp_defect(double x, double y, double t, double mu, const RateSchedule& schedule,
                  const OptimizationResult& result, double t_probe, Objective objective,
                  const OptimizeOptions& options = {});

} // namespace sirhjb
