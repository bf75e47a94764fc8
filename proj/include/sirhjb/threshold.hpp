#pragma once

#include "sirhjb/dynamics.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

namespace sirhjb {

struct ExitOptions {
    /// Integration step; <= 0 selects default_step.
    double step = 0.0;
    double horizon_cap = 1e4;
    double tol_s = 1e-10;
};

/// First local time at which S reaches gamma_lo / beta_hi from (x0, y0) under `control`
/// (schedule and control on the local clock). NonTerminationError past the cap.
double exit_time(double x0, const RateSchedule& schedule, const ControlSignal& control, double y0,
                 const ExitOptions& options = {});

struct SweepOptions {
    double safety = 0.1;
    /// Start-time phases swept over the schedule's variation span; 0 = 1 for constant rates, 32 otherwise.
    std::size_t n_phases = 0;
    ExitOptions exit;
    unsigned threads = 0;
};

struct ExitSweep {
    double M_hat = 0.0;
    double max_observed = 0.0;
    double argmax_x0 = 0.0;
    double argmax_start = 0.0;
    std::size_t sample_count = 0;
    std::size_t phase_count = 0;
};

/// (1 + safety) * max of exit_time(x0, shift(schedule, tau), 0, mu0) over n_samples uniformly
/// spaced x0 in [x_lo, x_hi] and n_phases start times tau in [0, variation_span).
ExitSweep sup_exit_time(const RateSchedule& schedule, double mu0, std::size_t n_samples,
                        const SweepOptions& options = {});

/// Which argument bounds the time I can spend before its last possible stationary point.
enum class Mu1Route {
    /// M is the swept exit-time bound.
    exit_sweep,
    /// Rates are constant from T_c on, after which I has no interior minimum; M = T_c.
    freeze_time,
    /// Every admissible S starts at or below gamma_lo / beta_hi; mu1 = mu0.
    subcritical,
};

const char* to_string(Mu1Route route);

struct Mu1Certificate {
    double mu0 = 0.0;
    double M = 0.0;
    double mu1 = 0.0;
    double X_lo = 0.0;
    double X_hi = 0.0;
    std::size_t sample_count = 0;
    /// Largest exit time seen by the sweep that produced M (0 when M does not come from a sweep).
    double max_observed_T = 0.0;
    Mu1Route route = Mu1Route::exit_sweep;
    /// Exit-sweep bound even when another route gave a smaller M; empty when the sweep failed.
    std::optional<double> sweep_M_hat;
    std::string sweep_failure;

    /// `key: value` lines.
    void write_report(std::ostream& out) const;
};

struct Mu1Options {
    SweepOptions sweep;
    /// Upper end of the susceptible populations the certificate must cover, when smaller than x_hi.
    std::optional<double> x_domain_max;
};

/// mu1 = min(mu0, mu0 exp(-gamma_hi M) / 2) with M the smallest bound among the applicable
/// routes. Throws NonTerminationError (carrying the sweep diagnostics) when none applies.
Mu1Certificate mu1(double mu0, const RateSchedule& schedule, std::size_t n_samples, const Mu1Options& options = {});

} // namespace sirhjb
