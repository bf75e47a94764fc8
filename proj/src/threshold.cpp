#include "sirhjb/threshold.hpp"

#include "sirhjb/error.hpp"
#include "sirhjb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace sirhjb {

namespace {

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double exit_time(double x0, const RateSchedule& schedule, const ControlSignal& control, double y0,
                 const ExitOptions& options) {
    if (!(x0 >= 0.0) || !(y0 > 0.0)) throw DomainError("exit_time needs x0 >= 0 and y0 > 0");
    const double target = schedule.x_lo();
    if (x0 <= target) return 0.0;
    const double h = options.step > 0.0 ? options.step : default_step(x0, y0, schedule);
    Trajectory tr(x0, y0, schedule, control, h);
    std::size_t next = 1;
    double chunk = 20.0;
    while (true) {
        tr.extend(std::min(options.horizon_cap, tr.horizon() + chunk));
        chunk *= 2.0;
        const auto& smp = tr.samples();
        for (; next < smp.size(); ++next) {
            if (smp[next].S > target) continue;
            double lo = smp[next - 1].s;
            double hi = smp[next].s;
            if (std::abs(smp[next].S - target) <= options.tol_s) return hi;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double S = tr.state(mid).S;
                if (std::abs(S - target) <= options.tol_s) return mid;
                if (S > target)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        // A partial tail sample is replaced on extension; look at it again.
        next = smp.size() - 1;
        if (tr.horizon() >= options.horizon_cap) {
            const Sample& z = smp.back();
            throw NonTerminationError("S stays above " + fmt_g(target) + " from x0 = " + fmt_g(x0) +
                                          ", y0 = " + fmt_g(y0) + " up to s = " + fmt_g(z.s) +
                                          " (S = " + fmt_g(z.S) + ", I = " + fmt_g(z.I) + ")",
                                      z.s);
        }
    }
}

ExitSweep sup_exit_time(const RateSchedule& schedule, double mu0, std::size_t n_samples,
                        const SweepOptions& options) {
    if (n_samples < 2) throw std::invalid_argument("sup_exit_time needs at least two samples");
    if (!(mu0 > 0.0)) throw DomainError("mu0 must be positive");
    const double span = schedule.variation_span();
    const bool periodic = schedule.kind() == RateKind::sinusoidal;
    std::size_t phases = options.n_phases != 0 ? options.n_phases : (span == 0.0 ? 1 : 32);
    std::vector<double> starts;
    for (std::size_t j = 0; j < phases; ++j) starts.push_back(span * double(j) / double(phases));
    if (!periodic && span > 0.0) starts.push_back(span);

    const double lo = schedule.x_lo();
    const double hi = schedule.x_hi();
    const std::size_t total = starts.size() * n_samples;
    std::vector<double> times(total, 0.0);
    parallel_for(
        total,
        [&](std::size_t k) {
            const std::size_t j = k / n_samples;
            const std::size_t i = k % n_samples;
            const double x0 = lo + (hi - lo) * double(i) / double(n_samples - 1);
            const RateSchedule local = shift(schedule, starts[j]);
            try {
                times[k] = exit_time(x0, local, ControlSignal{}, mu0, options.exit);
            } catch (const NonTerminationError& e) {
                throw NonTerminationError(std::string(e.what()) + ", start time " + fmt_g(starts[j]), e.reached());
            }
        },
        options.threads);

    ExitSweep out;
    out.sample_count = n_samples;
    out.phase_count = starts.size();
    for (std::size_t k = 0; k < total; ++k) {
        if (times[k] > out.max_observed) {
            out.max_observed = times[k];
            out.argmax_x0 = lo + (hi - lo) * double(k % n_samples) / double(n_samples - 1);
            out.argmax_start = starts[k / n_samples];
        }
    }
    out.M_hat = (1.0 + options.safety) * out.max_observed;
    return out;
}

const char* to_string(Mu1Route route) {
    switch (route) {
    case Mu1Route::exit_sweep: return "exit_sweep";
    case Mu1Route::freeze_time: return "freeze_time";
    case Mu1Route::subcritical: return "subcritical";
    }
    return "unknown";
}

void Mu1Certificate::write_report(std::ostream& out) const {
    out << "mu0: " << fmt_g(mu0) << "\n";
    out << "M: " << fmt_g(M) << "\n";
    out << "mu1: " << fmt_g(mu1) << "\n";
    out << "X_lo: " << fmt_g(X_lo) << "\n";
    out << "X_hi: " << fmt_g(X_hi) << "\n";
    out << "sample_count: " << sample_count << "\n";
    out << "max_observed_T: " << fmt_g(max_observed_T) << "\n";
    out << "route: " << to_string(route) << "\n";
    out << "sweep_M_hat: " << (sweep_M_hat ? fmt_g(*sweep_M_hat) : std::string("none")) << "\n";
    if (!sweep_failure.empty()) out << "sweep_failure: " << sweep_failure << "\n";
}

Mu1Certificate mu1(double mu0, const RateSchedule& schedule, std::size_t n_samples, const Mu1Options& options) {
    if (!(mu0 > 0.0)) throw DomainError("mu0 must be positive");
    Mu1Certificate cert;
    cert.mu0 = mu0;
    cert.X_lo = schedule.x_lo();
    cert.X_hi = schedule.x_hi();
    const double gamma_hi = schedule.bounds().gamma_hi;

    if (options.x_domain_max && *options.x_domain_max <= cert.X_lo) {
        cert.route = Mu1Route::subcritical;
        cert.M = 0.0;
        cert.mu1 = mu0;
        return cert;
    }

    std::optional<ExitSweep> sweep;
    try {
        sweep = sup_exit_time(schedule, mu0, n_samples, options.sweep);
        cert.sweep_M_hat = sweep->M_hat;
    } catch (const NonTerminationError& e) {
        cert.sweep_failure = e.what();
    }

    const double freeze = schedule.constant_from();
    const bool use_freeze = std::isfinite(freeze) && (!sweep || freeze < sweep->M_hat);
    if (use_freeze) {
        cert.route = Mu1Route::freeze_time;
        cert.M = freeze;
    } else if (sweep) {
        cert.route = Mu1Route::exit_sweep;
        cert.M = sweep->M_hat;
        cert.sample_count = sweep->sample_count;
        cert.max_observed_T = sweep->max_observed;
    } else {
        throw NonTerminationError("no bound on the exit-time map: " + cert.sweep_failure, 0.0);
    }
    cert.mu1 = std::min(mu0, 0.5 * mu0 * std::exp(-gamma_hi * cert.M));
    return cert;
}

} // namespace sirhjb
