#pragma once

#include "sirhjb/eradication.hpp"
#include "sirhjb/hjb.hpp"
#include "sirhjb/optimize.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sirhjb {

/// mt19937_64 with uniforms built from the top 53 bits, so draws are identical on every
/// standard library.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [0, n).
    std::size_t index(std::size_t n) { return std::size_t(uniform() * double(n)); }

private:
    std::mt19937_64 engine_;
};

/// Random data (x, y, t, control) for ensemble checks.
struct EnsembleSpec {
    std::size_t size = 1000;
    std::uint64_t seed = 1;
    double x_lo = 0.0;
    double x_hi = 2.0;
    /// Lower end of y; callers set it to mu0.
    double y_lo = 0.1;
    double y_hi = 1.0;
    /// Start times are uniform on [0, t_hi].
    double t_hi = 6.283185307179586;
    /// Controls get 0..max_switches switches inside [t, t + control_span].
    std::size_t max_switches = 6;
    double control_span = 20.0;
    /// The first `tangent_members` members have y moved onto a tangency of I with mu
    /// (when one can be bracketed), the only configuration with a positive gap.
    std::size_t tangent_members = 0;
};

std::vector<Datum> draw_ensemble(const EnsembleSpec& spec);

/// FNV-1a 64 of the control's breakpoints and values at full precision.
std::uint64_t control_digest(const ControlSignal& control);

struct GapRow {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    std::uint64_t control_digest = 0;
    double upper = 0.0;
    double lower = 0.0;
    double gap = 0.0;
    bool tangent = false;
};

struct GapReport {
    EnsembleSpec ensemble;
    double mu = 0.0;
    double tol_cross = 0.0;
    std::vector<GapRow> rows;
    double max_gap = 0.0;
    /// Fraction of rows with gap > 10 tol_cross.
    double fraction_positive = 0.0;

    /// Header `x,y,t,control_digest,upper,lower,gap,tangent`.
    void write_csv(std::ostream& out) const;
    void write_summary(std::ostream& out) const;
};

/// The datum with y moved (keeping y >= y_floor) so that a local maximum of I after the first
/// downward crossing of mu touches mu. nullopt when no sign change is bracketed.
std::optional<Datum> tangent_datum(const Datum& datum, const RateSchedule& schedule, double mu, double y_floor,
                                   const EradicationOptions& options = {});

GapReport gap_report(const RateSchedule& schedule, double mu, const EnsembleSpec& ensemble,
                     const EradicationOptions& options = {}, unsigned threads = 0);

/// Interior extrema of I over the certified horizon of every ensemble member.
struct ExtremumCheck {
    double threshold = 0.0;
    std::size_t members = 0;
    std::size_t events = 0;
    double min_value = 0.0;
    std::size_t violations = 0;
    void write_summary(std::ostream& out) const;
};

/// Counts stationary points of I (dI = 0) with I <= threshold, certified horizons at `mu`.
ExtremumCheck stationary_point_check(const RateSchedule& schedule, double threshold, double mu,
                                     const EnsembleSpec& ensemble, const EradicationOptions& options = {},
                                     unsigned threads = 0);

struct ResidualStats {
    double max = 0.0;
    double mean = 0.0;
    std::size_t checked = 0;
    double skipped_fraction = 0.0;
    /// max / (dx + dy + dt).
    double constant = 0.0;
    void write_summary(std::ostream& out) const;
};

/// Centered-difference residual -D_t u + H(t, x, y, D_x u, D_y u) - 1 at nodes with centered
/// neighbours. y-derivatives are taken in ln y (y D_y u = D_{ln y} u), the variable the solver
/// interpolates in. On x = 0 the x-derivative drops out of H and the column is included. Nodes
/// whose centered second difference in x, ln y, or t exceeds 50 / min(dx, dy, dt) in magnitude
/// are skipped. Grids with nt < 3 are treated as stationary (D_t u = 0).
ResidualStats residual_check(const ValueGrid& grid, const RateSchedule& schedule);

/// Axis-aligned box in (x, y, t).
struct Box {
    std::array<double, 3> lo{};
    std::array<double, 3> hi{};
};

struct SemiconcavityReport {
    Box K;
    /// Probe step in grid cells along each axis.
    std::size_t h = 1;
    /// Max over nodes in K and the 13 axis/diagonal directions of the symmetric second difference.
    double D2 = 0.0;
    /// max(D2, 0).
    double C = 0.0;
    std::size_t probes = 0;
    void write_summary(std::ostream& out) const;
};

/// DomainError when a probe z +- h e leaves the grid box or K is empty of nodes.
SemiconcavityReport semiconcavity_probe(const ValueGrid& grid, const Box& K, std::size_t h);

/// True when C stabilizes from step h to h/2: |C_h/2 - C_h| <= (ratio - 1) max(C_h, floor).
bool semiconcavity_stable(const SemiconcavityReport& coarse, const SemiconcavityReport& fine, double ratio = 1.2,
                          double floor = 1e-9);

/// (1 / (2 gamma_hi)) ln(mu0 / mu).
double freeze_time(double mu0, double mu, double gamma_hi);

struct StabilityRow {
    double delta = 0.0;
    double distance = 0.0;
};

/// For each delta, sup over [0, horizon] of the max-norm distance between the flow of the datum
/// and of (x + delta dir_x, y + delta dir_y). Both flows use the same step.
std::vector<StabilityRow> stability_check(const Datum& datum, const RateSchedule& schedule,
                                          const std::vector<double>& deltas, double horizon, double dir_x = 1.0,
                                          double dir_y = 1.0);

struct ProbeRow {
    double x = 0.0;
    double y = 0.0;
    double t = 0.0;
    double hjb = 0.0;
    double trajectory = 0.0;
    double discrepancy = 0.0;
};

struct ProbeTable {
    std::vector<ProbeRow> rows;
    double max_discrepancy = 0.0;
    void write_csv(std::ostream& out) const;
};

/// |sample_value - minimize_lower| per probe (v-form grids are converted).
ProbeTable hjb_vs_trajectory(const ValueGrid& grid, const std::vector<std::array<double, 3>>& probes,
                             const RateSchedule& schedule, double mu, const OptimizeOptions& options = {});

} // namespace sirhjb
