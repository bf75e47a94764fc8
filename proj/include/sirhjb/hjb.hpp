#pragma once

#include "sirhjb/rates.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sirhjb {

/// Storage form of a value grid: the time u itself or the Kruzkov transform v = exp(-u).
enum class ValueForm { u, v };

/// How sl_update interpolates the next slice in y.
enum class YInterpolation {
    /// Bilinear in (x, ln y) on the uniform y nodes.
    log_y,
    /// Plain bilinear in (x, y).
    linear,
};

struct GridSpec {
    double x_max = 1.5;
    std::size_t nx = 101;
    /// Lower y face; also the boundary threshold mu_b.
    double y_min = 0.01;
    double y_max = 1.01;
    std::size_t ny = 101;
    double t_max = 0.0;
    std::size_t nt = 2;
    /// Substeps per slice satisfy dt_sub * lipschitz_bound(x_max, y_max) <= courant * min(dx, dy).
    double courant = 1.0;
    /// Step of the stationary value iteration; <= 0 uses the march substep.
    double stationary_dt = 0.0;
    double tol_vi = 1e-9;
    std::size_t max_iterations = 1000000;
    YInterpolation interpolation = YInterpolation::log_y;
    unsigned threads = 0;

    double dx() const { return x_max / double(nx - 1); }
    double dy() const { return (y_max - y_min) / double(ny - 1); }
    double dt() const { return nt > 1 ? t_max / double(nt - 1) : 0.0; }
    double x(std::size_t i) const { return dx() * double(i); }
    double y(std::size_t j) const { return y_min + dy() * double(j); }
    double t(std::size_t k) const { return dt() * double(k); }
    /// Validates extents; DomainError with the offending field otherwise.
    void validate() const;
};

/// Which data fix the value on each face of the box.
enum class FaceTag : std::uint8_t {
    /// Value computed by the scheme.
    computed = 0,
    /// Boundary data imposed where it is defined.
    imposed = 1,
    /// Outflow face: feet beyond it are clamped onto it and counted.
    clamped = 2,
};

struct FaceTags {
    FaceTag x_lo = FaceTag::imposed;
    FaceTag x_hi = FaceTag::computed;
    FaceTag y_lo = FaceTag::imposed;
    FaceTag y_hi = FaceTag::clamped;
    FaceTag t_lo = FaceTag::computed;
    FaceTag t_hi = FaceTag::imposed;
};

/// Value function on a uniform (x, y, t) box, t slowest, x fastest.
class ValueGrid {
public:
    ValueGrid() = default;
    ValueGrid(const GridSpec& spec, ValueForm form);

    const GridSpec& spec() const { return spec_; }
    ValueForm form() const { return form_; }
    std::size_t nx() const { return spec_.nx; }
    std::size_t ny() const { return spec_.ny; }
    std::size_t nt() const { return spec_.nt; }

    double& at(std::size_t i, std::size_t j, std::size_t k) { return values_[index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values_[index(i, j, k)]; }
    std::vector<double> slice(std::size_t k) const;
    void set_slice(std::size_t k, const std::vector<double>& s);
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    std::uint64_t schedule_digest = 0;
    std::uint64_t clamp_count = 0;
    FaceTags faces;

    /// The other form, node by node (v = exp(-u), u = -ln v).
    ValueGrid converted(ValueForm to) const;

    /// Binary layout: magic "SIRVGRD1", u32 version, u32 form, u64 nx ny nt, f64 x0 dx y0 dy t0 dt,
    /// u64 schedule digest, u64 clamp count, 6 face tag bytes, 2 pad bytes, then nx*ny*nt f64
    /// values with t slowest and x fastest. Little-endian host layout.
    void write_binary(std::ostream& out) const;
    static ValueGrid read_binary(std::istream& in);
    /// CSV `x,y,value` for slice k.
    void write_slice_csv(std::ostream& out, std::size_t k) const;

    bool operator==(const ValueGrid& other) const;

private:
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (k * spec_.ny + j) * spec_.nx + i; }

    GridSpec spec_;
    ValueForm form_ = ValueForm::u;
    std::vector<double> values_;
};

/// Boundary traces on the node grid. NaN entries are not imposed (the scheme computes them).
struct BoundaryData {
    /// f(x_i, t_k) on y = y_min, size nx * nt (x fastest).
    std::vector<double> f;
    /// g(y_j, t_k) on x = 0, size ny * nt.
    std::vector<double> g;
    /// Boundary value used when a foot exits through y = y_min at (x, t); defaults to 0.
    std::function<double(double x, double t)> exit_value;

    /// Checks sizes, nonnegativity, and that adjacent imposed samples jump by at most `modulus`.
    void validate(const GridSpec& spec, double modulus) const;
};

/// Time for I to decay from y to mu_b along x = 0 starting at time t.
double axis_time(double y, double t, double mu_b, const RateSchedule& schedule);

/// Boundary data for mu_b = mu: zero on y = mu_b where beta(t) x <= gamma(t) (I decreasing
/// there, the threshold is met at once), exact axis times on x = 0, zero exit values.
BoundaryData threshold_boundary(const GridSpec& spec, const RateSchedule& schedule);

/// Boundary data for mu_b = mu0: `trace(x, t)` on y = mu0 for x <= gamma_hi / beta_lo (the
/// effective boundary) and axis times to `mu` on x = 0. Exit values interpolate f.
BoundaryData trace_boundary(const GridSpec& spec, const RateSchedule& schedule, double mu,
                            const std::function<double(double x, double t)>& trace);

/// H(t, x, y, p, q) = beta xy p + x p_+ + (gamma - beta x) y q.
double hamiltonian(double t, double x, double y, double p, double q, const RateSchedule& schedule);

struct SlResult {
    double value = 0.0;
    int control = 0;
    bool clamped = false;
};

/// One semi-Lagrangian step at node (x, y) from the next slice (values at t + dt, nodes of `spec`).
/// Returns dt + min over a in {0, 1} of the interpolated value at the Euler foot (u-form), or
/// exp(-dt) max over a of it (v-form). Feet below y_min contribute the exit fraction and the exit
/// value; feet above y_max are clamped. Ties choose a = 0.
SlResult sl_update(const std::vector<double>& next_slice, const GridSpec& spec, double x, double y, double t,
                   double dt, const RateSchedule& schedule, const BoundaryData& boundary, ValueForm form);

struct StationaryReport {
    std::size_t iterations = 0;
    /// Sup-norm update of each sweep.
    std::vector<double> residuals;
    std::uint64_t clamp_count = 0;
};

/// Value iteration of sl_update with constant rates (beta0, gamma0) until the sup-norm update is
/// below spec.tol_vi; in v-form the update is measured relative to v, i.e. in -ln v. Without
/// `boundary` it imposes 0 on y = y_min for beta0 x <= gamma0 and, when `impose_axis`,
/// ln(y / y_min) / gamma0 on x = 0; with `boundary` it imposes the last time sample of its
/// tables and takes exit values from it. ConvergenceError with the residual trace past the cap.
std::vector<double> stationary_solve(const GridSpec& spec, double beta0, double gamma0, ValueForm form,
                                     StationaryReport* report = nullptr, bool impose_axis = true,
                                     const BoundaryData* boundary = nullptr);

/// Number of substeps per slice interval needed by the CFL-type bound.
std::size_t substeps(const GridSpec& spec, const RateSchedule& schedule);

/// Backward march from the terminal slice at t_max down to t = 0. Requires a schedule that is
/// constant from t_max on (DomainError otherwise); terminal_slice must be in `form`.
ValueGrid march_backward(const GridSpec& spec, const RateSchedule& schedule, const std::vector<double>& terminal_slice,
                         const BoundaryData& boundary, ValueForm form = ValueForm::u);

/// Stationary terminal slice plus backward march, u-form.
ValueGrid solve_hjb(const GridSpec& spec, const RateSchedule& schedule, const BoundaryData& boundary);

/// Same problem solved in v-form with exp(-f), exp(-g), exp(-h) data.
ValueGrid kruzkov_solve(const GridSpec& spec, const RateSchedule& schedule, const BoundaryData& boundary);

/// Trilinear interpolation in (x, y, t); exact at nodes. DomainError outside the box.
double sample_value(const ValueGrid& grid, double x, double y, double t);

/// FNV-1a 64 of the schedule's canonical text.
std::uint64_t schedule_digest(const RateSchedule& schedule);

} // namespace sirhjb
