#include "sirhjb/hjb.hpp"

#include "sirhjb/dynamics.hpp"
#include "sirhjb/error.hpp"
#include "sirhjb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace sirhjb {

namespace {

constexpr char kMagic[8] = {'S', 'I', 'R', 'V', 'G', 'R', 'D', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Kernel {
    const GridSpec& spec;
    double dx;
    double dy;
    std::vector<double> log_y;

    explicit Kernel(const GridSpec& s) : spec(s), dx(s.dx()), dy(s.dy()), log_y(s.ny) {
        for (std::size_t j = 0; j < s.ny; ++j) log_y[j] = std::log(s.y(j));
    }

    // Bilinear interpolation of a slice; the foot is already inside the box.
    double interp(const std::vector<double>& slice, double xf, double yf) const {
        const std::size_t nx = spec.nx, ny = spec.ny;
        double fx = xf / dx;
        std::size_t i = fx <= 0.0 ? 0 : std::min<std::size_t>(std::size_t(fx), nx - 2);
        const double wx = std::clamp(fx - double(i), 0.0, 1.0);
        double fy = (yf - spec.y_min) / dy;
        std::size_t j = fy <= 0.0 ? 0 : std::min<std::size_t>(std::size_t(fy), ny - 2);
        double wy;
        if (spec.interpolation == YInterpolation::log_y)
            wy = (std::log(yf) - log_y[j]) / (log_y[j + 1] - log_y[j]);
        else
            wy = fy - double(j);
        wy = std::clamp(wy, 0.0, 1.0);
        const double* row0 = slice.data() + j * nx;
        const double* row1 = row0 + nx;
        const double a = row0[i] + wx * (row0[i + 1] - row0[i]);
        const double b = row1[i] + wx * (row1[i + 1] - row1[i]);
        return a + wy * (b - a);
    }

    SlResult update(const std::vector<double>& next, double x, double y, double t, double dt, RatePair r,
                    const BoundaryData& boundary, ValueForm form) const {
        SlResult best;
        bool have = false;
        const double fi = (r.beta * x - r.gamma) * y;
        for (int a = 0; a <= 1; ++a) {
            const double fs = -r.beta * x * y - double(a) * x;
            double xf = std::clamp(x + dt * fs, 0.0, spec.x_max);
            double yf = y + dt * fi;
            bool clamped = false;
            double value;
            if (yf < spec.y_min) {
                const double theta = y > yf ? std::clamp((y - spec.y_min) / (y - yf), 0.0, 1.0) : 0.0;
                const double xe = std::clamp(x + theta * dt * fs, 0.0, spec.x_max);
                const double exit = boundary.exit_value ? boundary.exit_value(xe, t + theta * dt) : 0.0;
                value = form == ValueForm::u ? theta * dt + exit : std::exp(-theta * dt - exit);
            } else {
                if (yf > spec.y_max) {
                    yf = spec.y_max;
                    clamped = true;
                }
                const double w = interp(next, xf, yf);
                value = form == ValueForm::u ? dt + w : std::exp(-dt) * w;
            }
            const bool better = !have || (form == ValueForm::u ? value < best.value : value > best.value);
            if (better) {
                best.value = value;
                best.control = a;
                best.clamped = clamped;
                have = true;
            }
        }
        return best;
    }
};

double max_cfl_step(const GridSpec& spec, const RateSchedule& schedule) {
    return spec.courant * std::min(spec.dx(), spec.dy()) / lipschitz_bound(spec.x_max, spec.y_max, schedule);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("value grid: truncated binary input");
    return v;
}

double to_form(double u, ValueForm form) { return form == ValueForm::u ? u : std::exp(-u); }

// Imposes the boundary tables at slice k + w (0 <= w <= 1), linear in t; a node is imposed only
// when both bracketing samples are.
void impose_slice(std::vector<double>& slice, const GridSpec& spec, const BoundaryData& boundary, std::size_t k,
                  ValueForm form, double w = 0.0) {
    const std::size_t nx = spec.nx, ny = spec.ny;
    const std::size_t k1 = w > 0.0 ? k + 1 : k;
    auto blend = [w](double a, double b) { return std::isnan(a) || std::isnan(b) ? a + b : a + w * (b - a); };
    if (!boundary.g.empty())
        for (std::size_t j = 0; j < ny; ++j) {
            const double g = blend(boundary.g[k * ny + j], boundary.g[k1 * ny + j]);
            if (!std::isnan(g)) slice[j * nx] = to_form(g, form);
        }
    if (!boundary.f.empty())
        for (std::size_t i = 0; i < nx; ++i) {
            const double f = blend(boundary.f[k * nx + i], boundary.f[k1 * nx + i]);
            if (!std::isnan(f)) slice[i] = to_form(f, form);
        }
}

} // namespace

void GridSpec::validate() const {
    if (nx < 2) throw DomainError("grid.nx must be at least 2");
    if (ny < 2) throw DomainError("grid.ny must be at least 2");
    if (nt < 1) throw DomainError("grid.nt must be at least 1");
    if (!(x_max > 0.0)) throw DomainError("grid.x_max must be positive");
    if (!(y_min > 0.0)) throw DomainError("grid.y_min must be positive");
    if (!(y_max > y_min)) throw DomainError("grid.y_max must exceed grid.y_min");
    if (!(t_max >= 0.0)) throw DomainError("grid.t_max must be nonnegative");
    if (nt > 1 && !(t_max > 0.0)) throw DomainError("grid.t_max must be positive when grid.nt > 1");
    if (!(courant > 0.0)) throw DomainError("grid.courant must be positive");
    if (!(tol_vi > 0.0)) throw DomainError("grid.tol_vi must be positive");
}

ValueGrid::ValueGrid(const GridSpec& spec, ValueForm form)
    : spec_(spec), form_(form), values_(spec.nx * spec.ny * spec.nt, 0.0) {}

std::vector<double> ValueGrid::slice(std::size_t k) const {
    const std::size_t n = spec_.nx * spec_.ny;
    return std::vector<double>(values_.begin() + std::ptrdiff_t(k * n), values_.begin() + std::ptrdiff_t((k + 1) * n));
}

void ValueGrid::set_slice(std::size_t k, const std::vector<double>& s) {
    const std::size_t n = spec_.nx * spec_.ny;
    if (s.size() != n) throw std::invalid_argument("slice size does not match the grid");
    std::copy(s.begin(), s.end(), values_.begin() + std::ptrdiff_t(k * n));
}

ValueGrid ValueGrid::converted(ValueForm to) const {
    ValueGrid out = *this;
    out.form_ = to;
    if (to == form_) return out;
    for (double& v : out.values_) v = to == ValueForm::v ? std::exp(-v) : -std::log(v);
    return out;
}

void ValueGrid::write_binary(std::ostream& out) const {
    out.write(kMagic, sizeof kMagic);
    put(out, kVersion);
    put(out, std::uint32_t(form_ == ValueForm::u ? 0 : 1));
    put(out, std::uint64_t(spec_.nx));
    put(out, std::uint64_t(spec_.ny));
    put(out, std::uint64_t(spec_.nt));
    put(out, 0.0);
    put(out, spec_.dx());
    put(out, spec_.y_min);
    put(out, spec_.dy());
    put(out, 0.0);
    put(out, spec_.dt());
    put(out, schedule_digest);
    put(out, clamp_count);
    for (FaceTag f : {faces.x_lo, faces.x_hi, faces.y_lo, faces.y_hi, faces.t_lo, faces.t_hi})
        put(out, std::uint8_t(f));
    put(out, std::uint16_t(0));
    out.write(reinterpret_cast<const char*>(values_.data()), std::streamsize(values_.size() * sizeof(double)));
}

ValueGrid ValueGrid::read_binary(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("value grid: bad magic");
    if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("value grid: unsupported version");
    const std::uint32_t form = get<std::uint32_t>(in);
    GridSpec spec;
    spec.nx = get<std::uint64_t>(in);
    spec.ny = get<std::uint64_t>(in);
    spec.nt = get<std::uint64_t>(in);
    get<double>(in);
    const double dx = get<double>(in);
    spec.y_min = get<double>(in);
    const double dy = get<double>(in);
    get<double>(in);
    const double dt = get<double>(in);
    spec.x_max = dx * double(spec.nx - 1);
    spec.y_max = spec.y_min + dy * double(spec.ny - 1);
    spec.t_max = dt * double(spec.nt - 1);
    ValueGrid g(spec, form == 0 ? ValueForm::u : ValueForm::v);
    g.schedule_digest = get<std::uint64_t>(in);
    g.clamp_count = get<std::uint64_t>(in);
    FaceTag* tags[] = {&g.faces.x_lo, &g.faces.x_hi, &g.faces.y_lo, &g.faces.y_hi, &g.faces.t_lo, &g.faces.t_hi};
    for (FaceTag* t : tags) *t = FaceTag(get<std::uint8_t>(in));
    get<std::uint16_t>(in);
    in.read(reinterpret_cast<char*>(g.values_.data()), std::streamsize(g.values_.size() * sizeof(double)));
    if (!in) throw std::runtime_error("value grid: truncated binary input");
    return g;
}

void ValueGrid::write_slice_csv(std::ostream& out, std::size_t k) const {
    if (k >= spec_.nt) throw DomainError("slice index outside the grid");
    char buf[96];
    out << "x,y,value\n";
    for (std::size_t j = 0; j < spec_.ny; ++j)
        for (std::size_t i = 0; i < spec_.nx; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", spec_.x(i), spec_.y(j), at(i, j, k));
            out << buf;
        }
}

bool ValueGrid::operator==(const ValueGrid& o) const {
    return form_ == o.form_ && spec_.nx == o.spec_.nx && spec_.ny == o.spec_.ny && spec_.nt == o.spec_.nt &&
           spec_.dx() == o.spec_.dx() && spec_.dy() == o.spec_.dy() && spec_.dt() == o.spec_.dt() &&
           spec_.y_min == o.spec_.y_min && schedule_digest == o.schedule_digest && clamp_count == o.clamp_count &&
           std::memcmp(&faces, &o.faces, sizeof faces) == 0 && values_ == o.values_;
}

void BoundaryData::validate(const GridSpec& spec, double modulus) const {
    auto check = [modulus](const std::vector<double>& v, std::size_t stride, const char* name) {
        if (v.empty()) return;
        if (v.size() % stride != 0) throw std::invalid_argument(std::string("boundary trace ") + name + " has the wrong size");
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (std::isnan(v[k])) continue;
            if (v[k] < 0.0) throw DomainError(std::string("boundary trace ") + name + " is negative");
            const bool row_end = (k + 1) % stride == 0;
            for (std::size_t step : {std::size_t(1), stride}) {
                if ((step == 1 && row_end) || k + step >= v.size() || std::isnan(v[k + step])) continue;
                if (std::abs(v[k + step] - v[k]) > modulus)
                    throw DomainError(std::string("boundary trace ") + name + " jumps by more than the modulus");
            }
        }
    };
    check(f, spec.nx, "f");
    check(g, spec.ny, "g");
}

double axis_time(double y, double t, double mu_b, const RateSchedule& schedule) {
    if (!(mu_b > 0.0)) throw DomainError("axis time needs a positive threshold");
    if (y <= mu_b) return 0.0;
    const double target = std::log(y / mu_b);
    const RateSchedule local = shift(schedule, t);
    auto decay = [&](double s) { return local.integral(0.0, s).gamma; };
    double hi = target / local.bounds().gamma_lo;
    if (!std::isfinite(hi)) throw DomainError("axis time needs a positive lower bound on gamma");
    hi *= 1.0 + 1e-9;
    double lo = 0.0;
    while (decay(hi) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (decay(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

BoundaryData threshold_boundary(const GridSpec& spec, const RateSchedule& schedule) {
    BoundaryData b;
    b.f.assign(spec.nx * spec.nt, kNaN);
    b.g.assign(spec.ny * spec.nt, kNaN);
    for (std::size_t k = 0; k < spec.nt; ++k) {
        const RatePair r = schedule.at(spec.t(k));
        for (std::size_t i = 0; i < spec.nx; ++i)
            if (r.beta * spec.x(i) <= r.gamma) b.f[k * spec.nx + i] = 0.0;
        for (std::size_t j = 0; j < spec.ny; ++j) b.g[k * spec.ny + j] = axis_time(spec.y(j), spec.t(k), spec.y_min, schedule);
    }
    return b;
}

BoundaryData trace_boundary(const GridSpec& spec, const RateSchedule& schedule, double mu,
                            const std::function<double(double x, double t)>& trace) {
    BoundaryData b;
    b.f.assign(spec.nx * spec.nt, kNaN);
    b.g.assign(spec.ny * spec.nt, kNaN);
    const double x_edge = schedule.x_hi();
    for (std::size_t k = 0; k < spec.nt; ++k) {
        for (std::size_t i = 0; i < spec.nx; ++i)
            if (spec.x(i) <= x_edge) b.f[k * spec.nx + i] = trace(spec.x(i), spec.t(k));
        for (std::size_t j = 0; j < spec.ny; ++j) b.g[k * spec.ny + j] = axis_time(spec.y(j), spec.t(k), mu, schedule);
    }
    const std::vector<double> f = b.f;
    const GridSpec s = spec;
    b.exit_value = [f, s](double x, double t) {
        const double fx = std::clamp(x / s.dx(), 0.0, double(s.nx - 1));
        const double ft = s.nt > 1 ? std::clamp(t / s.dt(), 0.0, double(s.nt - 1)) : 0.0;
        const std::size_t i = std::min<std::size_t>(std::size_t(fx), s.nx - 2);
        const std::size_t k = s.nt > 1 ? std::min<std::size_t>(std::size_t(ft), s.nt - 2) : 0;
        const double wx = fx - double(i), wt = s.nt > 1 ? ft - double(k) : 0.0;
        auto at = [&](std::size_t ii, std::size_t kk) {
            const double v = f[kk * s.nx + ii];
            return std::isnan(v) ? 0.0 : v;
        };
        const double a = at(i, k) + wx * (at(i + 1, k) - at(i, k));
        if (s.nt == 1) return a;
        const double c = at(i, k + 1) + wx * (at(i + 1, k + 1) - at(i, k + 1));
        return a + wt * (c - a);
    };
    return b;
}

double hamiltonian(double t, double x, double y, double p, double q, const RateSchedule& schedule) {
    const RatePair r = schedule.at(t);
    return r.beta * x * y * p + x * std::max(p, 0.0) + (r.gamma - r.beta * x) * y * q;
}

SlResult sl_update(const std::vector<double>& next_slice, const GridSpec& spec, double x, double y, double t,
                   double dt, const RateSchedule& schedule, const BoundaryData& boundary, ValueForm form) {
    if (!(dt > 0.0)) throw DomainError("semi-Lagrangian step needs dt > 0");
    const double limit = max_cfl_step(spec, schedule);
    if (dt > limit * (1.0 + 1e-12))
        throw StepSizeError("semi-Lagrangian step " + fmt(dt) + " exceeds the CFL bound " + fmt(limit), limit);
    if (next_slice.size() != spec.nx * spec.ny) throw std::invalid_argument("slice size does not match the grid");
    const Kernel kernel(spec);
    return kernel.update(next_slice, x, y, t, dt, schedule.at(t), boundary, form);
}

std::vector<double> stationary_solve(const GridSpec& spec, double beta0, double gamma0, ValueForm form,
                                     StationaryReport* report, bool impose_axis, const BoundaryData* boundary) {
    spec.validate();
    if (!(beta0 > 0.0) || !(gamma0 > 0.0)) throw DomainError("stationary solve needs positive rates");
    const RateSchedule rates = RateSchedule::constant(beta0, gamma0);
    const double limit = max_cfl_step(spec, rates);
    double dt = limit;
    if (spec.stationary_dt > 0.0)
        dt = spec.stationary_dt;
    else if (spec.nt > 1)
        dt = spec.dt() / std::ceil(spec.dt() / limit * (1.0 - 1e-12));
    if (dt > limit * (1.0 + 1e-12))
        throw StepSizeError("stationary step " + fmt(dt) + " exceeds the CFL bound " + fmt(limit), limit);
    const Kernel kernel(spec);
    const std::size_t nx = spec.nx, ny = spec.ny;
    const RatePair r{beta0, gamma0};
    const BoundaryData none;
    const BoundaryData& data = boundary ? *boundary : none;
    const std::size_t last = spec.nt - 1;

    std::vector<double> cur(nx * ny, form == ValueForm::u ? 0.0 : 1.0);
    std::vector<double> next(cur.size());
    std::vector<std::uint8_t> fixed(cur.size(), 0);
    for (std::size_t i = 0; i < nx; ++i) {
        const double f = boundary ? (data.f.empty() ? kNaN : data.f[last * nx + i]) : beta0 * spec.x(i) <= gamma0 ? 0.0 : kNaN;
        if (!std::isnan(f)) {
            fixed[i] = 1;
            cur[i] = to_form(f, form);
        }
    }
    if (impose_axis)
        for (std::size_t j = 0; j < ny; ++j) {
            const double g = boundary ? (data.g.empty() ? kNaN : data.g[last * ny + j])
                                      : std::log(spec.y(j) / spec.y_min) / gamma0;
            if (std::isnan(g)) continue;
            fixed[j * nx] = 1;
            cur[j * nx] = to_form(g, form);
        }

    StationaryReport rep;
    std::vector<std::uint8_t> clamped(cur.size(), 0);
    for (;;) {
        if (rep.iterations >= spec.max_iterations) {
            std::string trace;
            const std::size_t n = rep.residuals.size();
            for (std::size_t k = n > 5 ? n - 5 : 0; k < n; ++k) trace += (trace.empty() ? "" : ", ") + fmt(rep.residuals[k]);
            throw ConvergenceError("stationary value iteration did not converge in " + std::to_string(n) +
                                   " sweeps; last residuals: " + trace);
        }
        parallel_for(
            ny,
            [&](std::size_t j) {
                const double y = spec.y(j);
                for (std::size_t i = 0; i < nx; ++i) {
                    const std::size_t idx = j * nx + i;
                    if (fixed[idx]) {
                        next[idx] = cur[idx];
                        continue;
                    }
                    const SlResult s = kernel.update(cur, spec.x(i), y, spec.t_max, dt, r, data, form);
                    next[idx] = s.value;
                    clamped[idx] = s.clamped;
                }
            },
            spec.threads);
        double residual = 0.0, log_residual = 0.0;
        for (std::size_t k = 0; k < cur.size(); ++k) {
            const double d = std::abs(next[k] - cur[k]);
            residual = std::max(residual, d);
            if (form == ValueForm::v) log_residual = std::max(log_residual, d / next[k]);
        }
        cur.swap(next);
        ++rep.iterations;
        rep.residuals.push_back(residual);
        if ((form == ValueForm::u ? residual : log_residual) < spec.tol_vi) break;
    }
    for (std::uint8_t c : clamped) rep.clamp_count += c;
    if (report) *report = std::move(rep);
    return cur;
}

std::size_t substeps(const GridSpec& spec, const RateSchedule& schedule) {
    if (spec.nt < 2) return 0;
    const double limit = max_cfl_step(spec, schedule);
    return std::max<std::size_t>(1, std::size_t(std::ceil(spec.dt() / limit * (1.0 - 1e-12))));
}

ValueGrid march_backward(const GridSpec& spec, const RateSchedule& schedule, const std::vector<double>& terminal_slice,
                         const BoundaryData& boundary, ValueForm form) {
    spec.validate();
    const double freeze = schedule.constant_from();
    if (!std::isfinite(freeze)) throw DomainError("backward march needs a schedule that is constant after some time");
    if (freeze > spec.t_max * (1.0 + 1e-12) + 1e-12)
        throw DomainError("grid.t_max " + fmt(spec.t_max) + " is before the freeze time " + fmt(freeze));
    const std::size_t nx = spec.nx, ny = spec.ny;
    if (terminal_slice.size() != nx * ny) throw std::invalid_argument("terminal slice size does not match the grid");
    if (!boundary.f.empty() && boundary.f.size() != nx * spec.nt)
        throw std::invalid_argument("boundary f table size does not match the grid");
    if (!boundary.g.empty() && boundary.g.size() != ny * spec.nt)
        throw std::invalid_argument("boundary g table size does not match the grid");

    ValueGrid grid(spec, form);
    grid.schedule_digest = schedule_digest(schedule);
    std::vector<double> cur = terminal_slice;
    impose_slice(cur, spec, boundary, spec.nt - 1, form);
    grid.set_slice(spec.nt - 1, cur);
    if (spec.nt < 2) return grid;

    const Kernel kernel(spec);
    const std::size_t n_sub = substeps(spec, schedule);
    const double dt = spec.dt() / double(n_sub);
    std::vector<double> next(cur.size());
    std::vector<std::uint8_t> clamped(cur.size());
    for (std::size_t k = spec.nt - 1; k-- > 0;) {
        const double t_hi = spec.t(k + 1);
        for (std::size_t m = 1; m <= n_sub; ++m) {
            const double t = m == n_sub ? spec.t(k) : t_hi - double(m) * dt;
            const RatePair r = schedule.at(t);
            std::fill(clamped.begin(), clamped.end(), 0);
            parallel_for(
                ny,
                [&](std::size_t j) {
                    const double y = spec.y(j);
                    for (std::size_t i = 0; i < nx; ++i) {
                        const SlResult s = kernel.update(cur, spec.x(i), y, t, dt, r, boundary, form);
                        next[j * nx + i] = s.value;
                        clamped[j * nx + i] = s.clamped;
                    }
                },
                spec.threads);
            for (std::uint8_t c : clamped) grid.clamp_count += c;
            cur.swap(next);
            impose_slice(cur, spec, boundary, k, form, double(n_sub - m) / double(n_sub));
        }
        grid.set_slice(k, cur);
    }
    return grid;
}

ValueGrid solve_hjb(const GridSpec& spec, const RateSchedule& schedule, const BoundaryData& boundary) {
    const auto terminal = schedule.terminal_rates();
    if (!terminal) throw DomainError("HJB solve needs a schedule that is constant after some time");
    GridSpec terminal_spec = spec;
    if (!(terminal_spec.stationary_dt > 0.0) && spec.nt > 1)
        terminal_spec.stationary_dt = spec.dt() / double(substeps(spec, schedule));
    StationaryReport rep;
    const std::vector<double> h =
        stationary_solve(terminal_spec, terminal->beta, terminal->gamma, ValueForm::u, &rep, true, &boundary);
    ValueGrid g = march_backward(spec, schedule, h, boundary, ValueForm::u);
    g.clamp_count += rep.clamp_count;
    return g;
}

ValueGrid kruzkov_solve(const GridSpec& spec, const RateSchedule& schedule, const BoundaryData& boundary) {
    const auto terminal = schedule.terminal_rates();
    if (!terminal) throw DomainError("HJB solve needs a schedule that is constant after some time");
    GridSpec terminal_spec = spec;
    if (!(terminal_spec.stationary_dt > 0.0) && spec.nt > 1)
        terminal_spec.stationary_dt = spec.dt() / double(substeps(spec, schedule));
    StationaryReport rep;
    const std::vector<double> h =
        stationary_solve(terminal_spec, terminal->beta, terminal->gamma, ValueForm::v, &rep, true, &boundary);
    ValueGrid g = march_backward(spec, schedule, h, boundary, ValueForm::v);
    g.clamp_count += rep.clamp_count;
    return g;
}

double sample_value(const ValueGrid& grid, double x, double y, double t) {
    const GridSpec& s = grid.spec();
    const double eps = 1e-12;
    if (!(x >= -eps && x <= s.x_max + eps && y >= s.y_min - eps && y <= s.y_max + eps && t >= -eps &&
          t <= s.t_max + eps))
        throw DomainError("sample point (" + fmt(x) + ", " + fmt(y) + ", " + fmt(t) + ") is outside the grid box");
    auto cell = [](double f, std::size_t n, std::size_t& i, double& w) {
        f = std::clamp(f, 0.0, double(n - 1));
        if (std::abs(f - std::round(f)) < 1e-9) f = std::round(f);
        i = n < 2 ? 0 : std::min<std::size_t>(std::size_t(f), n - 2);
        w = n < 2 ? 0.0 : f - double(i);
    };
    std::size_t i, j, k;
    double wx, wy, wt;
    cell(x / s.dx(), s.nx, i, wx);
    cell((y - s.y_min) / s.dy(), s.ny, j, wy);
    if (s.nt > 1)
        cell(t / s.dt(), s.nt, k, wt);
    else
        k = 0, wt = 0.0;
    auto plane = [&](std::size_t kk) {
        const double a = grid.at(i, j, kk) + wx * (grid.at(i + 1, j, kk) - grid.at(i, j, kk));
        const double b = grid.at(i, j + 1, kk) + wx * (grid.at(i + 1, j + 1, kk) - grid.at(i, j + 1, kk));
        return a + wy * (b - a);
    };
    const double p0 = plane(k);
    if (s.nt < 2 || wt == 0.0) return p0;
    return p0 + wt * (plane(k + 1) - p0);
}

std::uint64_t schedule_digest(const RateSchedule& schedule) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canonical_text(schedule)) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace sirhjb
