#include "sirhjb/config.hpp"

#include "sirhjb/error.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace sirhjb {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

// Read access to one JSON object that reports failures with the field path.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
    }

    std::string where() const { return path_.empty() ? "<root>" : path_; }
    std::string field(const std::string& key) const { return join(path_, key); }
    [[noreturn]] void fail(const std::string& key, const std::string& message) const {
        throw ConfigError(field(key) + ": " + message);
    }

    bool has(const char* key) const { return j_.contains(key); }

    void allow(std::initializer_list<const char*> keys) const { allow(std::vector<const char*>(keys)); }
    void allow(const std::vector<const char*>& keys) const {
        for (const auto& item : j_.items()) {
            bool known = false;
            for (const char* k : keys) known = known || item.key() == k;
            if (!known) fail(item.key(), "unknown field");
        }
    }

    double number(const char* key) const {
        if (!has(key)) fail(key, "missing required number");
        return as_number(j_.at(key), field(key));
    }
    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::size_t count(const char* key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            fail(key, "expected a nonnegative integer");
        return v.get<std::size_t>();
    }

    std::uint64_t seed(const char* key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            fail(key, "expected an unsigned 64-bit integer");
        return v.get<std::uint64_t>();
    }

    bool flag(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_boolean()) fail(key, "expected true or false");
        return j_.at(key).get<bool>();
    }

    std::string text(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        if (!j_.at(key).is_string()) fail(key, "expected a string");
        return j_.at(key).get<std::string>();
    }

    std::vector<double> numbers(const char* key, const std::vector<double>& fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_array()) fail(key, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t k = 0; k < v.size(); ++k)
            out.push_back(as_number(v[k], field(key) + "[" + std::to_string(k) + "]"));
        return out;
    }

    std::optional<Node> child(const char* key) const {
        if (!has(key)) return std::nullopt;
        return Node(j_.at(key), field(key));
    }

    const json& raw(const char* key) const { return j_.at(key); }

private:
    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw ConfigError(path + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ConfigError(path + ": expected a finite number");
        return d;
    }

    const json& j_;
    std::string path_;
};

Wave read_wave(const Node& n) {
    n.allow({"mean", "amplitude", "frequency", "phase"});
    Wave w;
    w.mean = n.number("mean");
    w.amplitude = n.number("amplitude", 0.0);
    w.frequency = n.number("frequency", 1.0);
    w.phase = n.number("phase", 0.0);
    return w;
}

ordered_json write_wave(const Wave& w) {
    ordered_json j;
    j["mean"] = w.mean;
    j["amplitude"] = w.amplitude;
    j["frequency"] = w.frequency;
    j["phase"] = w.phase;
    return j;
}

BaseProfile read_base(const Node& n, bool top_level);

RateProfile read_profile(const Node& n) {
    const std::string kind = n.text("kind", "");
    if (kind == "frozen_after") {
        n.allow({"kind", "before", "t_freeze", "beta0", "gamma0", "ramp_width", "bounds"});
        const auto before = n.child("before");
        if (!before) n.fail("before", "missing required schedule");
        FrozenRates f;
        f.before = read_base(*before, false);
        f.t_freeze = n.number("t_freeze");
        f.beta0 = n.number("beta0");
        f.gamma0 = n.number("gamma0");
        f.ramp_width = n.number("ramp_width", 1e-3);
        return f;
    }
    const BaseProfile base = read_base(n, true);
    return std::visit([](const auto& p) -> RateProfile { return p; }, base);
}

BaseProfile read_base(const Node& n, bool top_level) {
    const std::string kind = n.text("kind", "");
    auto allowed = [&](std::initializer_list<const char*> keys) {
        std::vector<const char*> all(keys);
        if (top_level) all.push_back("bounds");
        n.allow(all);
    };
    if (kind == "constant") {
        allowed({"kind", "beta", "gamma"});
        return ConstantRates{n.number("beta"), n.number("gamma")};
    }
    if (kind == "sinusoidal") {
        allowed({"kind", "beta", "gamma"});
        const auto b = n.child("beta"), g = n.child("gamma");
        if (!b) n.fail("beta", "missing required wave");
        if (!g) n.fail("gamma", "missing required wave");
        return SinusoidalRates{read_wave(*b), read_wave(*g)};
    }
    if (kind == "piecewise_constant") {
        allowed({"kind", "breakpoints", "beta", "gamma", "ramp_width"});
        PiecewiseRates p;
        p.breakpoints = n.numbers("breakpoints", {});
        p.beta = n.numbers("beta", {});
        p.gamma = n.numbers("gamma", {});
        p.ramp_width = n.number("ramp_width", 1e-3);
        if (p.beta.size() != p.breakpoints.size() + 1) n.fail("beta", "needs one value per interval");
        if (p.gamma.size() != p.breakpoints.size() + 1) n.fail("gamma", "needs one value per interval");
        return p;
    }
    if (kind == "frozen_after" && !top_level) n.fail("kind", "frozen_after cannot be nested");
    n.fail("kind", "expected one of constant, piecewise_constant, sinusoidal, frozen_after");
}

ordered_json write_base(const BaseProfile& profile) {
    ordered_json j;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantRates>) {
                j["kind"] = "constant";
                j["beta"] = p.beta;
                j["gamma"] = p.gamma;
            } else if constexpr (std::is_same_v<T, SinusoidalRates>) {
                j["kind"] = "sinusoidal";
                j["beta"] = write_wave(p.beta);
                j["gamma"] = write_wave(p.gamma);
            } else {
                j["kind"] = "piecewise_constant";
                j["breakpoints"] = p.breakpoints;
                j["beta"] = p.beta;
                j["gamma"] = p.gamma;
                j["ramp_width"] = p.ramp_width;
            }
        },
        profile);
    return j;
}

RateSchedule read_schedule(const Node& n) {
    const RateProfile profile = read_profile(n);
    std::optional<RateBounds> bounds;
    if (const auto b = n.child("bounds")) {
        b->allow({"beta_lo", "beta_hi", "gamma_lo", "gamma_hi"});
        bounds = RateBounds{b->number("beta_lo"), b->number("beta_hi"), b->number("gamma_lo"), b->number("gamma_hi")};
    }
    try {
        if (!bounds) {
            if (const auto* c = std::get_if<ConstantRates>(&profile)) return RateSchedule::constant(c->beta, c->gamma);
            n.fail("bounds", "required for time-varying schedules");
        }
        return RateSchedule(profile, *bounds);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(n.where() + ": " + e.what());
    }
}

ordered_json write_schedule(const RateSchedule& s) {
    ordered_json j;
    if (const auto* f = std::get_if<FrozenRates>(&s.profile())) {
        j["kind"] = "frozen_after";
        j["before"] = write_base(f->before);
        j["t_freeze"] = f->t_freeze;
        j["beta0"] = f->beta0;
        j["gamma0"] = f->gamma0;
        j["ramp_width"] = f->ramp_width;
    } else {
        j = write_base(std::visit(
            [](const auto& p) -> BaseProfile {
                if constexpr (std::is_same_v<std::decay_t<decltype(p)>, FrozenRates>)
                    return ConstantRates{};
                else
                    return p;
            },
            s.profile()));
    }
    const RateBounds& b = s.bounds();
    j["bounds"] = ordered_json{{"beta_lo", b.beta_lo}, {"beta_hi", b.beta_hi}, {"gamma_lo", b.gamma_lo}, {"gamma_hi", b.gamma_hi}};
    return j;
}

ControlSignal read_control(const Node& n) {
    n.allow({"breakpoints", "values"});
    try {
        return ControlSignal(n.numbers("breakpoints", {}), n.numbers("values", {0.0}));
    } catch (const std::exception& e) {
        throw ConfigError(n.where() + ": " + e.what());
    }
}

const char* interpolation_name(YInterpolation y) { return y == YInterpolation::log_y ? "log_y" : "linear"; }
const char* boundary_name(GridBoundary b) { return b == GridBoundary::threshold ? "threshold" : "trace"; }

std::array<double, 3> triple(const Node& n, const char* key) {
    const std::vector<double> v = n.numbers(key, {});
    if (v.size() != 3) n.fail(key, "expected [x, y, t]");
    return {v[0], v[1], v[2]};
}

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
    }
    const Node n(root, "");
    n.allow({"name", "schedule", "mu0", "mu", "datum", "simulate_horizon", "mu1_samples", "optimize", "grid", "ensemble",
             "tolerances", "verify", "fig1", "output_dir", "threads"});
    ExperimentConfig c;
    c.name = n.text("name", c.name);
    const auto sched = n.child("schedule");
    if (!sched) n.fail("schedule", "missing required section");
    c.schedule = read_schedule(*sched);
    c.mu0 = n.number("mu0", c.mu0);
    c.mu = n.number("mu", c.mu);
    if (!(c.mu0 > 0.0)) n.fail("mu0", "must be positive");
    if (!(c.mu > 0.0) || !(c.mu <= c.mu0)) n.fail("mu", "must satisfy 0 < mu <= mu0");
    c.simulate_horizon = n.number("simulate_horizon", c.simulate_horizon);
    if (!(c.simulate_horizon >= 0.0)) n.fail("simulate_horizon", "must be nonnegative");
    c.mu1_samples = n.count("mu1_samples", c.mu1_samples);
    if (c.mu1_samples < 2) n.fail("mu1_samples", "needs at least 2 samples");
    c.threads = static_cast<unsigned>(n.count("threads", 0));
    c.output_dir = n.text("output_dir", c.output_dir);

    if (const auto d = n.child("datum")) {
        d->allow({"x", "y", "t", "control"});
        c.datum.x = d->number("x", c.datum.x);
        c.datum.y = d->number("y", c.datum.y);
        c.datum.t0 = d->number("t", c.datum.t0);
        if (const auto ctl = d->child("control")) c.datum.control = read_control(*ctl);
        if (!(c.datum.x >= 0.0)) d->fail("x", "must be nonnegative");
        if (!(c.datum.y > 0.0)) d->fail("y", "must be positive");
        if (!(c.datum.t0 >= 0.0)) d->fail("t", "must be nonnegative");
    }

    if (const auto o = n.child("optimize")) {
        o->allow({"n_intervals", "half_levels", "horizon", "tol_opt", "refine", "max_sweeps"});
        c.optimize.family.n_intervals = o->count("n_intervals", c.optimize.family.n_intervals);
        c.optimize.family.half_levels = o->flag("half_levels", c.optimize.family.half_levels);
        c.optimize.family.horizon = o->number("horizon", c.optimize.family.horizon);
        c.optimize.tol_opt = o->number("tol_opt", c.optimize.tol_opt);
        c.optimize.refine = o->flag("refine", c.optimize.refine);
        c.optimize.max_sweeps = o->count("max_sweeps", c.optimize.max_sweeps);
        if (c.optimize.family.n_intervals < 1 || c.optimize.family.n_intervals > 20)
            o->fail("n_intervals", "must be in [1, 20]");
    }

    if (const auto t = n.child("tolerances")) {
        t->allow({"tol_cross", "tol_deriv_factor", "horizon_cap", "step", "envelope_interval"});
        c.eradication.tol_cross = t->number("tol_cross", c.eradication.tol_cross);
        c.eradication.tol_deriv_factor = t->number("tol_deriv_factor", c.eradication.tol_deriv_factor);
        c.eradication.horizon_cap = t->number("horizon_cap", c.eradication.horizon_cap);
        c.eradication.step = t->number("step", c.eradication.step);
        c.eradication.envelope_interval = t->number("envelope_interval", c.eradication.envelope_interval);
        if (!(c.eradication.tol_cross > 0.0)) t->fail("tol_cross", "must be positive");
    }
    c.optimize.eradication = c.eradication;

    if (const auto g = n.child("grid")) {
        g->allow({"x_max", "nx", "y_min", "y_max", "ny", "t_max", "nt", "courant", "stationary_dt", "tol_vi",
                  "max_iterations", "interpolation", "boundary", "trace_intervals"});
        HjbSettings h;
        GridSpec& s = h.grid;
        const std::string boundary = g->text("boundary", "threshold");
        if (boundary == "threshold")
            h.boundary = GridBoundary::threshold;
        else if (boundary == "trace")
            h.boundary = GridBoundary::trace;
        else
            g->fail("boundary", "expected threshold or trace");
        const double mu_b = h.boundary == GridBoundary::threshold ? c.mu : c.mu0;
        s.x_max = g->number("x_max", s.x_max);
        s.nx = g->count("nx", s.nx);
        s.y_min = g->number("y_min", mu_b);
        s.y_max = g->number("y_max", s.y_max);
        s.ny = g->count("ny", s.ny);
        s.t_max = g->number("t_max", c.schedule.constant_from() < std::numeric_limits<double>::infinity()
                                         ? c.schedule.constant_from()
                                         : 0.0);
        s.nt = g->count("nt", s.t_max > 0.0 ? s.nt : 1);
        s.courant = g->number("courant", s.courant);
        s.stationary_dt = g->number("stationary_dt", s.stationary_dt);
        s.tol_vi = g->number("tol_vi", s.tol_vi);
        s.max_iterations = g->count("max_iterations", s.max_iterations);
        const std::string interp = g->text("interpolation", "log_y");
        if (interp == "log_y")
            s.interpolation = YInterpolation::log_y;
        else if (interp == "linear")
            s.interpolation = YInterpolation::linear;
        else
            g->fail("interpolation", "expected log_y or linear");
        h.trace_family.n_intervals = g->count("trace_intervals", h.trace_family.n_intervals);
        s.threads = c.threads;
        try {
            s.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        if (std::abs(s.y_min - mu_b) > 1e-12 * mu_b)
            g->fail("y_min", std::string("must equal ") + (h.boundary == GridBoundary::threshold ? "mu" : "mu0") +
                                 " for the " + boundary + " boundary");
        if (s.x_max < c.schedule.x_hi()) g->fail("x_max", "must contain [0, gamma_hi / beta_lo]");
        if (h.trace_family.n_intervals < 1 || h.trace_family.n_intervals > 20)
            g->fail("trace_intervals", "must be in [1, 20]");
        c.hjb = h;
    }

    c.ensemble.y_lo = c.mu0;
    if (const auto e = n.child("ensemble")) {
        e->allow({"size", "seed", "x_lo", "x_hi", "y_lo", "y_hi", "t_hi", "max_switches", "control_span",
                  "tangent_members"});
        EnsembleSpec& s = c.ensemble;
        s.size = e->count("size", s.size);
        s.seed = e->seed("seed", s.seed);
        s.x_lo = e->number("x_lo", s.x_lo);
        s.x_hi = e->number("x_hi", s.x_hi);
        s.y_lo = e->number("y_lo", s.y_lo);
        s.y_hi = e->number("y_hi", s.y_hi);
        s.t_hi = e->number("t_hi", s.t_hi);
        s.max_switches = e->count("max_switches", s.max_switches);
        s.control_span = e->number("control_span", s.control_span);
        s.tangent_members = e->count("tangent_members", s.tangent_members);
        if (s.y_lo < c.mu0) e->fail("y_lo", "ensemble data need y >= mu0");
        if (!(s.y_hi >= s.y_lo)) e->fail("y_hi", "must be >= y_lo");
        if (!(s.x_lo >= 0.0)) e->fail("x_lo", "must be nonnegative");
        if (!(s.x_hi >= s.x_lo)) e->fail("x_hi", "must be >= x_lo");
        if (!(s.t_hi >= 0.0)) e->fail("t_hi", "must be nonnegative");
        if (!(s.control_span > 0.0)) e->fail("control_span", "must be positive");
    }

    if (const auto v = n.child("verify")) {
        v->allow({"probes", "semiconcavity", "stability", "unsafe_mu", "unsafe_gap", "probe_tolerance",
                  "residual_constant_max"});
        VerifySettings& s = c.verify;
        if (v->has("probes")) {
            const json& p = v->raw("probes");
            if (!p.is_array()) v->fail("probes", "expected an array of [x, y, t]");
            s.probes.clear();
            for (std::size_t k = 0; k < p.size(); ++k) {
                const std::string path = v->field("probes") + "[" + std::to_string(k) + "]";
                if (!p[k].is_array() || p[k].size() != 3) throw ConfigError(path + ": expected [x, y, t]");
                std::array<double, 3> q{};
                for (int a = 0; a < 3; ++a) {
                    if (!p[k][a].is_number()) throw ConfigError(path + ": expected numbers");
                    q[a] = p[k][a].get<double>();
                }
                s.probes.push_back(q);
            }
        }
        if (const auto sc = v->child("semiconcavity")) {
            sc->allow({"lo", "hi", "step", "ratio"});
            s.semiconcavity_box = Box{triple(*sc, "lo"), triple(*sc, "hi")};
            s.semiconcavity_step = sc->count("step", s.semiconcavity_step);
            s.semiconcavity_ratio = sc->number("ratio", s.semiconcavity_ratio);
            if (s.semiconcavity_step < 2 || s.semiconcavity_step % 2 != 0) sc->fail("step", "must be even and >= 2");
        }
        if (const auto st = v->child("stability")) {
            st->allow({"deltas", "horizon", "ratio_slack"});
            s.stability_deltas = st->numbers("deltas", s.stability_deltas);
            s.stability_horizon = st->number("horizon", s.stability_horizon);
            s.stability_ratio_slack = st->number("ratio_slack", s.stability_ratio_slack);
            for (std::size_t k = 0; k < s.stability_deltas.size(); ++k)
                if (!(s.stability_deltas[k] > 0.0) || (k > 0 && !(s.stability_deltas[k] < s.stability_deltas[k - 1])))
                    st->fail("deltas", "must be positive and descending");
        }
        if (v->has("unsafe_mu")) s.unsafe_mu = v->number("unsafe_mu");
        s.unsafe_gap = v->number("unsafe_gap", s.unsafe_gap);
        s.probe_tolerance = v->number("probe_tolerance", s.probe_tolerance);
        s.residual_constant_max = v->number("residual_constant_max", s.residual_constant_max);
    }

    if (const auto f = n.child("fig1")) {
        f->allow({"mu", "find_tangency", "horizon"});
        c.fig1.mu = f->number("mu", c.fig1.mu);
        c.fig1.find_tangency = f->flag("find_tangency", c.fig1.find_tangency);
        c.fig1.horizon = f->number("horizon", c.fig1.horizon);
        if (!(c.fig1.mu > 0.0)) f->fail("mu", "must be positive");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    ordered_json j;
    j["name"] = c.name;
    j["schedule"] = write_schedule(c.schedule);
    j["mu0"] = c.mu0;
    j["mu"] = c.mu;
    j["datum"] = ordered_json{{"x", c.datum.x},
                              {"y", c.datum.y},
                              {"t", c.datum.t0},
                              {"control", ordered_json{{"breakpoints", c.datum.control.breakpoints()},
                                                       {"values", c.datum.control.values()}}}};
    j["simulate_horizon"] = c.simulate_horizon;
    j["mu1_samples"] = c.mu1_samples;
    j["optimize"] = ordered_json{{"n_intervals", c.optimize.family.n_intervals},
                                 {"half_levels", c.optimize.family.half_levels},
                                 {"horizon", c.optimize.family.horizon},
                                 {"tol_opt", c.optimize.tol_opt},
                                 {"refine", c.optimize.refine},
                                 {"max_sweeps", c.optimize.max_sweeps}};
    j["tolerances"] = ordered_json{{"tol_cross", c.eradication.tol_cross},
                                   {"tol_deriv_factor", c.eradication.tol_deriv_factor},
                                   {"horizon_cap", c.eradication.horizon_cap},
                                   {"step", c.eradication.step},
                                   {"envelope_interval", c.eradication.envelope_interval}};
    if (c.hjb) {
        const GridSpec& s = c.hjb->grid;
        j["grid"] = ordered_json{{"boundary", boundary_name(c.hjb->boundary)},
                                 {"x_max", s.x_max},
                                 {"nx", s.nx},
                                 {"y_min", s.y_min},
                                 {"y_max", s.y_max},
                                 {"ny", s.ny},
                                 {"t_max", s.t_max},
                                 {"nt", s.nt},
                                 {"courant", s.courant},
                                 {"stationary_dt", s.stationary_dt},
                                 {"tol_vi", s.tol_vi},
                                 {"max_iterations", s.max_iterations},
                                 {"interpolation", interpolation_name(s.interpolation)},
                                 {"trace_intervals", c.hjb->trace_family.n_intervals}};
    }
    const EnsembleSpec& e = c.ensemble;
    j["ensemble"] = ordered_json{{"size", e.size},
                                 {"seed", e.seed},
                                 {"x_lo", e.x_lo},
                                 {"x_hi", e.x_hi},
                                 {"y_lo", e.y_lo},
                                 {"y_hi", e.y_hi},
                                 {"t_hi", e.t_hi},
                                 {"max_switches", e.max_switches},
                                 {"control_span", e.control_span},
                                 {"tangent_members", e.tangent_members}};
    const VerifySettings& v = c.verify;
    ordered_json vj;
    vj["probes"] = ordered_json::array();
    for (const auto& p : v.probes) vj["probes"].push_back({p[0], p[1], p[2]});
    if (v.semiconcavity_box) {
        const Box& K = *v.semiconcavity_box;
        vj["semiconcavity"] = ordered_json{{"lo", {K.lo[0], K.lo[1], K.lo[2]}},
                                           {"hi", {K.hi[0], K.hi[1], K.hi[2]}},
                                           {"step", v.semiconcavity_step},
                                           {"ratio", v.semiconcavity_ratio}};
    }
    vj["stability"] = ordered_json{
        {"deltas", v.stability_deltas}, {"horizon", v.stability_horizon}, {"ratio_slack", v.stability_ratio_slack}};
    if (v.unsafe_mu) vj["unsafe_mu"] = *v.unsafe_mu;
    vj["unsafe_gap"] = v.unsafe_gap;
    vj["probe_tolerance"] = v.probe_tolerance;
    vj["residual_constant_max"] = v.residual_constant_max;
    j["verify"] = vj;
    j["fig1"] = ordered_json{{"mu", c.fig1.mu}, {"find_tangency", c.fig1.find_tangency}, {"horizon", c.fig1.horizon}};
    j["output_dir"] = c.output_dir;
    j["threads"] = c.threads;
    return j.dump(2) + "\n";
}

std::string resolve_output_dir(const std::optional<std::string>& command_line, const char* environment,
                               const ExperimentConfig& config) {
    if (command_line && !command_line->empty()) return *command_line;
    if (environment && *environment) return environment;
    return config.output_dir;
}

} // namespace sirhjb
