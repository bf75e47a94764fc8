#pragma once

#include "sirhjb/hjb.hpp"
#include "sirhjb/optimize.hpp"
#include "sirhjb/verify.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sirhjb {

/// Data imposed on the lower y face of the HJB box.
enum class GridBoundary {
    /// mu_b = mu: zero where the threshold is met at once.
    threshold,
    /// mu_b = mu0: the trajectory-layer value on y = mu0.
    trace,
};

struct HjbSettings {
    GridSpec grid;
    GridBoundary boundary = GridBoundary::threshold;
    /// Control family used to compute the trace on y = mu0.
    FamilySpec trace_family{1, false, 0.0};
};

struct VerifySettings {
    /// Probes for the HJB-trajectory comparison.
    std::vector<std::array<double, 3>> probes;
    /// Semiconcavity box; skipped when absent.
    std::optional<Box> semiconcavity_box;
    /// Coarse probe step in cells; the fine step is half of it.
    std::size_t semiconcavity_step = 4;
    double semiconcavity_ratio = 1.2;
    std::vector<double> stability_deltas{1e-2, 1e-3, 1e-4, 1e-5};
    double stability_horizon = 50.0;
    /// Consecutive stability distances must have ratios within this factor of 10.
    double stability_ratio_slack = 1.2;
    /// Threshold at which the gap report must show a gap above `unsafe_gap`; skipped when absent.
    std::optional<double> unsafe_mu;
    double unsafe_gap = 0.1;
    double probe_tolerance = 0.05;
    double residual_constant_max = 10.0;
};

struct Fig1Settings {
    double mu = 0.04;
    /// Move y of the datum onto a tangency of I with mu before plotting.
    bool find_tangency = true;
    double horizon = 40.0;
};

/// Everything one run needs; one file fully determines any subcommand.
struct ExperimentConfig {
    std::string name = "experiment";
    RateSchedule schedule = RateSchedule::constant(0.5, 0.2);
    double mu0 = 0.1;
    double mu = 0.01;
    Datum datum{1.0, 0.1, 0.0, {}};
    double simulate_horizon = 50.0;
    std::size_t mu1_samples = 64;
    OptimizeOptions optimize;
    std::optional<HjbSettings> hjb;
    EnsembleSpec ensemble;
    EradicationOptions eradication;
    VerifySettings verify;
    Fig1Settings fig1;
    std::string output_dir = "out";
    unsigned threads = 0;
};

/// Parses JSON text; ConfigError naming the field path (e.g. `grid.nx`) on any schema violation.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Pretty JSON with every field written out; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& config);

/// Output directory precedence: command line, then the environment value, then the config.
std::string resolve_output_dir(const std::optional<std::string>& command_line, const char* environment,
                               const ExperimentConfig& config);

} // namespace sirhjb
