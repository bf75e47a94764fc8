#include "sirhjb/commands.hpp"
#include "sirhjb/error.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

const char* describe(const std::string& name) {
    if (name == "simulate") return "Integrate one flow and write it as CSV";
    if (name == "eradication") return "Upper and lower eradication times of one datum";
    if (name == "mu1") return "Threshold certificate mu1";
    if (name == "optimize") return "Best control of the configured family";
    if (name == "hjb") return "Solve the HJB equation on the configured grid";
    if (name == "verify") return "Run every cross-check; nonzero exit on failure";
    if (name == "fig1") return "Trajectory with both eradication times marked (SVG)";
    if (name == "fig2") return "Effective boundary sketch (SVG)";
    return "";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SIR minimum eradication time: trajectories, threshold certificate, HJB solver, verification"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    for (const std::string& name : sirhjb::command_names()) {
        CLI::App* sub = app.add_subcommand(name, describe(name));
        sub->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (overrides SIRHJB_OUT and the config)");
        sub->add_option("--seed", seed, "Ensemble seed (overrides the config)");
    }
    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        sirhjb::ExperimentConfig config = sirhjb::load_config(config_path);
        if (seed) config.ensemble.seed = *seed;
        const std::string dir = sirhjb::resolve_output_dir(
            out_dir.empty() ? std::nullopt : std::optional<std::string>(out_dir), std::getenv("SIRHJB_OUT"), config);
        return sirhjb::run_command(name, config, dir, std::cout);
    } catch (const sirhjb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << name << " failed: " << e.what() << "\n";
        return 3;
    }
}
