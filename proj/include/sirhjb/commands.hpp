#pragma once

#include "sirhjb/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sirhjb {

/// Subcommands in the order they are listed by the tool.
const std::vector<std::string>& command_names();

/// Boundary data of the configured HJB problem (threshold or trace face).
BoundaryData configured_boundary(const ExperimentConfig& config);

/// Solves the configured HJB problem. DomainError when the config has no grid section.
ValueGrid configured_hjb(const ExperimentConfig& config, ValueForm form = ValueForm::u);

/// Runs one subcommand, writing its artifacts into `out_dir` (created if needed) and progress
/// lines to `log`. Returns the exit status: 0 on success, 1 when `verify` finds a failing check.
/// Numerical errors propagate as exceptions.
int run_command(const std::string& name, const ExperimentConfig& config, const std::string& out_dir, std::ostream& log);

} // namespace sirhjb
