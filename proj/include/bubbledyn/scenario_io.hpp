#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "bubbledyn/dynamics.hpp"

namespace bubbledyn::io {

inline constexpr int kSchemaVersion = 1;

/// Parses and validates a scenario document. Errors are ValidationError with
/// messages of the form "<source>:<line>: <field>: <problem>". Relative
/// cavity mesh paths are resolved against `base_dir`.
dynamics::Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>",
                                  const std::filesystem::path& base_dir = {});
dynamics::Scenario load_scenario(const std::filesystem::path& path);

/// Canonical JSON text of a scenario; parse_scenario of the result yields
/// an equal value.
std::string canonical_json(const dynamics::Scenario& scenario);

/// Admissibility of the initial configuration and the cavity velocity
/// constraint. Throws ValidationError naming the offending bubble.
void validate_initial_state(const dynamics::Scenario& scenario, const std::string& source = "<scenario>");

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Column names of the trajectory table.
std::vector<std::string> trajectory_columns(const shapes::Configuration& config);
void write_trajectory_csv(std::ostream& os, const dynamics::Trajectory& trajectory);

}  // namespace bubbledyn::io
