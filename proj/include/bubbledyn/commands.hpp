#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bubbledyn/dynamics.hpp"
#include "bubbledyn/reference.hpp"

namespace bubbledyn::commands {

struct RunOptions {
  std::optional<int> residual_cadence;
  std::optional<reference::TranslationCoefficient> translation_coefficient;
};

/// Samples of the closed-form single-bubble model at the times of `like`.
struct ReferenceTrajectory {
  std::vector<double> t;
  std::vector<reference::SingleBubbleState> states;
};

ReferenceTrajectory closed_form_trajectory(const dynamics::Scenario& scenario,
                                           const std::vector<double>& times);

struct Deviation {
  /// max_t |r - r_ref| / r_ref
  double radius = 0.0;
  /// max_t |c - c_ref| / max_t |c_ref - c_ref(0)|, or the absolute deviation
  /// over the radius when the reference does not move.
  double center = 0.0;
};

/// Deviation of a single-sphere trajectory from the closed form.
Deviation reference_deviation(const dynamics::Trajectory& trajectory,
                              const ReferenceTrajectory& reference);

/// Integrates the scenario and writes trajectory.csv and diagnostics.json
/// (plus reference.csv for a single unbounded sphere) into out_dir.
/// Returns the process exit status.
int run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
        const RunOptions& options, std::ostream& log);

/// Validation and preflight report printed as JSON. Returns 0 when no
/// problem was found, 1 otherwise.
int check(const std::filesystem::path& scenario_path, std::ostream& out);

/// Mesh-level study printed as a table (and written to out_dir when given).
int convergence(const std::filesystem::path& scenario_path, const std::vector<int>& levels,
                const std::optional<std::filesystem::path>& out_dir, std::ostream& out);

}  // namespace bubbledyn::commands
