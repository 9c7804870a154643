#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bubbledyn/commands.hpp"
#include "bubbledyn/error.hpp"

namespace {

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size() || v < 0) throw CLI::ValidationError("--levels", "bad level '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace bubbledyn;
  CLI::App app{"Gas bubbles in an ideal liquid: boundary-element Euler-Lagrange dynamics"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir = ".";
  std::string levels = "1,2,3";
  int residual_cadence = -1;
  std::string coefficient;

  auto add_scenario = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  };

  CLI::App* run = app.add_subcommand("run", "integrate a scenario and write trajectory.csv, diagnostics.json");
  add_scenario(run);
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--residual-cadence", residual_cadence,
                  "evaluate the boundary residual every N samples (0 disables)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--translation-coefficient", coefficient,
                  "closed-form translation law for reference.csv")
      ->check(CLI::IsMember({"resolved", "paper"}));

  CLI::App* check = app.add_subcommand("check", "validate a scenario and print a preflight report");
  add_scenario(check);

  CLI::App* conv = app.add_subcommand("convergence", "rerun a scenario over several mesh levels");
  add_scenario(conv);
  conv->add_option("--levels", levels, "comma-separated mesh levels, coarse to fine");
  auto* conv_out = conv->add_option("--out", out_dir, "directory for convergence.json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      commands::RunOptions opts;
      if (residual_cadence >= 0) opts.residual_cadence = residual_cadence;
      if (coefficient == "resolved")
        opts.translation_coefficient = reference::TranslationCoefficient::Resolved;
      else if (coefficient == "paper")
        opts.translation_coefficient = reference::TranslationCoefficient::Alternative;
      return commands::run(scenario, out_dir, opts, std::cerr);
    }
    if (check->parsed()) return commands::check(scenario, std::cout);
    if (conv->parsed()) {
      std::optional<std::filesystem::path> dir;
      if (conv_out->count() > 0) dir = out_dir;
      return commands::convergence(scenario, parse_levels(levels), dir, std::cout);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
