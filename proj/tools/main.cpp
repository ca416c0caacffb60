#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "scarcity_audit/errors.hpp"

namespace {

void add_common_options(CLI::App& cmd, scarcity_audit::cli::RunConfig& config) {
  cmd.add_option("--population", config.population_path,
                 "Population CSV (header: category,subgroup,count)")
      ->required();
  cmd.add_option("--policy", config.policy_path, "Policy JSON file")->required();
  cmd.add_option("--out", config.out_path, "Write the report here instead of stdout");
  cmd.add_option("--format", config.format, "Output format: csv or json");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prioritization policy analysis: allocation probabilities, subgroup "
               "receipt rates, disparity metrics, budget sweeps, and a Monte Carlo "
               "cross-check"};
  app.require_subcommand(1);

  scarcity_audit::cli::RunConfig config;
  double budget_value = 0.0;
  std::string grid_text;
  std::string pair_text;

  CLI::App* allocate = app.add_subcommand(
      "allocate", "Per-category probabilities and subgroup receipt rates");
  add_common_options(*allocate, config);
  allocate->add_option("--budget", budget_value, "Resource budget")->required();
  allocate->add_option("--pair", pair_text, "Report rates for 's1,s2' only");
  allocate->add_option("--epsilon", config.epsilon, "Ratio smoothing constant");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Disparity metrics over a budget grid (breakpoints inserted)");
  add_common_options(*sweep, config);
  sweep->add_option("--pair", pair_text, "Subgroup pair 's1,s2'")->required();
  sweep->add_option("--grid", grid_text, "Budget grid 'lo:hi:points' (default 0:N:201)");
  sweep->add_option("--epsilon", config.epsilon, "Ratio smoothing constant");

  CLI::App* diagnose = app.add_subcommand(
      "diagnose", "Derivatives, tension partials, finite-difference cross-checks, "
                  "ratio limits, and an optional volatility scan");
  add_common_options(*diagnose, config);
  diagnose->add_option("--budget", budget_value, "Resource budget")->required();
  diagnose->add_option("--pair", pair_text, "Subgroup pair 's1,s2'")->required();
  diagnose->add_option("--grid", grid_text, "Scan range 'lo:hi:points'");
  diagnose->add_option("--epsilon", config.epsilon, "Ratio smoothing constant");

  CLI::App* oracle = app.add_subcommand(
      "oracle", "Monte Carlo lottery simulation vs analytic receipt rates");
  add_common_options(*oracle, config);
  oracle->add_option("--budget", budget_value, "Resource budget")->required();
  oracle->add_option("--trials", config.trials, "Number of trials (default 100000)");
  oracle->add_option("--seed", config.seed, "RNG seed (default 0)");
  oracle->add_option("--perturb", config.perturb,
                     "Testing hook: shift analytic rates by this amount")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (allocate->parsed() || diagnose->parsed() || oracle->parsed()) {
    config.budget = budget_value;
  }
  if (!grid_text.empty()) config.grid = grid_text;
  if (!pair_text.empty()) config.pair = pair_text;

  try {
    if (allocate->parsed()) return scarcity_audit::cli::cmd_allocate(config);
    if (sweep->parsed()) return scarcity_audit::cli::cmd_sweep(config);
    if (diagnose->parsed()) return scarcity_audit::cli::cmd_diagnose(config);
    return scarcity_audit::cli::cmd_oracle(config);
  } catch (const scarcity_audit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const scarcity_audit::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const scarcity_audit::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
