#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "scarcity_audit/metrics.hpp"

namespace scarcity_audit::cli {

struct RunConfig {
  std::string population_path;
  std::string policy_path;
  std::optional<double> budget;
  std::optional<std::string> grid;  // "lo:hi:points"
  std::optional<std::string> pair;  // "s1,s2"
  double epsilon = kDefaultEpsilon;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 0;
  std::string format;  // per-command default when empty
  std::string out_path;
  double perturb = 0.0;  // oracle self-test hook: shifts the analytic rates
};

int cmd_allocate(const RunConfig& config);
int cmd_sweep(const RunConfig& config);
int cmd_diagnose(const RunConfig& config);
int cmd_oracle(const RunConfig& config);

}  // namespace scarcity_audit::cli
