#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scarcity_audit/policy.hpp"
#include "scarcity_audit/population.hpp"

namespace scarcity_audit {

struct TrialConfig {
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

struct SubgroupEstimate {
  std::string subgroup;
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(trials)
};

struct EmpiricalRates {
  std::vector<SubgroupEstimate> rates;  // table subgroup order
  // Randomized-rounding diagnostic: mean units served per category.
  std::vector<double> category_served_mean;
  std::vector<double> category_served_std_error;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
};

// Person-by-person lottery realization of the allocation process. Whole
// categories are served outright; a partially funded category serves a
// uniform random subset of floor(r) people plus one more with probability
// frac(r), which preserves the expected served count exactly. Identical
// (inputs, trials, seed) reproduce bit-identical estimates regardless of
// thread count: trial t draws from a stream keyed (seed, t) and the
// reduction runs in fixed trial order.
EmpiricalRates simulate(const PopulationTable& table, const HierarchicalPolicy& policy,
                        Budget budget, const TrialConfig& config);
EmpiricalRates simulate(const PopulationTable& table, const WeightedPolicy& policy,
                        Budget budget, const TrialConfig& config);
EmpiricalRates simulate(const PopulationTable& table, const Policy& policy,
                        Budget budget, const TrialConfig& config);

// Central difference (f(at+step) - f(at-step)) / (2*step). The caller passes
// the enclosing linear segment; a stencil that straddles a breakpoint is
// refused with DomainError.
double finite_difference(const std::function<double(double)>& metric, double at,
                         double step, double segment_lo, double segment_hi);

// Expected receipt accumulated one individual at a time straight from each
// rule's definition -- deliberately a separate code path from receipt_rate's
// aggregated form. Returns per-subgroup rates in table order. N <= 10000.
std::vector<double> exact_small_instance(const PopulationTable& table,
                                         const HierarchicalPolicy& policy, Budget budget);
std::vector<double> exact_small_instance(const PopulationTable& table,
                                         const WeightedPolicy& policy, Budget budget);

}  // namespace scarcity_audit
