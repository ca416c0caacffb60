#include "scarcity_audit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scarcity_audit/errors.hpp"
#include "scarcity_audit/parallel.hpp"
#include "scarcity_audit/rng.hpp"

namespace scarcity_audit {
namespace {

constexpr std::uint64_t kExactInstanceLimit = 10000;

// Subgroup id of every individual in one category, for lottery draws.
std::vector<std::uint32_t> category_members(const PopulationTable& table,
                                            std::size_t category) {
  std::vector<std::uint32_t> members;
  members.reserve(table.category_size(category));
  for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
    members.insert(members.end(), table.count(category, s),
                   static_cast<std::uint32_t>(s));
  }
  return members;
}

// Serve floor(amount) members uniformly plus one more with probability
// frac(amount); expected served count equals amount exactly. Adds the served
// subgroup counts to served_by_subgroup and returns how many were served.
std::uint64_t lottery(SplitRng& rng, const std::vector<std::uint32_t>& members,
                      std::vector<std::uint32_t>& scratch, double amount,
                      std::vector<double>& served_by_subgroup) {
  const auto floor_amount = static_cast<std::uint64_t>(std::floor(amount));
  const double fraction = amount - static_cast<double>(floor_amount);
  const std::uint64_t quota = floor_amount + (rng.bernoulli(fraction) ? 1 : 0);
  const std::uint64_t pool = members.size();
  if (quota >= pool) {
    for (const std::uint32_t s : members) served_by_subgroup[s] += 1.0;
    return pool;
  }
  scratch.resize(pool);
  std::iota(scratch.begin(), scratch.end(), 0u);
  for (std::uint64_t j = 0; j < quota; ++j) {
    const std::uint64_t pick = j + rng.next_below(pool - j);
    std::swap(scratch[j], scratch[pick]);
    served_by_subgroup[members[scratch[j]]] += 1.0;
  }
  return quota;
}

void check_subgroups_populated(const PopulationTable& table) {
  for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
    if (table.subgroup_total(s) == 0) {
      throw DomainError("subgroup '" + table.subgroups()[s] +
                        "' has zero population: receipt rate undefined");
    }
  }
}

// Mean and sample-sd/sqrt(n) per column of a trial-major matrix, reduced in
// fixed trial order so results do not depend on thread count.
void reduce_columns(const std::vector<double>& data, std::uint64_t trials,
                    std::size_t columns, std::vector<double>& means,
                    std::vector<double>& std_errors) {
  means.assign(columns, 0.0);
  std_errors.assign(columns, 0.0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (std::size_t c = 0; c < columns; ++c) means[c] += data[t * columns + c];
  }
  for (std::size_t c = 0; c < columns; ++c) means[c] /= static_cast<double>(trials);
  if (trials < 2) return;
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (std::size_t c = 0; c < columns; ++c) {
      const double deviation = data[t * columns + c] - means[c];
      std_errors[c] += deviation * deviation;
    }
  }
  for (std::size_t c = 0; c < columns; ++c) {
    std_errors[c] = std::sqrt(std_errors[c] / static_cast<double>(trials - 1)) /
                    std::sqrt(static_cast<double>(trials));
  }
}

EmpiricalRates assemble(const PopulationTable& table, const TrialConfig& config,
                        const std::vector<double>& trial_rates,
                        const std::vector<double>& trial_served) {
  const std::size_t n_sub = table.subgroup_count();
  const std::size_t n_cat = table.category_count();
  EmpiricalRates result;
  result.trials = config.trials;
  result.seed = config.seed;
  std::vector<double> means;
  std::vector<double> std_errors;
  reduce_columns(trial_rates, config.trials, n_sub, means, std_errors);
  for (std::size_t s = 0; s < n_sub; ++s) {
    result.rates.push_back({table.subgroups()[s], means[s], std_errors[s]});
  }
  reduce_columns(trial_served, config.trials, n_cat, result.category_served_mean,
                 result.category_served_std_error);
  return result;
}

void check_trials(const TrialConfig& config) {
  if (config.trials == 0) {
    throw ValidationError("trials must be at least 1");
  }
}

}  // namespace

EmpiricalRates simulate(const PopulationTable& table, const HierarchicalPolicy& policy,
                        Budget budget, const TrialConfig& config) {
  check_trials(config);
  check_subgroups_populated(table);
  const std::size_t n_sub = table.subgroup_count();
  const std::size_t n_cat = table.category_count();
  const AllocationOutcome outcome = hierarchical_allocate(table, policy, budget);

  // Fully served categories contribute the same counts every trial.
  std::vector<double> base_by_subgroup(n_sub, 0.0);
  std::vector<double> base_by_category(n_cat, 0.0);
  for (std::size_t c = 0; c < n_cat; ++c) {
    if (outcome.categories[c].status != CategoryStatus::fully_served) continue;
    base_by_category[c] = static_cast<double>(table.category_size(c));
    for (std::size_t s = 0; s < n_sub; ++s) {
      base_by_subgroup[s] += static_cast<double>(table.count(c, s));
    }
  }
  std::vector<std::uint32_t> cutoff_members;
  double cutoff_amount = 0.0;
  if (outcome.cutoff) {
    cutoff_members = category_members(table, *outcome.cutoff);
    cutoff_amount = outcome.categories[*outcome.cutoff].expected_resources;
  }

  std::vector<double> trial_rates(config.trials * n_sub);
  std::vector<double> trial_served(config.trials * n_cat);
  detail::parallel_for(config.trials, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> scratch;
    std::vector<double> served(n_sub);
    for (std::size_t t = begin; t < end; ++t) {
      SplitRng rng(config.seed, t);
      served = base_by_subgroup;
      double* served_row = &trial_served[t * n_cat];
      std::copy(base_by_category.begin(), base_by_category.end(), served_row);
      if (outcome.cutoff) {
        served_row[*outcome.cutoff] = static_cast<double>(
            lottery(rng, cutoff_members, scratch, cutoff_amount, served));
      }
      for (std::size_t s = 0; s < n_sub; ++s) {
        trial_rates[t * n_sub + s] =
            served[s] / static_cast<double>(table.subgroup_total(s));
      }
    }
  });
  return assemble(table, config, trial_rates, trial_served);
}

EmpiricalRates simulate(const PopulationTable& table, const WeightedPolicy& policy,
                        Budget budget, const TrialConfig& config) {
  check_trials(config);
  check_subgroups_populated(table);
  const std::size_t n_sub = table.subgroup_count();
  const std::size_t n_cat = table.category_count();
  const AllocationOutcome outcome = weighted_allocate(table, policy, budget);

  std::vector<std::vector<std::uint32_t>> members(n_cat);
  std::vector<double> amounts(n_cat, 0.0);  // units landing in each category
  for (std::size_t c = 0; c < n_cat; ++c) {
    const double size = static_cast<double>(table.category_size(c));
    if (outcome.categories[c].status == CategoryStatus::saturated) {
      amounts[c] = size;
    } else {
      amounts[c] = std::min(outcome.categories[c].expected_resources, size);
      members[c] = category_members(table, c);
    }
  }

  std::vector<double> trial_rates(config.trials * n_sub);
  std::vector<double> trial_served(config.trials * n_cat);
  detail::parallel_for(config.trials, [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> scratch;
    std::vector<double> served(n_sub);
    for (std::size_t t = begin; t < end; ++t) {
      SplitRng rng(config.seed, t);
      std::fill(served.begin(), served.end(), 0.0);
      double* served_row = &trial_served[t * n_cat];
      for (std::size_t c = 0; c < n_cat; ++c) {
        if (outcome.categories[c].status == CategoryStatus::saturated) {
          for (std::size_t s = 0; s < n_sub; ++s) {
            served[s] += static_cast<double>(table.count(c, s));
          }
          served_row[c] = amounts[c];
        } else {
          served_row[c] = static_cast<double>(
              lottery(rng, members[c], scratch, amounts[c], served));
        }
      }
      for (std::size_t s = 0; s < n_sub; ++s) {
        trial_rates[t * n_sub + s] =
            served[s] / static_cast<double>(table.subgroup_total(s));
      }
    }
  });
  return assemble(table, config, trial_rates, trial_served);
}

EmpiricalRates simulate(const PopulationTable& table, const Policy& policy,
                        Budget budget, const TrialConfig& config) {
  return std::visit(
      [&](const auto& concrete) { return simulate(table, concrete, budget, config); },
      policy);
}

double finite_difference(const std::function<double(double)>& metric, double at,
                         double step, double segment_lo, double segment_hi) {
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw ValidationError("finite-difference step must be positive and finite");
  }
  if (!(segment_lo < at && at < segment_hi)) {
    throw DomainError("evaluation point lies outside the segment");
  }
  if (!(at - step > segment_lo && at + step < segment_hi)) {
    throw DomainError("finite-difference stencil straddles a segment boundary");
  }
  return (metric(at + step) - metric(at - step)) / (2.0 * step);
}

std::vector<double> exact_small_instance(const PopulationTable& table,
                                         const HierarchicalPolicy& policy,
                                         Budget budget) {
  if (table.total() > kExactInstanceLimit) {
    throw ValidationError("exact_small_instance is limited to N <= " +
                          std::to_string(kExactInstanceLimit));
  }
  check_subgroups_populated(table);
  const auto order = detail::ranking_indices(table, policy);
  const double b = budget.value();
  std::vector<double> expected(table.subgroup_count(), 0.0);
  std::uint64_t prefix = 0;
  for (const std::size_t c : order) {
    const std::uint64_t size = table.category_size(c);
    const std::uint64_t next_prefix = prefix + size;
    double probability = 0.0;
    if (static_cast<double>(next_prefix) <= b) {
      probability = 1.0;
    } else if (static_cast<double>(prefix) < b) {
      probability = (b - static_cast<double>(prefix)) / static_cast<double>(size);
    }
    for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
      // One individual at a time, on purpose.
      for (std::uint64_t person = 0; person < table.count(c, s); ++person) {
        expected[s] += probability;
      }
    }
    prefix = next_prefix;
  }
  for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
    expected[s] /= static_cast<double>(table.subgroup_total(s));
  }
  return expected;
}

std::vector<double> exact_small_instance(const PopulationTable& table,
                                         const WeightedPolicy& policy, Budget budget) {
  if (table.total() > kExactInstanceLimit) {
    throw ValidationError("exact_small_instance is limited to N <= " +
                          std::to_string(kExactInstanceLimit));
  }
  check_subgroups_populated(table);
  const auto weights = detail::aligned_weights(table, policy);
  double weight_sum = 0.0;
  for (const double w : weights) weight_sum += w;
  const double b = budget.value();
  std::vector<double> expected(table.subgroup_count(), 0.0);
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    const double size = static_cast<double>(table.category_size(c));
    const double probability = std::min(1.0, weights[c] * b / (size * weight_sum));
    for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
      for (std::uint64_t person = 0; person < table.count(c, s); ++person) {
        expected[s] += probability;
      }
    }
  }
  for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
    expected[s] /= static_cast<double>(table.subgroup_total(s));
  }
  return expected;
}

}  // namespace scarcity_audit
