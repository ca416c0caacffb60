// Acceptance suite: one check per release criterion, one pass/fail line each.
// Run directly or through ctest; exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "scarcity_audit/errors.hpp"
#include "scarcity_audit/metrics.hpp"
#include "scarcity_audit/oracle.hpp"
#include "scarcity_audit/policy.hpp"
#include "scarcity_audit/population.hpp"
#include "test_support.hpp"

#ifndef SCARCITY_AUDIT_DATA_DIR
#error "SCARCITY_AUDIT_DATA_DIR must be defined"
#endif

using namespace scarcity_audit;

namespace {

int failures = 0;

void require(bool condition, const std::string& detail) {
  if (!condition) throw std::runtime_error(detail);
}

void criterion(const std::string& name, const std::function<void()>& body) {
  try {
    body();
    std::printf("[PASS] %s\n", name.c_str());
  } catch (const std::exception& e) {
    ++failures;
    std::printf("[FAIL] %s: %s\n", name.c_str(), e.what());
  }
  std::fflush(stdout);
}

double ms_since(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   start)
      .count();
}

PopulationTable load_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw IoError("cannot open '" + path + "'");
  return PopulationTable::load_csv(in);
}

Policy load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw IoError("cannot open '" + path + "'");
  return load_policy(in);
}

void a1_weighted_worked_example() {
  const auto ten = PopulationTable::from_rows({{"C1", "s1", 10}});
  const auto four = PopulationTable::from_rows({{"C1", "s1", 4}});
  const WeightedPolicy whole{{{"C1", 1.0}}};
  const auto start = std::chrono::steady_clock::now();
  const auto capped = weighted_allocate(ten, whole, Budget(8));
  const auto overflow = weighted_allocate(four, whole, Budget(8));
  const double elapsed = ms_since(start);
  require(capped.categories[0].probability == 0.8, "P != 0.8 exactly");
  require(capped.unspent == 0.0, "unexpected unspent");
  require(overflow.categories[0].probability == 1.0, "P != 1 exactly");
  require(overflow.unspent == 4.0, "unspent != 4 exactly");
  require(elapsed < 1.0, "allocation took " + std::to_string(elapsed) + " ms");
}

void a2_metric_worked_examples() {
  require(std::abs(absolute_difference(0.6, 0.4) - 0.2) <= 1e-12, "AD(0.6,0.4)");
  require(std::abs(log_ratio_difference(0.8, 0.4).log_ratio - 0.693) <= 1e-3,
          "lnRD(0.8,0.4)");
  require(std::abs(log_ratio_difference(0.4, 0.8).log_ratio + 0.693) <= 1e-3,
          "lnRD swapped");
}

void a3_divergence_example() {
  require(std::abs(absolute_difference(0.4, 0.01) - 0.39) <= 1e-12, "AD(0.4,0.01)");
  require(std::abs(log_ratio_difference(0.4, 0.01, 1e-9).log_ratio - 3.689) <= 1e-3,
          "lnRD(0.4,0.01)");
  require(std::abs(absolute_difference(0.41, 0.02) - 0.39) <= 1e-12, "AD(0.41,0.02)");
  require(std::abs(log_ratio_difference(0.41, 0.02, 1e-9).log_ratio - 3.020) <= 1e-3,
          "lnRD(0.41,0.02)");
}

void a4_oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int iteration = 0; iteration < 1000; ++iteration) {
    const auto instance = test_support::random_instance(rng);
    const double b = unit(rng) * static_cast<double>(instance.table.total());
    const double gap = test_support::path_independence_gap(instance, b);
    require(gap <= 1e-12,
            "per-person and aggregated rates differ by " + std::to_string(gap));
  }
  const auto table = test_support::demo_table();
  const TrialConfig config{100000, 42};
  const struct {
    Policy policy;
    double budget;
    std::vector<double> analytic;
  } pinned[] = {
      {test_support::demo_ranking(), 7.0, {0.8, 0.6}},
      {test_support::demo_weights(), 5.0, {0.625, 0.375}},
      {test_support::demo_ranking(), 2.0, {0.3, 0.1}},
  };
  for (const auto& instance : pinned) {
    const auto empirical = simulate(table, instance.policy, Budget(instance.budget), config);
    for (std::size_t s = 0; s < instance.analytic.size(); ++s) {
      require(empirical.rates[s].std_error > 0.0, "degenerate standard error");
      require(std::abs(empirical.rates[s].mean - instance.analytic[s]) <=
                  3.0 * empirical.rates[s].std_error,
              "Monte Carlo outside 3 standard errors");
    }
  }
  const double elapsed = ms_since(start);
  require(elapsed < 60000.0, "took " + std::to_string(elapsed) + " ms");
}

void a5_derivative_suite() {
  std::mt19937 rng(505050);
  for (int iteration = 0; iteration < 20; ++iteration) {
    const auto instance = test_support::random_instance(rng);
    const auto hier = test_support::audit_derivatives(
        instance.table, instance.hierarchical, kDefaultEpsilon, 100, rng);
    require(hier.samples == 100, "too few valid hierarchical samples");
    require(hier.failures == 0,
            std::to_string(hier.failures) + " hierarchical mismatches");
    const auto weighted = test_support::audit_derivatives(
        instance.table, instance.weighted, kDefaultEpsilon, 100, rng);
    require(weighted.samples == 100, "too few valid weighted samples");
    require(weighted.failures == 0,
            std::to_string(weighted.failures) + " weighted mismatches");
  }
}

void a6_piecewise_linearity() {
  // Rates kink only at prefix sums / saturation thresholds; the absolute gap
  // additionally kinks where the rates cross, which the audit accounts for.
  std::mt19937 rng(606);
  for (int iteration = 0; iteration < 15; ++iteration) {
    const auto instance = test_support::random_instance(rng);
    const auto hier = test_support::audit_policy_linearity(instance.table,
                                                           instance.hierarchical);
    require(hier.rates.segment_checks > 0, "no hierarchical segments checked");
    require(hier.rates.segment_failures == 0, "rate curvature inside a segment");
    require(hier.rates.kink_failures == 0, "rate kink away from a prefix sum");
    require(hier.gap.segment_failures == 0, "gap curvature inside a segment");
    require(hier.gap.kink_failures == 0, "gap kink away from a listed budget");
    const auto weighted =
        test_support::audit_policy_linearity(instance.table, instance.weighted);
    require(weighted.rates.segment_checks > 0, "no weighted segments checked");
    require(weighted.rates.segment_failures == 0, "rate curvature inside a segment");
    require(weighted.rates.kink_failures == 0, "rate kink away from a threshold");
    require(weighted.gap.segment_failures == 0, "gap curvature inside a segment");
    require(weighted.gap.kink_failures == 0, "gap kink away from a listed budget");
  }
}

void a7_volatility_vs_dampening() {
  // Scarcity construction: the disadvantaged subgroup is nearly absent from
  // the top-ranked category, so its hierarchical rate sits in (0, 0.02] over
  // the scan range while the weighted split keeps both categories funded.
  const auto table = PopulationTable::from_rows({{"C1", "s1", 50},
                                                 {"C1", "s2", 1},
                                                 {"C2", "s1", 10},
                                                 {"C2", "s2", 100}});
  const HierarchicalPolicy ranking{{"C1", "C2"}};
  const WeightedPolicy weights{{{"C1", 0.7}, {"C2", 0.3}}};
  const double lo = 51.3;
  const double hi = 52.0;
  const double pre_saturation = saturation_thresholds(table, weights).front().budget;
  require(hi < pre_saturation, "scan range must stay pre-saturation");

  double max_hier = 0.0;
  double max_weighted = 0.0;
  double min_lnrd = std::numeric_limits<double>::infinity();
  double max_lnrd = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= 50; ++j) {
    const double b = lo + (hi - lo) * j / 50.0;
    const auto outcome = hierarchical_allocate(table, ranking, Budget(b));
    const double disadvantaged = receipt_rate(table, outcome, "s2");
    require(disadvantaged > 0.0 && disadvantaged <= 0.02,
            "scarce rate outside (0, 0.02]");
    max_hier = std::max(
        max_hier,
        hierarchical_log_ratio_derivative(table, ranking, Budget(b), "s1", "s2")
            .magnitude);
    max_weighted = std::max(
        max_weighted,
        weighted_log_ratio_derivative(table, weights, Budget(b), "s1", "s2")
            .magnitude);
    const double lnrd =
        weighted_log_ratio(table, weights, Budget(b), "s1", "s2").log_ratio;
    min_lnrd = std::min(min_lnrd, lnrd);
    max_lnrd = std::max(max_lnrd, lnrd);
  }
  require(max_hier > 10.0 * max_weighted,
          "hierarchical volatility " + std::to_string(max_hier) +
              " is not 10x the weighted " + std::to_string(max_weighted));
  require(max_lnrd - min_lnrd <= 1e-6, "weighted log-ratio is not flat");
}

void a8_ratio_limits() {
  const auto table = test_support::demo_table();
  const auto ranking = test_support::demo_ranking();
  const RatioLimits limits = hierarchical_ratio_limits(table, ranking, "s1", "s2");
  const auto low = hierarchical_allocate(table, ranking, Budget(2));
  const double observed =
      log_ratio_difference(receipt_rate(table, low, "s1"),
                           receipt_rate(table, low, "s2"), 1e-12)
          .ratio;
  require(std::abs(observed - limits.low_budget) <= 1e-6,
          "low-budget ratio " + std::to_string(observed) + " vs " +
              std::to_string(limits.low_budget));
  const auto full = hierarchical_allocate(table, ranking, Budget(10));
  const double parity = log_ratio_difference(receipt_rate(table, full, "s1"),
                                             receipt_rate(table, full, "s2"))
                            .ratio;
  require(parity == 1.0, "full-budget ratio is not exactly 1");
}

void a9_bundled_dataset_regimes() {
  const std::string dir = SCARCITY_AUDIT_DATA_DIR;
  const auto table = load_table_file(dir + "/shelter_example.csv");
  const auto hier = load_policy_file(dir + "/shelter_hierarchical.json");
  const auto weighted = load_policy_file(dir + "/shelter_weighted.json");
  const double total = static_cast<double>(table.total());
  const GridSpec grid{0.0, total, 201};

  const SweepSeries hier_series = sweep(table, hier, "refugee", "non_refugee", grid);
  require(hier_series.points.back().rate_s1 == 1.0, "hierarchical refugee rate at N");
  require(hier_series.points.back().rate_s2 == 1.0,
          "hierarchical non-refugee rate at N");

  const SweepSeries weighted_series =
      sweep(table, weighted, "refugee", "non_refugee", grid);
  const auto at_total = weighted_allocate(
      table, std::get<WeightedPolicy>(weighted), Budget(total));
  require(at_total.unspent > 0.0, "weighted run spends everything");
  require(weighted_series.points.back().rate_s1 < 1.0, "weighted rate reaches 1");
  require(weighted_series.points.back().rate_s2 < 1.0, "weighted rate reaches 1");

  double hier_peak = 0.0;
  for (const auto& point : hier_series.points) {
    hier_peak = std::max(hier_peak, std::abs(point.log_ratio));
  }
  double weighted_peak = 0.0;
  for (const auto& point : weighted_series.points) {
    weighted_peak = std::max(weighted_peak, std::abs(point.log_ratio));
  }
  require(hier_peak > weighted_peak,
          "hierarchical peak " + std::to_string(hier_peak) +
              " does not exceed weighted " + std::to_string(weighted_peak));
}

}  // namespace

int main() {
  criterion("A1 weighted allocation worked example (exact, <1ms)",
            a1_weighted_worked_example);
  criterion("A2 gap and log-ratio worked examples (1e-3)", a2_metric_worked_examples);
  criterion("A3 near-zero denominator divergence (1e-3)", a3_divergence_example);
  criterion("A4 oracle equivalence: 1000 instances exact, Monte Carlo 3SE (<60s)",
            a4_oracle_equivalence);
  criterion("A5 derivative suite vs finite differences (1e-6 relative)",
            a5_derivative_suite);
  criterion("A6 piecewise linearity, breakpoints only at listed budgets (1e-8)",
            a6_piecewise_linearity);
  criterion("A7 hierarchical volatility exceeds 10x weighted; weighted flat (1e-6)",
            a7_volatility_vs_dampening);
  criterion("A8 low-budget ratio limit (1e-6) and exact full-budget parity",
            a8_ratio_limits);
  criterion("A9 bundled dataset: full service vs plateau, peak disparity ordering",
            a9_bundled_dataset_regimes);
  if (failures == 0) {
    std::printf("acceptance: all 9 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", failures);
  return 1;
}
