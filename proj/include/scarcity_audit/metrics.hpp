#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scarcity_audit/policy.hpp"
#include "scarcity_audit/population.hpp"

namespace scarcity_audit {

inline constexpr double kDefaultEpsilon = 1e-9;

// Expected fraction of a subgroup that is served: sum_i n_{i,s} P_i / N_s.
double receipt_rate(const PopulationTable& table, const AllocationOutcome& outcome,
                    std::size_t subgroup);
double receipt_rate(const PopulationTable& table, const AllocationOutcome& outcome,
                    std::string_view subgroup);

double absolute_difference(double rate_a, double rate_b);

struct LogRatio {
  double ratio = 1.0;      // (a + eps) / (b + eps)
  double log_ratio = 0.0;  // log(a+eps) - log(b+eps); swapping negates exactly
};
LogRatio log_ratio_difference(double rate_a, double rate_b,
                              double epsilon = kDefaultEpsilon);

// Budget-derivatives of the metrics above. All of them refuse (DomainError)
// at breakpoints rather than return one-sided values.
double hierarchical_rate_derivative(const PopulationTable& table,
                                    const HierarchicalPolicy& policy, Budget budget,
                                    std::string_view subgroup);

double hierarchical_abs_diff_derivative(const PopulationTable& table,
                                        const HierarchicalPolicy& policy, Budget budget,
                                        std::string_view s1, std::string_view s2);

struct LogRatioDerivative {
  double value = 0.0;
  double magnitude = 0.0;
};
LogRatioDerivative hierarchical_log_ratio_derivative(
    const PopulationTable& table, const HierarchicalPolicy& policy, Budget budget,
    std::string_view s1, std::string_view s2, double epsilon = kDefaultEpsilon);

double weighted_rate_derivative(const PopulationTable& table,
                                const WeightedPolicy& policy, Budget budget,
                                std::string_view subgroup);

double weighted_abs_diff_derivative(const PopulationTable& table,
                                    const WeightedPolicy& policy, Budget budget,
                                    std::string_view s1, std::string_view s2);

LogRatioDerivative weighted_log_ratio_derivative(
    const PopulationTable& table, const WeightedPolicy& policy, Budget budget,
    std::string_view s1, std::string_view s2, double epsilon = kDefaultEpsilon);

LogRatio weighted_log_ratio(const PopulationTable& table, const WeightedPolicy& policy,
                            Budget budget, std::string_view s1, std::string_view s2,
                            double epsilon = kDefaultEpsilon);

// Closed-form ratio limits under the hierarchical rule: the constant ratio
// while only the top-ranked category is served, and the full-budget parity.
struct RatioLimits {
  double low_budget = 1.0;
  double full_budget = 1.0;
};
RatioLimits hierarchical_ratio_limits(const PopulationTable& table,
                                      const HierarchicalPolicy& policy,
                                      std::string_view s1, std::string_view s2);

// Budgets where the piecewise-linear metrics change slope.
std::vector<double> hierarchical_breakpoints(const PopulationTable& table,
                                             const HierarchicalPolicy& policy);
std::vector<double> weighted_breakpoints(const PopulationTable& table,
                                         const WeightedPolicy& policy);

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 201;
};

enum class PointFlag { ok, breakpoint, eps_dominated };
std::string_view to_string(PointFlag flag);

struct DisparityPoint {
  double budget = 0.0;
  double rate_s1 = 0.0;
  double rate_s2 = 0.0;
  double abs_diff = 0.0;
  double ratio = 1.0;
  double log_ratio = 0.0;
  PointFlag flag = PointFlag::ok;
  // Derivative diagnostics, attached at interior points where defined.
  std::optional<double> d_rate_s1;
  std::optional<double> d_rate_s2;
  std::optional<double> d_abs_diff;
  std::optional<double> d_log_ratio;
};

struct SweepSeries {
  PolicyKind kind = PolicyKind::hierarchical;
  std::string s1;
  std::string s2;
  double epsilon = kDefaultEpsilon;
  std::vector<double> breakpoints;  // full policy breakpoint list
  std::vector<std::pair<std::string, double>> thresholds;  // weighted only
  std::vector<DisparityPoint> points;  // strictly increasing budgets
};

// Uniform grid over [lo, hi] plus exact insertion of every breakpoint in
// range; duplicates removed by exact comparison.
SweepSeries sweep(const PopulationTable& table, const HierarchicalPolicy& policy,
                  std::string_view s1, std::string_view s2, const GridSpec& grid,
                  double epsilon = kDefaultEpsilon);
SweepSeries sweep(const PopulationTable& table, const WeightedPolicy& policy,
                  std::string_view s1, std::string_view s2, const GridSpec& grid,
                  double epsilon = kDefaultEpsilon);
SweepSeries sweep(const PopulationTable& table, const Policy& policy,
                  std::string_view s1, std::string_view s2, const GridSpec& grid,
                  double epsilon = kDefaultEpsilon);

// CSV: header B,G_<s1>,G_<s2>,AD,RD,lnRD,flag; floats with 9 decimals.
void write_sweep_csv(std::ostream& out, const SweepSeries& series);
// JSON mirror of the columns plus breakpoint/threshold arrays.
std::string sweep_to_json(const SweepSeries& series);

}  // namespace scarcity_audit
