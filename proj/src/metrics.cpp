#include "scarcity_audit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "scarcity_audit/errors.hpp"
#include "scarcity_audit/parallel.hpp"

namespace scarcity_audit {
namespace {

constexpr const char* kNoCutoffMessage =
    "derivative undefined at breakpoint or outside interior";

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw ValidationError("epsilon must lie strictly between 0 and 1");
  }
}

struct CutoffInfo {
  std::size_t category = 0;
  double size = 0.0;
};

// Cutoff category under the ranking at budget b, if the budget lands
// strictly inside one.
std::optional<CutoffInfo> find_cutoff(const PopulationTable& table,
                                      const std::vector<std::size_t>& order,
                                      double b) {
  std::uint64_t prefix = 0;
  for (const std::size_t c : order) {
    const std::uint64_t next_prefix = prefix + table.category_size(c);
    if (static_cast<double>(prefix) < b && b < static_cast<double>(next_prefix)) {
      return CutoffInfo{c, static_cast<double>(table.category_size(c))};
    }
    prefix = next_prefix;
  }
  return std::nullopt;
}

double checked_subgroup_population(const PopulationTable& table, std::size_t subgroup) {
  const std::uint64_t total = table.subgroup_total(subgroup);
  if (total == 0) {
    throw DomainError("subgroup '" + table.subgroups()[subgroup] +
                      "' has zero population: receipt rate undefined");
  }
  return static_cast<double>(total);
}

// Slope of a subgroup's receipt rate inside the cutoff segment.
double hier_rate_slope(const PopulationTable& table, const CutoffInfo& cutoff,
                       std::size_t subgroup) {
  const double population = checked_subgroup_population(table, subgroup);
  return static_cast<double>(table.count(cutoff.category, subgroup)) /
         (population * cutoff.size);
}

struct WeightedContext {
  std::vector<double> weights;
  double weight_sum = 0.0;
  std::vector<double> thresholds;  // table order
};

WeightedContext weighted_context(const PopulationTable& table,
                                 const WeightedPolicy& policy) {
  WeightedContext ctx;
  ctx.weights = detail::aligned_weights(table, policy);
  for (const double w : ctx.weights) ctx.weight_sum += w;
  ctx.thresholds.reserve(ctx.weights.size());
  for (std::size_t c = 0; c < ctx.weights.size(); ++c) {
    ctx.thresholds.push_back(detail::saturation_budget(
        static_cast<double>(table.category_size(c)), ctx.weights[c], ctx.weight_sum));
  }
  return ctx;
}

bool at_threshold(const WeightedContext& ctx, double b) {
  return std::find(ctx.thresholds.begin(), ctx.thresholds.end(), b) !=
         ctx.thresholds.end();
}

// Slope of a subgroup's weighted receipt rate: unsaturated categories only.
double weighted_rate_slope(const PopulationTable& table, const WeightedContext& ctx,
                           double b, std::size_t subgroup) {
  const double population = checked_subgroup_population(table, subgroup);
  double slope = 0.0;
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    if (b >= ctx.thresholds[c]) continue;
    const double share = ctx.weights[c] / ctx.weight_sum;
    slope += share * static_cast<double>(table.count(c, subgroup)) /
             (static_cast<double>(table.category_size(c)) * population);
  }
  return slope;
}

// Signed slope of |G_s1 - G_s2|. Zero slope-difference is fine even at equal
// rates (the gap is flat, not kinked); a genuine crossing is refused.
double abs_diff_slope(double g1, double g2, double slope1, double slope2) {
  const double diff_slope = slope1 - slope2;
  if (g1 == g2) {
    if (diff_slope == 0.0) return 0.0;
    throw DomainError("sign undefined: receipt rates are equal at this budget");
  }
  return (g1 > g2 ? 1.0 : -1.0) * diff_slope;
}

std::vector<double> build_grid(const GridSpec& spec,
                               const std::vector<double>& breakpoints) {
  if (spec.points < 2) {
    throw ValidationError("grid needs at least 2 points");
  }
  if (!std::isfinite(spec.lo) || !std::isfinite(spec.hi) || spec.lo < 0.0 ||
      !(spec.lo < spec.hi)) {
    throw ValidationError("grid range must satisfy 0 <= lo < hi");
  }
  std::vector<double> grid;
  grid.reserve(spec.points + breakpoints.size());
  const double span = spec.hi - spec.lo;
  for (std::size_t j = 0; j < spec.points; ++j) {
    grid.push_back(j + 1 == spec.points
                       ? spec.hi
                       : spec.lo + (static_cast<double>(j) * span) /
                                       static_cast<double>(spec.points - 1));
  }
  for (const double bp : breakpoints) {
    if (bp >= spec.lo && bp <= spec.hi) grid.push_back(bp);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

bool is_breakpoint(const std::vector<double>& breakpoints, double b) {
  return std::binary_search(breakpoints.begin(), breakpoints.end(), b);
}

template <typename PolicyT>
SweepSeries sweep_impl(const PopulationTable& table, const PolicyT& policy,
                       std::string_view s1, std::string_view s2, const GridSpec& grid,
                       double epsilon) {
  check_epsilon(epsilon);
  const std::size_t idx1 = table.subgroup_index(s1);
  const std::size_t idx2 = table.subgroup_index(s2);
  checked_subgroup_population(table, idx1);
  checked_subgroup_population(table, idx2);

  constexpr bool is_hier = std::is_same_v<PolicyT, HierarchicalPolicy>;
  SweepSeries series;
  series.s1 = std::string(s1);
  series.s2 = std::string(s2);
  series.epsilon = epsilon;
  if constexpr (is_hier) {
    series.kind = PolicyKind::hierarchical;
    series.breakpoints = hierarchical_breakpoints(table, policy);
  } else {
    series.kind = PolicyKind::weighted;
    series.breakpoints = weighted_breakpoints(table, policy);
    for (const auto& threshold : saturation_thresholds(table, policy)) {
      series.thresholds.emplace_back(table.categories()[threshold.category],
                                     threshold.budget);
    }
  }
  const auto budgets = build_grid(grid, series.breakpoints);
  series.points.resize(budgets.size());

  std::vector<std::size_t> order;
  WeightedContext ctx;
  if constexpr (is_hier) {
    order = detail::ranking_indices(table, policy);
  } else {
    ctx = weighted_context(table, policy);
  }

  detail::parallel_for(budgets.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const double b = budgets[p];
      AllocationOutcome outcome = [&] {
        if constexpr (is_hier) return hierarchical_allocate(table, policy, Budget(b));
        else return weighted_allocate(table, policy, Budget(b));
      }();
      DisparityPoint point;
      point.budget = b;
      point.rate_s1 = receipt_rate(table, outcome, idx1);
      point.rate_s2 = receipt_rate(table, outcome, idx2);
      point.abs_diff = absolute_difference(point.rate_s1, point.rate_s2);
      const LogRatio lr = log_ratio_difference(point.rate_s1, point.rate_s2, epsilon);
      point.ratio = lr.ratio;
      point.log_ratio = lr.log_ratio;
      const bool on_breakpoint = is_breakpoint(series.breakpoints, b);
      point.flag = on_breakpoint            ? PointFlag::breakpoint
                   : point.rate_s2 == 0.0   ? PointFlag::eps_dominated
                                            : PointFlag::ok;
      if (!on_breakpoint) {
        if constexpr (is_hier) {
          if (const auto cutoff = find_cutoff(table, order, b)) {
            const double slope1 = hier_rate_slope(table, *cutoff, idx1);
            const double slope2 = hier_rate_slope(table, *cutoff, idx2);
            point.d_rate_s1 = slope1;
            point.d_rate_s2 = slope2;
            if (point.rate_s1 != point.rate_s2 || slope1 == slope2) {
              point.d_abs_diff =
                  abs_diff_slope(point.rate_s1, point.rate_s2, slope1, slope2);
            }
            point.d_log_ratio = slope1 / (point.rate_s1 + epsilon) -
                                slope2 / (point.rate_s2 + epsilon);
          }
        } else {
          const double slope1 = weighted_rate_slope(table, ctx, b, idx1);
          const double slope2 = weighted_rate_slope(table, ctx, b, idx2);
          point.d_rate_s1 = slope1;
          point.d_rate_s2 = slope2;
          if (point.rate_s1 != point.rate_s2 || slope1 == slope2) {
            point.d_abs_diff =
                abs_diff_slope(point.rate_s1, point.rate_s2, slope1, slope2);
          }
          point.d_log_ratio = slope1 / (point.rate_s1 + epsilon) -
                              slope2 / (point.rate_s2 + epsilon);
        }
      }
      series.points[p] = std::move(point);
    }
  });
  return series;
}

}  // namespace

double receipt_rate(const PopulationTable& table, const AllocationOutcome& outcome,
                    std::size_t subgroup) {
  if (subgroup >= table.subgroup_count()) {
    throw ValidationError("subgroup index out of range");
  }
  if (outcome.categories.size() != table.category_count()) {
    throw ValidationError("allocation outcome does not match the table");
  }
  const double population = checked_subgroup_population(table, subgroup);
  double served = 0.0;
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    served += static_cast<double>(table.count(c, subgroup)) *
              outcome.categories[c].probability;
  }
  return served / population;
}

double receipt_rate(const PopulationTable& table, const AllocationOutcome& outcome,
                    std::string_view subgroup) {
  return receipt_rate(table, outcome, table.subgroup_index(subgroup));
}

double absolute_difference(double rate_a, double rate_b) {
  return std::abs(rate_a - rate_b);
}

LogRatio log_ratio_difference(double rate_a, double rate_b, double epsilon) {
  check_epsilon(epsilon);
  LogRatio result;
  result.ratio = (rate_a + epsilon) / (rate_b + epsilon);
  // log(a+eps) - log(b+eps) rather than log of the quotient: swapping the
  // subgroups then negates the value bit-exactly.
  result.log_ratio = std::log(rate_a + epsilon) - std::log(rate_b + epsilon);
  return result;
}

double hierarchical_rate_derivative(const PopulationTable& table,
                                    const HierarchicalPolicy& policy, Budget budget,
                                    std::string_view subgroup) {
  const auto order = detail::ranking_indices(table, policy);
  const auto cutoff = find_cutoff(table, order, budget.value());
  if (!cutoff) throw DomainError(kNoCutoffMessage);
  return hier_rate_slope(table, *cutoff, table.subgroup_index(subgroup));
}

double hierarchical_abs_diff_derivative(const PopulationTable& table,
                                        const HierarchicalPolicy& policy, Budget budget,
                                        std::string_view s1, std::string_view s2) {
  const auto order = detail::ranking_indices(table, policy);
  const auto cutoff = find_cutoff(table, order, budget.value());
  if (!cutoff) throw DomainError(kNoCutoffMessage);
  const std::size_t idx1 = table.subgroup_index(s1);
  const std::size_t idx2 = table.subgroup_index(s2);
  const AllocationOutcome outcome = hierarchical_allocate(table, policy, budget);
  return abs_diff_slope(receipt_rate(table, outcome, idx1),
                        receipt_rate(table, outcome, idx2),
                        hier_rate_slope(table, *cutoff, idx1),
                        hier_rate_slope(table, *cutoff, idx2));
}

LogRatioDerivative hierarchical_log_ratio_derivative(
    const PopulationTable& table, const HierarchicalPolicy& policy, Budget budget,
    std::string_view s1, std::string_view s2, double epsilon) {
  check_epsilon(epsilon);
  const auto order = detail::ranking_indices(table, policy);
  const auto cutoff = find_cutoff(table, order, budget.value());
  if (!cutoff) throw DomainError(kNoCutoffMessage);
  const std::size_t idx1 = table.subgroup_index(s1);
  const std::size_t idx2 = table.subgroup_index(s2);
  const AllocationOutcome outcome = hierarchical_allocate(table, policy, budget);
  const double g1 = receipt_rate(table, outcome, idx1);
  const double g2 = receipt_rate(table, outcome, idx2);
  LogRatioDerivative result;
  result.value = hier_rate_slope(table, *cutoff, idx1) / (g1 + epsilon) -
                 hier_rate_slope(table, *cutoff, idx2) / (g2 + epsilon);
  result.magnitude = std::abs(result.value);
  return result;
}

double weighted_rate_derivative(const PopulationTable& table,
                                const WeightedPolicy& policy, Budget budget,
                                std::string_view subgroup) {
  const auto ctx = weighted_context(table, policy);
  if (at_threshold(ctx, budget.value())) {
    throw DomainError(kNoCutoffMessage);
  }
  return weighted_rate_slope(table, ctx, budget.value(),
                             table.subgroup_index(subgroup));
}

double weighted_abs_diff_derivative(const PopulationTable& table,
                                    const WeightedPolicy& policy, Budget budget,
                                    std::string_view s1, std::string_view s2) {
  const auto ctx = weighted_context(table, policy);
  if (at_threshold(ctx, budget.value())) {
    throw DomainError(kNoCutoffMessage);
  }
  const std::size_t idx1 = table.subgroup_index(s1);
  const std::size_t idx2 = table.subgroup_index(s2);
  const AllocationOutcome outcome = weighted_allocate(table, policy, budget);
  return abs_diff_slope(receipt_rate(table, outcome, idx1),
                        receipt_rate(table, outcome, idx2),
                        weighted_rate_slope(table, ctx, budget.value(), idx1),
                        weighted_rate_slope(table, ctx, budget.value(), idx2));
}

LogRatioDerivative weighted_log_ratio_derivative(
    const PopulationTable& table, const WeightedPolicy& policy, Budget budget,
    std::string_view s1, std::string_view s2, double epsilon) {
  check_epsilon(epsilon);
  const auto ctx = weighted_context(table, policy);
  if (at_threshold(ctx, budget.value())) {
    throw DomainError(kNoCutoffMessage);
  }
  const std::size_t idx1 = table.subgroup_index(s1);
  const std::size_t idx2 = table.subgroup_index(s2);
  const AllocationOutcome outcome = weighted_allocate(table, policy, budget);
  const double g1 = receipt_rate(table, outcome, idx1);
  const double g2 = receipt_rate(table, outcome, idx2);
  LogRatioDerivative result;
  result.value =
      weighted_rate_slope(table, ctx, budget.value(), idx1) / (g1 + epsilon) -
      weighted_rate_slope(table, ctx, budget.value(), idx2) / (g2 + epsilon);
  result.magnitude = std::abs(result.value);
  return result;
}

LogRatio weighted_log_ratio(const PopulationTable& table, const WeightedPolicy& policy,
                            Budget budget, std::string_view s1, std::string_view s2,
                            double epsilon) {
  const AllocationOutcome outcome = weighted_allocate(table, policy, budget);
  return log_ratio_difference(receipt_rate(table, outcome, s1),
                              receipt_rate(table, outcome, s2), epsilon);
}

RatioLimits hierarchical_ratio_limits(const PopulationTable& table,
                                      const HierarchicalPolicy& policy,
                                      std::string_view s1, std::string_view s2) {
  const auto order = detail::ranking_indices(table, policy);
  const std::size_t idx1 = table.subgroup_index(s1);
  const std::size_t idx2 = table.subgroup_index(s2);
  const double population1 = checked_subgroup_population(table, idx1);
  const double population2 = checked_subgroup_population(table, idx2);
  const std::size_t top = order.front();
  const std::uint64_t top_s2 = table.count(top, idx2);
  if (top_s2 == 0) {
    throw DomainError("low-budget ratio limit assumes a positive denominator rate, "
                      "but subgroup '" + std::string(s2) +
                      "' is absent from the top-ranked category");
  }
  RatioLimits limits;
  limits.low_budget = (population2 / population1) *
                      (static_cast<double>(table.count(top, idx1)) /
                       static_cast<double>(top_s2));
  limits.full_budget = 1.0;
  return limits;
}

std::vector<double> hierarchical_breakpoints(const PopulationTable& table,
                                             const HierarchicalPolicy& policy) {
  const auto order = detail::ranking_indices(table, policy);
  std::vector<double> breakpoints;
  breakpoints.reserve(order.size());
  std::uint64_t prefix = 0;
  for (const std::size_t c : order) {
    prefix += table.category_size(c);
    breakpoints.push_back(static_cast<double>(prefix));
  }
  return breakpoints;
}

std::vector<double> weighted_breakpoints(const PopulationTable& table,
                                         const WeightedPolicy& policy) {
  std::vector<double> breakpoints;
  for (const auto& threshold : saturation_thresholds(table, policy)) {
    breakpoints.push_back(threshold.budget);
  }
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                    breakpoints.end());
  return breakpoints;
}

std::string_view to_string(PointFlag flag) {
  switch (flag) {
    case PointFlag::ok: return "ok";
    case PointFlag::breakpoint: return "breakpoint";
    case PointFlag::eps_dominated: return "eps_dominated";
  }
  return "unknown";
}

SweepSeries sweep(const PopulationTable& table, const HierarchicalPolicy& policy,
                  std::string_view s1, std::string_view s2, const GridSpec& grid,
                  double epsilon) {
  return sweep_impl(table, policy, s1, s2, grid, epsilon);
}

SweepSeries sweep(const PopulationTable& table, const WeightedPolicy& policy,
                  std::string_view s1, std::string_view s2, const GridSpec& grid,
                  double epsilon) {
  return sweep_impl(table, policy, s1, s2, grid, epsilon);
}

SweepSeries sweep(const PopulationTable& table, const Policy& policy,
                  std::string_view s1, std::string_view s2, const GridSpec& grid,
                  double epsilon) {
  return std::visit(
      [&](const auto& concrete) { return sweep_impl(table, concrete, s1, s2, grid, epsilon); },
      policy);
}

}  // namespace scarcity_audit
