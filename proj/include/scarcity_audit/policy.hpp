#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "scarcity_audit/population.hpp"

namespace scarcity_audit {

// Non-negative real resource budget; one unit serves one person. Budgets
// beyond the population are allowed and show up as unspent.
class Budget {
 public:
  explicit Budget(double value);
  double value() const { return value_; }

 private:
  double value_;
};

// Strict ranking over category labels, highest priority first. Equal ranks
// are not representable; merge equal-rank categories before building one.
struct HierarchicalPolicy {
  std::vector<std::string> ranking;
};

// Positive weight per category label. Only normalized weights matter:
// scaling all of them by the same factor changes nothing downstream.
struct WeightedPolicy {
  std::vector<std::pair<std::string, double>> weights;
};

using Policy = std::variant<HierarchicalPolicy, WeightedPolicy>;

// JSON: {"kind":"hierarchical","ranking":[...]} or
//       {"kind":"weighted","weights":{"C1":0.7,...}}
Policy load_policy(std::istream& in);

enum class PolicyKind { hierarchical, weighted };
std::string_view to_string(PolicyKind kind);

enum class CategoryStatus { fully_served, cutoff, unserved, saturated, unsaturated };
std::string_view to_string(CategoryStatus status);

struct CategoryAllocation {
  std::size_t category = 0;         // table index
  double probability = 0.0;         // chance an individual in it is served
  double expected_resources = 0.0;  // units directed at the category
  CategoryStatus status = CategoryStatus::unserved;
};

struct AllocationOutcome {
  PolicyKind kind = PolicyKind::hierarchical;
  std::vector<CategoryAllocation> categories;  // table order
  double unspent = 0.0;
  std::optional<std::size_t> cutoff;  // table index of the cutoff category
};

// Rank-sequential allocation: serve whole categories in ranking order; the
// category the budget lands strictly inside splits the remainder uniformly.
AllocationOutcome hierarchical_allocate(const PopulationTable& table,
                                        const HierarchicalPolicy& policy,
                                        Budget budget);

// The category the budget lands strictly inside, if any. Budgets that hit a
// prefix sum exactly, B = 0, and B >= N all have no cutoff.
std::optional<std::size_t> cutoff_category(const PopulationTable& table,
                                           const HierarchicalPolicy& policy,
                                           Budget budget);

// Proportional split by normalized weight with a hard per-category cap:
// share past a category's size stays unspent, never redistributed.
AllocationOutcome weighted_allocate(const PopulationTable& table,
                                    const WeightedPolicy& policy,
                                    Budget budget);

struct SaturationThreshold {
  std::size_t category = 0;  // table index
  double budget = 0.0;       // smallest budget that covers the whole category
};

// Ascending by threshold; ties keep table order.
std::vector<SaturationThreshold> saturation_thresholds(const PopulationTable& table,
                                                       const WeightedPolicy& policy);

// Local sensitivities of a category's receipt probability to size changes,
// with sizes treated as real variables in the closed-form probabilities.
struct CategoryTension {
  std::size_t category = 0;
  double d_prob_d_own_size = 0.0;   // always negative where defined
  double d2_prob_d_own_size = 0.0;  // always positive where defined
  // Hierarchical cutoff only: effect of growing any higher-ranked category.
  std::optional<double> d_prob_d_higher_size;
};

struct TensionReport {
  PolicyKind kind = PolicyKind::hierarchical;
  std::vector<CategoryTension> tense;   // categories under size pressure
  std::vector<std::size_t> unaffected;  // locally insensitive to every size
};

// Hierarchical variant requires a cutoff category (DomainError otherwise).
TensionReport tension_report(const PopulationTable& table,
                             const HierarchicalPolicy& policy, Budget budget);
TensionReport tension_report(const PopulationTable& table,
                             const WeightedPolicy& policy, Budget budget);

// Entry for one category; DomainError naming the category when its partials
// are undefined (fully served, unserved, or saturated).
const CategoryTension& tension_for(const TensionReport& report,
                                   const PopulationTable& table,
                                   std::string_view category);

namespace detail {
// Ranking as table indices; rejects duplicates and missing/unknown labels.
std::vector<std::size_t> ranking_indices(const PopulationTable& table,
                                         const HierarchicalPolicy& policy);
// Weights aligned to table order; rejects non-positive/missing/unknown.
std::vector<double> aligned_weights(const PopulationTable& table,
                                    const WeightedPolicy& policy);
// Smallest budget at which a weighted category is fully covered.
inline double saturation_budget(double size, double weight, double weight_sum) {
  return size * (weight_sum / weight);
}
}  // namespace detail

}  // namespace scarcity_audit
