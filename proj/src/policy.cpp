#include "scarcity_audit/policy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "scarcity_audit/errors.hpp"

namespace scarcity_audit {

Budget::Budget(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0) {
    throw ValidationError("budget must be a non-negative finite number");
  }
}

std::string_view to_string(PolicyKind kind) {
  return kind == PolicyKind::hierarchical ? "hierarchical" : "weighted";
}

std::string_view to_string(CategoryStatus status) {
  switch (status) {
    case CategoryStatus::fully_served: return "fully_served";
    case CategoryStatus::cutoff: return "cutoff";
    case CategoryStatus::unserved: return "unserved";
    case CategoryStatus::saturated: return "saturated";
    case CategoryStatus::unsaturated: return "unsaturated";
  }
  return "unknown";
}

namespace detail {

std::vector<std::size_t> ranking_indices(const PopulationTable& table,
                                         const HierarchicalPolicy& policy) {
  if (policy.ranking.size() != table.category_count()) {
    throw ValidationError("ranking must list every category exactly once (" +
                          std::to_string(table.category_count()) + " categories, " +
                          std::to_string(policy.ranking.size()) + " ranked)");
  }
  std::vector<std::size_t> order;
  order.reserve(policy.ranking.size());
  std::unordered_set<std::size_t> seen;
  for (const auto& label : policy.ranking) {
    const std::size_t idx = table.category_index(label);
    if (!seen.insert(idx).second) {
      throw ValidationError("category '" + label +
                            "' appears twice in the ranking; merge equal-rank "
                            "categories into one before ranking");
    }
    order.push_back(idx);
  }
  return order;
}

std::vector<double> aligned_weights(const PopulationTable& table,
                                    const WeightedPolicy& policy) {
  std::vector<double> weights(table.category_count(), 0.0);
  std::unordered_set<std::size_t> assigned;
  for (const auto& [label, weight] : policy.weights) {
    const std::size_t idx = table.category_index(label);
    if (!assigned.insert(idx).second) {
      throw ValidationError("duplicate weight for category '" + label + "'");
    }
    if (!std::isfinite(weight) || weight <= 0.0) {
      throw ValidationError("weight for category '" + label +
                            "' must be a positive real");
    }
    weights[idx] = weight;
  }
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    if (assigned.find(c) == assigned.end()) {
      throw ValidationError("missing weight for category '" + table.categories()[c] +
                            "'");
    }
  }
  double sum = 0.0;
  for (const double w : weights) sum += w;
  double normalized_sum = 0.0;
  for (const double w : weights) normalized_sum += w / sum;
  if (std::abs(normalized_sum - 1.0) > 1e-12) {
    throw ValidationError("weights are too extreme to normalize reliably");
  }
  return weights;
}

}  // namespace detail

Policy load_policy(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("policy file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    throw ValidationError("policy JSON must be an object with a string 'kind' field");
  }
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "hierarchical") {
    if (!doc.contains("ranking") || !doc["ranking"].is_array()) {
      throw ValidationError("hierarchical policy needs a 'ranking' array");
    }
    HierarchicalPolicy policy;
    for (const auto& item : doc["ranking"]) {
      if (!item.is_string() || item.get<std::string>().empty()) {
        throw ValidationError("ranking entries must be non-empty category labels");
      }
      policy.ranking.push_back(item.get<std::string>());
    }
    if (policy.ranking.empty()) {
      throw ValidationError("ranking must not be empty");
    }
    return policy;
  }
  if (kind == "weighted") {
    if (!doc.contains("weights") || !doc["weights"].is_object()) {
      throw ValidationError("weighted policy needs a 'weights' object");
    }
    WeightedPolicy policy;
    for (const auto& [label, value] : doc["weights"].items()) {
      if (!value.is_number()) {
        throw ValidationError("weight for '" + label + "' must be a number");
      }
      policy.weights.emplace_back(label, value.get<double>());
    }
    if (policy.weights.empty()) {
      throw ValidationError("weights must not be empty");
    }
    return policy;
  }
  throw ValidationError("unknown policy kind '" + kind +
                        "' (expected 'hierarchical' or 'weighted')");
}

AllocationOutcome hierarchical_allocate(const PopulationTable& table,
                                        const HierarchicalPolicy& policy,
                                        Budget budget) {
  const auto order = detail::ranking_indices(table, policy);
  const double b = budget.value();
  AllocationOutcome out;
  out.kind = PolicyKind::hierarchical;
  out.categories.resize(table.category_count());
  std::uint64_t prefix = 0;
  for (const std::size_t c : order) {
    const std::uint64_t size = table.category_size(c);
    const std::uint64_t next_prefix = prefix + size;
    CategoryAllocation a;
    a.category = c;
    // Case selection compares the real budget against exact integer prefix
    // sums; no tolerance, so it is deterministic.
    if (static_cast<double>(next_prefix) <= b) {
      a.probability = 1.0;
      a.status = CategoryStatus::fully_served;
    } else if (static_cast<double>(prefix) < b) {
      a.probability = (b - static_cast<double>(prefix)) / static_cast<double>(size);
      a.status = CategoryStatus::cutoff;
      out.cutoff = c;
    } else {
      a.probability = 0.0;
      a.status = CategoryStatus::unserved;
    }
    a.expected_resources = a.probability * static_cast<double>(size);
    out.categories[c] = a;
    prefix = next_prefix;
  }
  out.unspent = std::max(0.0, b - static_cast<double>(table.total()));
  return out;
}

std::optional<std::size_t> cutoff_category(const PopulationTable& table,
                                           const HierarchicalPolicy& policy,
                                           Budget budget) {
  return hierarchical_allocate(table, policy, budget).cutoff;
}

AllocationOutcome weighted_allocate(const PopulationTable& table,
                                    const WeightedPolicy& policy, Budget budget) {
  const auto weights = detail::aligned_weights(table, policy);
  double weight_sum = 0.0;
  for (const double w : weights) weight_sum += w;
  const double b = budget.value();
  AllocationOutcome out;
  out.kind = PolicyKind::weighted;
  out.categories.resize(table.category_count());
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    const double size = static_cast<double>(table.category_size(c));
    const double share = weights[c] / weight_sum;
    const double resources = share * b;
    CategoryAllocation a;
    a.category = c;
    a.expected_resources = resources;
    // Saturation is classified against the same threshold expression used by
    // saturation_thresholds, so P hits 1 exactly at B >= B_sat even when the
    // share arithmetic rounds a hair below the category size.
    if (b >= detail::saturation_budget(size, weights[c], weight_sum)) {
      a.probability = 1.0;
      a.status = CategoryStatus::saturated;
      out.unspent += std::max(0.0, resources - size);
    } else {
      a.probability = std::min(1.0, resources / size);
      a.status = CategoryStatus::unsaturated;
    }
    out.categories[c] = a;
  }
  return out;
}

std::vector<SaturationThreshold> saturation_thresholds(const PopulationTable& table,
                                                       const WeightedPolicy& policy) {
  const auto weights = detail::aligned_weights(table, policy);
  double weight_sum = 0.0;
  for (const double w : weights) weight_sum += w;
  std::vector<SaturationThreshold> thresholds;
  thresholds.reserve(table.category_count());
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    thresholds.push_back(
        {c, detail::saturation_budget(static_cast<double>(table.category_size(c)),
                                      weights[c], weight_sum)});
  }
  std::stable_sort(thresholds.begin(), thresholds.end(),
                   [](const SaturationThreshold& a, const SaturationThreshold& b) {
                     return a.budget < b.budget;
                   });
  return thresholds;
}

TensionReport tension_report(const PopulationTable& table,
                             const HierarchicalPolicy& policy, Budget budget) {
  const AllocationOutcome outcome = hierarchical_allocate(table, policy, budget);
  if (!outcome.cutoff) {
    throw DomainError("no cutoff category at budget " +
                      std::to_string(budget.value()) +
                      ": size-sensitivity partials are undefined at breakpoints "
                      "and outside the interior");
  }
  TensionReport report;
  report.kind = PolicyKind::hierarchical;
  const std::size_t m = *outcome.cutoff;
  const double size = static_cast<double>(table.category_size(m));
  const double remaining = outcome.categories[m].probability * size;
  CategoryTension tension;
  tension.category = m;
  tension.d_prob_d_own_size = -remaining / (size * size);
  tension.d2_prob_d_own_size = 2.0 * remaining / (size * size * size);
  tension.d_prob_d_higher_size = -1.0 / size;
  report.tense.push_back(tension);
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    if (c != m) report.unaffected.push_back(c);
  }
  return report;
}

TensionReport tension_report(const PopulationTable& table,
                             const WeightedPolicy& policy, Budget budget) {
  const auto weights = detail::aligned_weights(table, policy);
  double weight_sum = 0.0;
  for (const double w : weights) weight_sum += w;
  const double b = budget.value();
  TensionReport report;
  report.kind = PolicyKind::weighted;
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    const double size = static_cast<double>(table.category_size(c));
    if (b >= detail::saturation_budget(size, weights[c], weight_sum)) {
      report.unaffected.push_back(c);
      continue;
    }
    CategoryTension tension;
    tension.category = c;
    tension.d_prob_d_own_size = -(weights[c] * b) / (size * size * weight_sum);
    tension.d2_prob_d_own_size = 2.0 * weights[c] * b / (size * size * size * weight_sum);
    report.tense.push_back(tension);
  }
  return report;
}

const CategoryTension& tension_for(const TensionReport& report,
                                   const PopulationTable& table,
                                   std::string_view category) {
  const std::size_t idx = table.category_index(category);
  for (const auto& tension : report.tense) {
    if (tension.category == idx) return tension;
  }
  throw DomainError("size-sensitivity partials are undefined for category '" +
                    std::string(category) +
                    "': its receipt probability is locally constant");
}

}  // namespace scarcity_audit
