#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "scarcity_audit/errors.hpp"
#include "scarcity_audit/metrics.hpp"
#include "scarcity_audit/oracle.hpp"

namespace scarcity_audit::cli {
namespace {

using nlohmann::ordered_json;

PopulationTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw IoError("cannot open population file '" + path + "'");
  }
  return PopulationTable::load_csv(in);
}

Policy load_policy_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw IoError("cannot open policy file '" + path + "'");
  }
  return load_policy(in);
}

std::pair<std::string, std::string> parse_pair(const std::string& text) {
  const std::size_t comma = text.find(',');
  if (comma == std::string::npos || comma == 0 || comma + 1 == text.size()) {
    throw ValidationError("--pair must be 's1,s2'");
  }
  return {text.substr(0, comma), text.substr(comma + 1)};
}

GridSpec parse_grid(const std::string& text) {
  std::istringstream in(text);
  std::string lo_text;
  std::string hi_text;
  std::string points_text;
  if (!std::getline(in, lo_text, ':') || !std::getline(in, hi_text, ':') ||
      !std::getline(in, points_text) || lo_text.empty() || hi_text.empty() ||
      points_text.empty()) {
    throw ValidationError("--grid must be 'lo:hi:points'");
  }
  GridSpec spec;
  try {
    std::size_t used = 0;
    spec.lo = std::stod(lo_text, &used);
    if (used != lo_text.size()) throw std::invalid_argument(lo_text);
    spec.hi = std::stod(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument(hi_text);
    const long long points = std::stoll(points_text, &used);
    if (used != points_text.size() || points < 0) {
      throw std::invalid_argument(points_text);
    }
    spec.points = static_cast<std::size_t>(points);
  } catch (const std::exception&) {
    throw ValidationError("--grid must be 'lo:hi:points' with numeric fields");
  }
  return spec;
}

GridSpec resolve_grid(const RunConfig& config, const PopulationTable& table) {
  if (config.grid) return parse_grid(*config.grid);
  GridSpec spec;
  spec.lo = 0.0;
  spec.hi = static_cast<double>(table.total());
  spec.points = 201;
  return spec;
}

void check_epsilon_flag(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
    throw ValidationError("--epsilon must lie strictly between 0 and 1");
  }
}

std::string resolve_format(const RunConfig& config, const std::string& fallback,
                           bool csv_allowed) {
  const std::string format = config.format.empty() ? fallback : config.format;
  if (format != "csv" && format != "json") {
    throw ValidationError("--format must be 'csv' or 'json'");
  }
  if (format == "csv" && !csv_allowed) {
    throw ValidationError("csv output is only available for the sweep command");
  }
  return format;
}

void emit(const RunConfig& config, const std::string& body) {
  if (config.out_path.empty()) {
    std::cout << body;
    return;
  }
  std::ofstream out(config.out_path);
  if (!out.is_open()) {
    throw IoError("cannot open output file '" + config.out_path + "'");
  }
  out << body;
}

ordered_json outcome_to_json(const PopulationTable& table,
                             const AllocationOutcome& outcome) {
  ordered_json doc;
  doc["policy"] = to_string(outcome.kind);
  ordered_json categories = ordered_json::array();
  for (const CategoryAllocation& allocation : outcome.categories) {
    categories.push_back({{"category", table.categories()[allocation.category]},
                          {"probability", allocation.probability},
                          {"expected_resources", allocation.expected_resources},
                          {"status", to_string(allocation.status)}});
  }
  doc["categories"] = std::move(categories);
  doc["cutoff"] = outcome.cutoff
                      ? ordered_json(table.categories()[*outcome.cutoff])
                      : ordered_json(nullptr);
  doc["unspent"] = outcome.unspent;
  return doc;
}

AllocationOutcome allocate_any(const PopulationTable& table, const Policy& policy,
                               Budget budget) {
  return std::visit(
      [&](const auto& concrete) {
        using T = std::decay_t<decltype(concrete)>;
        if constexpr (std::is_same_v<T, HierarchicalPolicy>) {
          return hierarchical_allocate(table, concrete, budget);
        } else {
          return weighted_allocate(table, concrete, budget);
        }
      },
      policy);
}

}  // namespace

int cmd_allocate(const RunConfig& config) {
  check_epsilon_flag(config.epsilon);
  resolve_format(config, "json", false);
  const PopulationTable table = load_table(config.population_path);
  const Policy policy = load_policy_file(config.policy_path);
  if (!config.budget) throw ValidationError("--budget is required");
  const Budget budget(*config.budget);
  const AllocationOutcome outcome = allocate_any(table, policy, budget);

  ordered_json doc = outcome_to_json(table, outcome);
  doc["budget"] = budget.value();
  ordered_json rates;
  if (config.pair) {
    const auto [s1, s2] = parse_pair(*config.pair);
    rates[s1] = receipt_rate(table, outcome, s1);
    rates[s2] = receipt_rate(table, outcome, s2);
  } else {
    for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
      if (table.subgroup_total(s) == 0) continue;  // no rate to report
      rates[table.subgroups()[s]] = receipt_rate(table, outcome, s);
    }
  }
  doc["receipt_rates"] = std::move(rates);
  emit(config, doc.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const RunConfig& config) {
  check_epsilon_flag(config.epsilon);
  const std::string format = resolve_format(config, "csv", true);
  const PopulationTable table = load_table(config.population_path);
  const Policy policy = load_policy_file(config.policy_path);
  if (!config.pair) throw ValidationError("--pair is required");
  const auto [s1, s2] = parse_pair(*config.pair);
  const GridSpec grid = resolve_grid(config, table);
  const SweepSeries series = sweep(table, policy, s1, s2, grid, config.epsilon);

  std::string body;
  if (format == "csv") {
    std::ostringstream out;
    write_sweep_csv(out, series);
    body = out.str();
  } else {
    body = sweep_to_json(series);
  }
  emit(config, body);

  // Summary goes to stdout when the series went to a file, stderr otherwise.
  std::ostream& summary = config.out_path.empty() ? std::cerr : std::cout;
  summary << "points: " << series.points.size() << "\n";
  summary << "breakpoints:";
  for (const double bp : series.breakpoints) summary << ' ' << bp;
  summary << "\n";
  if (!series.thresholds.empty()) {
    summary << "saturation thresholds:";
    for (const auto& [label, value] : series.thresholds) {
      summary << ' ' << label << '=' << value;
    }
    summary << "\n";
  }
  return 0;
}

namespace {

constexpr const char* kAtBreakpoint = "undefined_at_breakpoint";
constexpr const char* kEqualRates = "undefined_equal_rates";

ordered_json tension_to_json(const PopulationTable& table,
                             const TensionReport& report) {
  ordered_json doc;
  ordered_json tense = ordered_json::array();
  for (const CategoryTension& tension : report.tense) {
    ordered_json row;
    row["category"] = table.categories()[tension.category];
    row["d_prob_d_own_size"] = tension.d_prob_d_own_size;
    row["d2_prob_d_own_size"] = tension.d2_prob_d_own_size;
    if (tension.d_prob_d_higher_size) {
      row["d_prob_d_higher_size"] = *tension.d_prob_d_higher_size;
    }
    tense.push_back(std::move(row));
  }
  doc["tense"] = std::move(tense);
  ordered_json unaffected = ordered_json::array();
  for (const std::size_t c : report.unaffected) {
    unaffected.push_back(table.categories()[c]);
  }
  doc["unaffected"] = std::move(unaffected);
  return doc;
}

// Enclosing open segment (lo, hi) around b given sorted breakpoints; hi is
// +inf past the last breakpoint.
std::pair<double, double> enclosing_segment(const std::vector<double>& breakpoints,
                                            double b) {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (const double bp : breakpoints) {
    if (bp < b) lo = bp;
    if (bp > b) {
      hi = bp;
      break;
    }
  }
  return {lo, hi};
}

}  // namespace

int cmd_diagnose(const RunConfig& config) {
  check_epsilon_flag(config.epsilon);
  resolve_format(config, "json", false);
  const PopulationTable table = load_table(config.population_path);
  const Policy policy = load_policy_file(config.policy_path);
  if (!config.budget) throw ValidationError("--budget is required");
  if (!config.pair) throw ValidationError("--pair is required");
  const Budget budget(*config.budget);
  const double b = budget.value();
  const auto [s1, s2] = parse_pair(*config.pair);
  const double epsilon = config.epsilon;
  const bool hierarchical = std::holds_alternative<HierarchicalPolicy>(policy);

  const AllocationOutcome outcome = allocate_any(table, policy, budget);
  const double g1 = receipt_rate(table, outcome, s1);
  const double g2 = receipt_rate(table, outcome, s2);
  const LogRatio lr = log_ratio_difference(g1, g2, epsilon);

  ordered_json doc;
  doc["policy"] = to_string(outcome.kind);
  doc["budget"] = b;
  doc["pair"] = {s1, s2};
  doc["epsilon"] = epsilon;
  doc["receipt_rates"] = {{s1, g1}, {s2, g2}};
  doc["metrics"] = {{"AD", absolute_difference(g1, g2)},
                    {"RD", lr.ratio},
                    {"lnRD", lr.log_ratio}};

  const std::vector<double> breakpoints =
      hierarchical
          ? hierarchical_breakpoints(table, std::get<HierarchicalPolicy>(policy))
          : weighted_breakpoints(table, std::get<WeightedPolicy>(policy));
  const bool on_breakpoint =
      std::find(breakpoints.begin(), breakpoints.end(), b) != breakpoints.end();
  const bool derivatives_defined =
      hierarchical ? outcome.cutoff.has_value() : !on_breakpoint;

  // Tension partials.
  if (derivatives_defined) {
    doc["tension"] = std::visit(
        [&](const auto& concrete) {
          return tension_to_json(table, tension_report(table, concrete, budget));
        },
        policy);
  } else if (!hierarchical) {
    doc["tension"] = tension_to_json(
        table, tension_report(table, std::get<WeightedPolicy>(policy), budget));
  } else {
    doc["tension"] = kAtBreakpoint;
  }

  // Analytic derivatives of the disparity metrics.
  ordered_json derivatives;
  if (!derivatives_defined) {
    derivatives["d_rate_s1"] = kAtBreakpoint;
    derivatives["d_rate_s2"] = kAtBreakpoint;
    derivatives["d_abs_diff"] = kAtBreakpoint;
    derivatives["d_log_ratio"] = kAtBreakpoint;
    derivatives["d_log_ratio_magnitude"] = kAtBreakpoint;
  } else if (hierarchical) {
    const auto& hp = std::get<HierarchicalPolicy>(policy);
    derivatives["d_rate_s1"] = hierarchical_rate_derivative(table, hp, budget, s1);
    derivatives["d_rate_s2"] = hierarchical_rate_derivative(table, hp, budget, s2);
    try {
      derivatives["d_abs_diff"] =
          hierarchical_abs_diff_derivative(table, hp, budget, s1, s2);
    } catch (const DomainError&) {
      derivatives["d_abs_diff"] = kEqualRates;
    }
    const LogRatioDerivative d =
        hierarchical_log_ratio_derivative(table, hp, budget, s1, s2, epsilon);
    derivatives["d_log_ratio"] = d.value;
    derivatives["d_log_ratio_magnitude"] = d.magnitude;
  } else {
    const auto& wp = std::get<WeightedPolicy>(policy);
    derivatives["d_rate_s1"] = weighted_rate_derivative(table, wp, budget, s1);
    derivatives["d_rate_s2"] = weighted_rate_derivative(table, wp, budget, s2);
    try {
      derivatives["d_abs_diff"] =
          weighted_abs_diff_derivative(table, wp, budget, s1, s2);
    } catch (const DomainError&) {
      derivatives["d_abs_diff"] = kEqualRates;
    }
    const LogRatioDerivative d =
        weighted_log_ratio_derivative(table, wp, budget, s1, s2, epsilon);
    derivatives["d_log_ratio"] = d.value;
    derivatives["d_log_ratio_magnitude"] = d.magnitude;
  }
  doc["derivatives"] = std::move(derivatives);

  // Central-difference counterparts inside the enclosing segment.
  ordered_json fd;
  const auto [seg_lo, seg_hi] = enclosing_segment(breakpoints, b);
  const double step = 1e-4 * std::max(1.0, b);
  const bool fd_ok = derivatives_defined && b - step > seg_lo && b + step < seg_hi;
  if (!fd_ok) {
    fd["d_rate_s1"] = kAtBreakpoint;
    fd["d_rate_s2"] = kAtBreakpoint;
    fd["d_abs_diff"] = kAtBreakpoint;
    fd["d_log_ratio"] = kAtBreakpoint;
  } else {
    const auto rate_at = [&](std::string_view subgroup) {
      return std::function<double(double)>([&, subgroup](double x) {
        return receipt_rate(table, allocate_any(table, policy, Budget(x)), subgroup);
      });
    };
    const std::function<double(double)> ad_at = [&](double x) {
      const AllocationOutcome o = allocate_any(table, policy, Budget(x));
      return absolute_difference(receipt_rate(table, o, s1),
                                 receipt_rate(table, o, s2));
    };
    const std::function<double(double)> lnrd_at = [&](double x) {
      const AllocationOutcome o = allocate_any(table, policy, Budget(x));
      return log_ratio_difference(receipt_rate(table, o, s1),
                                  receipt_rate(table, o, s2), epsilon)
          .log_ratio;
    };
    fd["d_rate_s1"] = finite_difference(rate_at(s1), b, step, seg_lo, seg_hi);
    fd["d_rate_s2"] = finite_difference(rate_at(s2), b, step, seg_lo, seg_hi);
    if (g1 == g2) {
      fd["d_abs_diff"] = kEqualRates;
    } else {
      fd["d_abs_diff"] = finite_difference(ad_at, b, step, seg_lo, seg_hi);
    }
    fd["d_log_ratio"] = finite_difference(lnrd_at, b, step, seg_lo, seg_hi);
  }
  doc["finite_difference"] = std::move(fd);

  if (hierarchical) {
    const auto& hp = std::get<HierarchicalPolicy>(policy);
    ordered_json limits;
    try {
      const RatioLimits l = hierarchical_ratio_limits(table, hp, s1, s2);
      limits["low_budget_ratio"] = l.low_budget;
      limits["low_budget_log_ratio"] = std::log(l.low_budget);
      limits["full_budget_ratio"] = l.full_budget;
    } catch (const DomainError&) {
      limits = "undefined_zero_denominator_rate";
    }
    doc["ratio_limits"] = std::move(limits);
  } else {
    ordered_json thresholds = ordered_json::array();
    for (const auto& threshold :
         saturation_thresholds(table, std::get<WeightedPolicy>(policy))) {
      thresholds.push_back({{"category", table.categories()[threshold.category]},
                            {"budget", threshold.budget}});
    }
    doc["saturation_thresholds"] = std::move(thresholds);
  }

  // Volatility scan over a caller-given range: max |d lnRD / dB| plus the
  // observed spread of lnRD itself (its flatness).
  if (config.grid) {
    const GridSpec scan = parse_grid(*config.grid);
    if (scan.points < 2) throw ValidationError("scan grid needs at least 2 points");
    double max_magnitude = 0.0;
    double argmax = scan.lo;
    std::size_t sampled = 0;
    double min_lnrd = std::numeric_limits<double>::infinity();
    double max_lnrd = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < scan.points; ++j) {
      const double x =
          j + 1 == scan.points
              ? scan.hi
              : scan.lo + (static_cast<double>(j) * (scan.hi - scan.lo)) /
                              static_cast<double>(scan.points - 1);
      const AllocationOutcome at_x = allocate_any(table, policy, Budget(x));
      const double lnrd =
          log_ratio_difference(receipt_rate(table, at_x, s1),
                               receipt_rate(table, at_x, s2), epsilon)
              .log_ratio;
      min_lnrd = std::min(min_lnrd, lnrd);
      max_lnrd = std::max(max_lnrd, lnrd);
      try {
        const double magnitude =
            hierarchical
                ? hierarchical_log_ratio_derivative(
                      table, std::get<HierarchicalPolicy>(policy), Budget(x), s1, s2,
                      epsilon)
                      .magnitude
                : weighted_log_ratio_derivative(table,
                                                std::get<WeightedPolicy>(policy),
                                                Budget(x), s1, s2, epsilon)
                      .magnitude;
        ++sampled;
        if (magnitude > max_magnitude) {
          max_magnitude = magnitude;
          argmax = x;
        }
      } catch (const DomainError&) {
        // breakpoint or exterior sample: skip
      }
    }
    doc["scan"] = {{"lo", scan.lo},
                   {"hi", scan.hi},
                   {"points", scan.points},
                   {"sampled", sampled},
                   {"log_ratio_spread", max_lnrd - min_lnrd}};
    if (sampled > 0) {
      doc["scan"]["max_log_ratio_derivative_magnitude"] = max_magnitude;
      doc["scan"]["argmax_budget"] = argmax;
    }
  }

  emit(config, doc.dump(2) + "\n");
  return 0;
}

int cmd_oracle(const RunConfig& config) {
  resolve_format(config, "json", false);
  const PopulationTable table = load_table(config.population_path);
  const Policy policy = load_policy_file(config.policy_path);
  if (!config.budget) throw ValidationError("--budget is required");
  const Budget budget(*config.budget);
  if (config.trials == 0) throw ValidationError("trials must be at least 1");

  const AllocationOutcome outcome = allocate_any(table, policy, budget);
  const EmpiricalRates empirical =
      simulate(table, policy, budget, {config.trials, config.seed});

  ordered_json doc;
  doc["policy"] = to_string(outcome.kind);
  doc["budget"] = budget.value();
  doc["trials"] = empirical.trials;
  doc["seed"] = empirical.seed;
  bool all_pass = true;
  ordered_json subgroups = ordered_json::array();
  for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
    const SubgroupEstimate& estimate = empirical.rates[s];
    const double analytic = receipt_rate(table, outcome, s) + config.perturb;
    ordered_json row;
    row["subgroup"] = estimate.subgroup;
    row["analytic"] = analytic;
    row["mean"] = estimate.mean;
    row["stderr"] = estimate.std_error;
    bool pass = false;
    if (estimate.std_error > 0.0) {
      const double z = (estimate.mean - analytic) / estimate.std_error;
      row["z"] = z;
      pass = std::abs(z) <= 3.0;
    } else {
      row["z"] = nullptr;
      pass = estimate.mean == analytic;
    }
    row["pass"] = pass;
    all_pass = all_pass && pass;
    subgroups.push_back(std::move(row));
  }
  doc["subgroups"] = std::move(subgroups);
  doc["all_pass"] = all_pass;
  emit(config, doc.dump(2) + "\n");
  if (!all_pass) {
    std::cerr << "oracle: empirical rates disagree with analytic rates beyond 3 "
                 "standard errors\n";
    return 3;
  }
  return 0;
}

}  // namespace scarcity_audit::cli
