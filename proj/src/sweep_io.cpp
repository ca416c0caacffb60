#include <cstdio>
#include <ostream>

#include "json.hpp"
#include "scarcity_audit/metrics.hpp"

namespace scarcity_audit {
namespace {

std::string fixed9(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9f", value);
  return buffer;
}

}  // namespace

void write_sweep_csv(std::ostream& out, const SweepSeries& series) {
  out << "B,G_" << series.s1 << ",G_" << series.s2 << ",AD,RD,lnRD,flag\n";
  for (const DisparityPoint& point : series.points) {
    out << fixed9(point.budget) << ',' << fixed9(point.rate_s1) << ','
        << fixed9(point.rate_s2) << ',' << fixed9(point.abs_diff) << ','
        << fixed9(point.ratio) << ',' << fixed9(point.log_ratio) << ','
        << to_string(point.flag) << '\n';
  }
}

std::string sweep_to_json(const SweepSeries& series) {
  nlohmann::ordered_json doc;
  doc["policy"] = to_string(series.kind);
  doc["s1"] = series.s1;
  doc["s2"] = series.s2;
  doc["epsilon"] = series.epsilon;
  doc["breakpoints"] = series.breakpoints;
  if (series.kind == PolicyKind::weighted) {
    nlohmann::ordered_json thresholds = nlohmann::ordered_json::array();
    for (const auto& [label, budget] : series.thresholds) {
      thresholds.push_back({{"category", label}, {"budget", budget}});
    }
    doc["saturation_thresholds"] = std::move(thresholds);
  }
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  const std::string key1 = "G_" + series.s1;
  const std::string key2 = "G_" + series.s2;
  for (const DisparityPoint& point : series.points) {
    nlohmann::ordered_json row;
    row["B"] = point.budget;
    row[key1] = point.rate_s1;
    row[key2] = point.rate_s2;
    row["AD"] = point.abs_diff;
    row["RD"] = point.ratio;
    row["lnRD"] = point.log_ratio;
    row["flag"] = to_string(point.flag);
    if (point.d_rate_s1) row["d" + key1] = *point.d_rate_s1;
    if (point.d_rate_s2) row["d" + key2] = *point.d_rate_s2;
    if (point.d_abs_diff) row["dAD"] = *point.d_abs_diff;
    if (point.d_log_ratio) row["dlnRD"] = *point.d_log_ratio;
    points.push_back(std::move(row));
  }
  doc["points"] = std::move(points);
  return doc.dump(2) + "\n";
}

}  // namespace scarcity_audit
