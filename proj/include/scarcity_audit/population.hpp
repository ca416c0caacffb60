#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace scarcity_audit {

struct PopulationRow {
  std::string category;
  std::string subgroup;
  std::uint64_t count = 0;
};

// Immutable population counts: one cell per (category, subgroup) pair.
// Declaration order of categories and subgroups is preserved. Zero-count
// cells are fine; zero-size categories are rejected (allocation divides by
// category size). Immutable after construction, safe to share across threads.
class PopulationTable {
 public:
  static PopulationTable from_rows(const std::vector<PopulationRow>& rows);

  // CSV with the exact header `category,subgroup,count`; standard quoting.
  static PopulationTable load_csv(std::istream& in);

  std::size_t category_count() const { return categories_.size(); }
  std::size_t subgroup_count() const { return subgroups_.size(); }
  const std::vector<std::string>& categories() const { return categories_; }
  const std::vector<std::string>& subgroups() const { return subgroups_; }

  // Label lookup; ValidationError when unknown.
  std::size_t category_index(std::string_view label) const;
  std::size_t subgroup_index(std::string_view label) const;

  std::uint64_t count(std::size_t category, std::size_t subgroup) const;
  std::uint64_t category_size(std::size_t category) const;
  std::uint64_t subgroup_total(std::size_t subgroup) const;
  std::uint64_t total() const { return total_; }

 private:
  PopulationTable() = default;
  void finalize();

  std::vector<std::string> categories_;
  std::vector<std::string> subgroups_;
  std::vector<std::uint64_t> counts_;  // category-major, K x S
  std::vector<std::uint64_t> category_sizes_;
  std::vector<std::uint64_t> subgroup_totals_;
  std::uint64_t total_ = 0;
};

struct TableStats {
  std::uint64_t total = 0;
  std::size_t category_count = 0;
  std::vector<std::uint64_t> category_sizes;
  std::vector<std::uint64_t> subgroup_totals;
};

TableStats table_stats(const PopulationTable& table);

}  // namespace scarcity_audit
