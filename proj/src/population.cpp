#include "scarcity_audit/population.hpp"

#include <charconv>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include "scarcity_audit/errors.hpp"

namespace scarcity_audit {
namespace {

// Totals beyond 2^53 would lose exactness once cast to double.
constexpr std::uint64_t kMaxTotal = std::uint64_t{1} << 53;

std::string line_prefix(std::size_t line_no) {
  return "line " + std::to_string(line_no) + ": ";
}

// One CSV record. Supports standard double-quote quoting with "" escapes;
// embedded newlines inside quotes are not supported.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  std::size_t i = 0;
  const std::size_t n = line.size();
  for (;;) {
    field.clear();
    if (i < n && line[i] == '"') {
      ++i;
      for (;;) {
        if (i >= n) {
          throw ValidationError(line_prefix(line_no) + "unterminated quoted field");
        }
        if (line[i] == '"') {
          if (i + 1 < n && line[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            ++i;
            break;
          }
        } else {
          field += line[i++];
        }
      }
      if (i < n && line[i] != ',') {
        throw ValidationError(line_prefix(line_no) +
                              "unexpected text after closing quote");
      }
    } else {
      while (i < n && line[i] != ',') field += line[i++];
    }
    fields.push_back(field);
    if (i >= n) break;
    ++i;  // consume separator
    if (i == n) {
      fields.emplace_back();
      break;
    }
  }
  return fields;
}

std::uint64_t parse_count(const std::string& text, std::size_t line_no) {
  if (text.empty()) {
    throw ValidationError(line_prefix(line_no) + "empty count field");
  }
  if (text[0] == '-') {
    throw ValidationError(line_prefix(line_no) + "negative count '" + text + "'");
  }
  std::uint64_t value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value, 10);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ValidationError(line_prefix(line_no) +
                          "count must be a base-10 non-negative integer, got '" +
                          text + "'");
  }
  if (value > kMaxTotal) {
    throw ValidationError(line_prefix(line_no) + "count '" + text +
                          "' exceeds the supported range");
  }
  return value;
}

}  // namespace

PopulationTable PopulationTable::from_rows(const std::vector<PopulationRow>& rows) {
  PopulationTable table;
  std::unordered_map<std::string, std::size_t> cat_index;
  std::unordered_map<std::string, std::size_t> sub_index;
  for (const auto& row : rows) {
    if (row.category.empty() || row.subgroup.empty()) {
      throw ValidationError("category and subgroup labels must be non-empty");
    }
    if (cat_index.emplace(row.category, table.categories_.size()).second) {
      table.categories_.push_back(row.category);
    }
    if (sub_index.emplace(row.subgroup, table.subgroups_.size()).second) {
      table.subgroups_.push_back(row.subgroup);
    }
  }
  const std::size_t n_sub = table.subgroups_.size();
  table.counts_.assign(table.categories_.size() * n_sub, 0);
  std::unordered_set<std::size_t> seen;
  for (const auto& row : rows) {
    const std::size_t cell =
        cat_index.at(row.category) * n_sub + sub_index.at(row.subgroup);
    if (!seen.insert(cell).second) {
      throw ValidationError("duplicate (category, subgroup) pair ('" + row.category +
                            "', '" + row.subgroup + "')");
    }
    table.counts_[cell] = row.count;
  }
  table.finalize();
  return table;
}

PopulationTable PopulationTable::load_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ValidationError("empty input: missing CSV header");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "category,subgroup,count") {
    throw ValidationError("line 1: header must be exactly 'category,subgroup,count'");
  }
  std::vector<PopulationRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != 3) {
      throw ValidationError(line_prefix(line_no) + "expected 3 fields, got " +
                            std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ValidationError(line_prefix(line_no) + "empty category or subgroup label");
    }
    rows.push_back({fields[0], fields[1], parse_count(fields[2], line_no)});
  }
  if (rows.empty()) {
    throw ValidationError("no data rows after the header");
  }
  return from_rows(rows);
}

void PopulationTable::finalize() {
  const std::size_t n_cat = categories_.size();
  const std::size_t n_sub = subgroups_.size();
  if (n_cat == 0 || n_sub == 0) {
    throw ValidationError("population table is empty");
  }
  category_sizes_.assign(n_cat, 0);
  subgroup_totals_.assign(n_sub, 0);
  total_ = 0;
  for (std::size_t c = 0; c < n_cat; ++c) {
    for (std::size_t s = 0; s < n_sub; ++s) {
      const std::uint64_t v = counts_[c * n_sub + s];
      category_sizes_[c] += v;
      subgroup_totals_[s] += v;
      total_ += v;
      if (total_ > kMaxTotal) {
        throw ValidationError("total population exceeds the supported range");
      }
    }
    if (category_sizes_[c] == 0) {
      throw ValidationError("category '" + categories_[c] +
                            "' has size 0; zero-size categories are not allowed");
    }
  }
}

std::size_t PopulationTable::category_index(std::string_view label) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i] == label) return i;
  }
  throw ValidationError("unknown category '" + std::string(label) + "'");
}

std::size_t PopulationTable::subgroup_index(std::string_view label) const {
  for (std::size_t i = 0; i < subgroups_.size(); ++i) {
    if (subgroups_[i] == label) return i;
  }
  throw ValidationError("unknown subgroup '" + std::string(label) + "'");
}

std::uint64_t PopulationTable::count(std::size_t category, std::size_t subgroup) const {
  return counts_[category * subgroups_.size() + subgroup];
}

std::uint64_t PopulationTable::category_size(std::size_t category) const {
  return category_sizes_[category];
}

std::uint64_t PopulationTable::subgroup_total(std::size_t subgroup) const {
  return subgroup_totals_[subgroup];
}

TableStats table_stats(const PopulationTable& table) {
  TableStats stats;
  stats.total = table.total();
  stats.category_count = table.category_count();
  for (std::size_t c = 0; c < table.category_count(); ++c) {
    stats.category_sizes.push_back(table.category_size(c));
  }
  for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
    stats.subgroup_totals.push_back(table.subgroup_total(s));
  }
  return stats;
}

}  // namespace scarcity_audit
