#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "scarcity_audit/errors.hpp"
#include "scarcity_audit/population.hpp"
#include "test_support.hpp"

using scarcity_audit::PopulationRow;
using scarcity_audit::PopulationTable;
using scarcity_audit::ValidationError;
using scarcity_audit::table_stats;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("loads a well-formed table and preserves declaration order") {
  std::istringstream in(
      "category,subgroup,count\nC1,s1,3\nC1,s2,1\nC2,s1,2\nC2,s2,4\n");
  const PopulationTable table = PopulationTable::load_csv(in);
  CHECK(table.categories() == std::vector<std::string>{"C1", "C2"});
  CHECK(table.subgroups() == std::vector<std::string>{"s1", "s2"});
  CHECK(table.total() == 10);
  CHECK(table.category_size(0) == 4);
  CHECK(table.category_size(1) == 6);
  CHECK(table.subgroup_total(0) == 5);
  CHECK(table.subgroup_total(1) == 5);
  CHECK(table.count(1, 1) == 4);
}

TEST_CASE("rejects a negative count with the line number") {
  std::istringstream in("category,subgroup,count\nC1,s1,3\nC1,s2,-2\n");
  const std::string message =
      message_of([&] { PopulationTable::load_csv(in); });
  CHECK(message.find("line 3") != std::string::npos);
  CHECK(message.find("negative") != std::string::npos);
}

TEST_CASE("rejects non-integer counts") {
  std::istringstream in("category,subgroup,count\nC1,s1,3.5\n");
  CHECK_THROWS_AS(PopulationTable::load_csv(in), ValidationError);
  std::istringstream garbage("category,subgroup,count\nC1,s1,abc\n");
  CHECK_THROWS_AS(PopulationTable::load_csv(garbage), ValidationError);
}

TEST_CASE("rejects duplicate (category, subgroup) pairs") {
  std::istringstream in("category,subgroup,count\nC1,s1,3\nC1,s1,4\n");
  const std::string message =
      message_of([&] { PopulationTable::load_csv(in); });
  CHECK(message.find("duplicate") != std::string::npos);
  CHECK(message.find("C1") != std::string::npos);
}

TEST_CASE("rejects zero-size categories") {
  std::istringstream in("category,subgroup,count\nC1,s1,0\nC1,s2,0\nC2,s1,5\n");
  const std::string message =
      message_of([&] { PopulationTable::load_csv(in); });
  CHECK(message.find("C1") != std::string::npos);
  CHECK(message.find("size 0") != std::string::npos);
}

TEST_CASE("zero-count cells are fine as long as the category is nonempty") {
  std::istringstream in("category,subgroup,count\nC1,s1,5\nC1,s2,0\n");
  const PopulationTable table = PopulationTable::load_csv(in);
  CHECK(table.count(0, 1) == 0);
  CHECK(table.subgroup_total(1) == 0);
}

TEST_CASE("rejects malformed input") {
  SUBCASE("wrong header") {
    std::istringstream in("cat,sub,count\nC1,s1,3\n");
    CHECK_THROWS_AS(PopulationTable::load_csv(in), ValidationError);
  }
  SUBCASE("empty stream") {
    std::istringstream in("");
    CHECK_THROWS_AS(PopulationTable::load_csv(in), ValidationError);
  }
  SUBCASE("header only") {
    std::istringstream in("category,subgroup,count\n");
    CHECK_THROWS_AS(PopulationTable::load_csv(in), ValidationError);
  }
  SUBCASE("wrong field count carries the line number") {
    std::istringstream in("category,subgroup,count\nC1,s1,3\nC2,4\n");
    const std::string message =
        message_of([&] { PopulationTable::load_csv(in); });
    CHECK(message.find("line 3") != std::string::npos);
  }
  SUBCASE("empty label") {
    std::istringstream in("category,subgroup,count\n,s1,3\n");
    CHECK_THROWS_AS(PopulationTable::load_csv(in), ValidationError);
  }
}

TEST_CASE("standard CSV quoting") {
  std::istringstream in(
      "category,subgroup,count\n\"High, acute\",\"say \"\"hi\"\"\",7\n");
  const PopulationTable table = PopulationTable::load_csv(in);
  CHECK(table.categories()[0] == "High, acute");
  CHECK(table.subgroups()[0] == "say \"hi\"");
  CHECK(table.total() == 7);
}

TEST_CASE("loading is deterministic") {
  const std::string text =
      "category,subgroup,count\nB,x,1\nA,y,2\nB,y,3\nA,x,4\n";
  std::istringstream first(text);
  std::istringstream second(text);
  const PopulationTable a = PopulationTable::load_csv(first);
  const PopulationTable b = PopulationTable::load_csv(second);
  CHECK(a.categories() == b.categories());
  CHECK(a.subgroups() == b.subgroups());
  for (std::size_t c = 0; c < a.category_count(); ++c) {
    for (std::size_t s = 0; s < a.subgroup_count(); ++s) {
      CHECK(a.count(c, s) == b.count(c, s));
    }
  }
  // row order defines declaration order
  CHECK(a.categories() == std::vector<std::string>{"B", "A"});
  CHECK(a.subgroups() == std::vector<std::string>{"x", "y"});
}

TEST_CASE("table_stats sums exactly") {
  SUBCASE("2x2 instance") {
    const auto stats = table_stats(test_support::demo_table());
    CHECK(stats.total == 10);
    CHECK(stats.category_count == 2);
    CHECK(stats.category_sizes == std::vector<std::uint64_t>{4, 6});
    CHECK(stats.subgroup_totals == std::vector<std::uint64_t>{5, 5});
  }
  SUBCASE("single cell") {
    const auto stats =
        table_stats(PopulationTable::from_rows({{"C1", "s1", 7}}));
    CHECK(stats.total == 7);
    CHECK(stats.category_count == 1);
  }
  SUBCASE("three categories") {
    const auto stats = table_stats(PopulationTable::from_rows(
        {{"C1", "s1", 5}, {"C2", "s1", 10}, {"C3", "s1", 5}}));
    CHECK(stats.total == 20);
    CHECK(stats.category_sizes == std::vector<std::uint64_t>{5, 10, 5});
  }
}

TEST_CASE("row sums and totals agree exactly on random tables") {
  std::mt19937 rng(20240811);
  for (int iteration = 0; iteration < 200; ++iteration) {
    const auto instance = test_support::random_instance(rng);
    const auto& table = instance.table;
    std::uint64_t total = 0;
    for (std::size_t c = 0; c < table.category_count(); ++c) {
      std::uint64_t row_sum = 0;
      for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
        row_sum += table.count(c, s);
      }
      REQUIRE(row_sum == table.category_size(c));
      total += row_sum;
    }
    REQUIRE(total == table.total());
    std::uint64_t subgroup_sum = 0;
    for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
      subgroup_sum += table.subgroup_total(s);
    }
    REQUIRE(subgroup_sum == table.total());
  }
}

TEST_CASE("CSV round-trip preserves counts") {
  std::mt19937 rng(7);
  for (int iteration = 0; iteration < 50; ++iteration) {
    const auto instance = test_support::random_instance(rng);
    const auto& table = instance.table;
    std::ostringstream out;
    out << "category,subgroup,count\n";
    for (std::size_t c = 0; c < table.category_count(); ++c) {
      for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
        out << table.categories()[c] << ',' << table.subgroups()[s] << ','
            << table.count(c, s) << '\n';
      }
    }
    std::istringstream in(out.str());
    const PopulationTable loaded = PopulationTable::load_csv(in);
    REQUIRE(loaded.total() == table.total());
    for (std::size_t c = 0; c < table.category_count(); ++c) {
      for (std::size_t s = 0; s < table.subgroup_count(); ++s) {
        REQUIRE(loaded.count(c, s) == table.count(c, s));
      }
    }
  }
}

TEST_CASE("label lookup") {
  const auto table = test_support::demo_table();
  CHECK(table.category_index("C2") == 1);
  CHECK(table.subgroup_index("s2") == 1);
  CHECK_THROWS_AS(table.category_index("nope"), ValidationError);
  CHECK_THROWS_AS(table.subgroup_index("nope"), ValidationError);
}
