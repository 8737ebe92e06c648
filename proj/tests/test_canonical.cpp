#include <gtest/gtest.h>

#include "ucert/canonical.hpp"
#include "ucert/harness.hpp"
#include "ucert/model.hpp"

using namespace ucert;

namespace {

UsageModel fixture() { return load_model(std::string(UCERT_DATA_DIR) + "/des_usage_model.tml"); }

}  // namespace

TEST(Canonical, ShippedTableMatchesBuiltIn) {
  auto table = load_canonical_table(std::string(UCERT_DATA_DIR) + "/des_canonical.txt");
  EXPECT_EQ(table, des_canonical_table());
  EXPECT_EQ(table.size(), 7u);
}

TEST(Canonical, RowsMatchAttributeTable) {
  const auto& t = des_canonical_table();
  EXPECT_EQ(t.at("lambda").to_string(), "0 - - -");
  EXPECT_EQ(t.at("C_t").to_string(), "1 0 0 -");
  EXPECT_EQ(t.at("C_tJ_t").to_string(), "1 1 0 0");
  EXPECT_EQ(t.at("C_tS_t").to_string(), "1 0 1 -");
  EXPECT_EQ(t.at("C_tJ_tE").to_string(), "1 1 0 1");
  EXPECT_EQ(t.at("C_tJ_tS_t").to_string(), "1 1 1 0");
  EXPECT_EQ(t.at("C_tJ_tES_t").to_string(), "1 1 1 1");
  EXPECT_EQ(t.at("lambda"), CanonicalStateVector::no_session());
}

TEST(Canonical, FixtureIsConsistent) {
  auto issues = check_canonical_consistency(fixture(), des_canonical_table());
  EXPECT_TRUE(issues.empty()) << ::testing::PrintToString(issues);
}

TEST(Canonical, DetectsCollapsedStates) {
  auto t = des_canonical_table();
  t["C_tJ_tES_t"] = t.at("C_tJ_tS_t");
  EXPECT_FALSE(check_canonical_consistency(fixture(), t).empty());
}

TEST(Canonical, DetectsWrongSemantics) {
  auto t = des_canonical_table();
  t["C_tS_t"] = {Attr::one, Attr::zero, Attr::zero, Attr::one};  // send must set data_sent
  EXPECT_FALSE(check_canonical_consistency(fixture(), t).empty());
  auto t2 = des_canonical_table();
  t2.erase("C_tJ_tE");
  EXPECT_FALSE(check_canonical_consistency(fixture(), t2).empty());
}

TEST(Canonical, ParseErrors) {
  EXPECT_THROW(parse_canonical_table("a 1 0 0\n"), std::exception);
  EXPECT_THROW(parse_canonical_table("a 1 0 0 2\n"), std::exception);
  auto t = parse_canonical_table("# header\nx 1 - - -  # trailing\n");
  EXPECT_EQ(t.at("x").to_string(), "1 - - -");
}
