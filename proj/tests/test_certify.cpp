#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>

#include <json.hpp>

#include "oracles.hpp"
#include "ucert/certify.hpp"

using namespace ucert;

namespace {

UsageModel fixture() { return load_model(std::string(UCERT_DATA_DIR) + "/des_usage_model.tml"); }

std::vector<double> arc_rels(const TestRecord& r) {
  std::vector<double> out;
  for (const auto& c : r.arcs()) out.push_back((c.successes + 1.0) / (c.successes + c.failures() + 2.0));
  return out;
}

TestRecord random_record(const UsageModel& m, std::mt19937_64& rng) {
  TestRecord r(m);
  std::uniform_int_distribution<int> s(0, 400), f(0, 3);
  for (ArcIndex a = 0; a < m.arcs.size(); ++a) {
    auto& c = r.counter(a);
    c.successes = s(rng);
    c.continue_failures = f(rng) == 0 ? f(rng) : 0;
    c.stop_failures = f(rng) == 0 ? 1 : 0;
    c.generated = c.executed();
  }
  return r;
}

}  // namespace

TEST(Reliability, ArcPosteriorMean) {
  EXPECT_EQ(arc_reliability(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(arc_reliability(8, 0), 0.9);
  EXPECT_DOUBLE_EQ(arc_reliability(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(arc_reliability(0, 2), 0.25);
}

TEST(Reliability, EmptyRecordIsPriorOnly) {
  auto m = fixture();
  TestRecord r(m);
  double sur = single_use_reliability(m, r);
  EXPECT_GT(sur, 0.0);
  EXPECT_LT(sur, 1.0);
  EXPECT_NEAR(sur, oracle::sur_iterate(m, std::vector<double>(m.arcs.size(), 0.5)), 1e-12);
}

TEST(Reliability, MatchesFixedPointIteration) {
  auto m = fixture();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    auto r = random_record(m, rng);
    EXPECT_NEAR(single_use_reliability(m, r), oracle::sur_iterate(m, arc_rels(r)), 1e-10);
  }
}

TEST(Reliability, MonotoneInEvidence) {
  auto m = fixture();
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> arc(0, m.arcs.size() - 1);
  for (int i = 0; i < 300; ++i) {
    auto r = random_record(m, rng);
    double base = single_use_reliability(m, r);
    ArcIndex a = arc(rng);
    auto more_pass = r;
    ++more_pass.counter(a).successes;
    auto more_fail = r;
    if (rng() & 1) ++more_fail.counter(a).continue_failures;
    else ++more_fail.counter(a).stop_failures;
    EXPECT_GE(single_use_reliability(m, more_pass), base - 1e-15);
    EXPECT_LE(single_use_reliability(m, more_fail), base + 1e-15);
  }
}

TEST(Reliability, AllPassSuiteRaisesReliability) {
  auto m = fixture();
  auto small = all_pass_record(m, compose_suite(m, {false, 0, 100, 1}));
  auto large = all_pass_record(m, compose_suite(m, {false, 0, 5000, 1}));
  EXPECT_LT(single_use_reliability(m, TestRecord(m)), single_use_reliability(m, small));
  EXPECT_LT(single_use_reliability(m, small), single_use_reliability(m, large));
}

TEST(Discrimination, MatchesDirectFormula) {
  auto m = fixture();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    auto r = random_record(m, rng);
    EXPECT_NEAR(kullback_discrimination(m, r), oracle::kullback_direct(m, r.executed_counts()), 1e-9);
  }
}

TEST(Discrimination, EmptyIsHundredPercent) {
  auto m = fixture();
  EXPECT_DOUBLE_EQ(relative_kullback(m, TestRecord(m)), 100.0);
}

TEST(Discrimination, ModelMatchingRecordIsZero) {
  // Counts chosen so that the smoothed estimate (c + 1) / (N + deg) equals p
  // on every arc: c = p * 4000 - 1 (every fixture probability times 4000 is whole).
  auto m = fixture();
  TestRecord r(m);
  for (ArcIndex a = 0; a < m.arcs.size(); ++a) {
    double c = m.arcs[a].probability * 4000.0 - 1.0;
    ASSERT_NEAR(c, std::round(c), 1e-9);
    r.counter(a).successes = static_cast<std::uint64_t>(std::llround(c));
    r.counter(a).generated = r.counter(a).successes;
  }
  EXPECT_NEAR(relative_kullback(m, r), 0.0, 1e-9);
  EXPECT_NEAR(kullback_discrimination(m, r), 0.0, 1e-12);
}

TEST(Discrimination, NonNegativeAndBounded) {
  auto m = fixture();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = all_pass_record(m, compose_suite(m, {true, 20, 300, seed}));
    double k = kullback_discrimination(m, r);
    EXPECT_GE(k, 0.0);
    double rel = relative_kullback(m, r);
    EXPECT_GE(rel, 0.0);
    EXPECT_LE(rel, 100.0);
  }
}

TEST(Record, AccountingAndRoundTrip) {
  auto m = fixture();
  auto suite = compose_suite(m, {true, 3, 10, 2});
  TestRecord r(m, suite.meta, "unit");
  for (const auto& tc : suite.cases) {
    TestVerdict v;
    v.test_id = tc.id;
    v.method = tc.method;
    for (const auto& s : tc.steps) v.arcs.push_back(s.arc);
    v.outcomes.assign(v.arcs.size(), StepOutcome::pass);
    if (tc.id == 5) {
      v.outcomes[1] = StepOutcome::stop_failure;
      std::fill(v.outcomes.begin() + 2, v.outcomes.end(), StepOutcome::not_executed);
      v.notes = {"step 2 stop"};
    }
    if (tc.id == 6) v.outcomes[0] = StepOutcome::continue_failure;
    r.add(std::move(v));
  }
  auto t = r.totals();
  EXPECT_EQ(t.generated_tests, suite.cases.size());
  EXPECT_EQ(t.failed_tests, 2u);
  EXPECT_EQ(t.generated_stimuli, suite.total_steps());
  EXPECT_EQ(t.failed_stimuli, 2u);
  EXPECT_EQ(t.executed_stimuli, suite.total_steps() - (suite.cases[4].steps.size() - 2));
  std::uint64_t sum = 0;
  for (auto c : r.executed_counts()) sum += c;
  EXPECT_EQ(sum, t.executed_stimuli);

  auto text = write_record(m, r);
  auto back = read_record(text, m);
  EXPECT_EQ(back.arcs(), r.arcs());
  EXPECT_EQ(write_record(m, back), text);

  auto j = nlohmann::json::parse(text);
  j["arcs"][0]["successes"] = 12345;
  EXPECT_THROW(read_record(j.dump(), m), ModelError);
}

TEST(Report, RowsAndSignatures) {
  auto m = fixture();
  auto suite = compose_suite(m, {false, 0, 50, 4});
  TestRecord r(m, suite.meta, "unit");
  std::size_t stop_test = 0;
  for (const auto& tc : suite.cases) {
    TestVerdict v;
    v.test_id = tc.id;
    v.method = tc.method;
    for (const auto& s : tc.steps) v.arcs.push_back(s.arc);
    v.outcomes.assign(v.arcs.size(), StepOutcome::pass);
    if (!stop_test && tc.steps.size() >= 4) {
      stop_test = tc.id;
      v.outcomes[3] = StepOutcome::stop_failure;
      std::fill(v.outcomes.begin() + 4, v.outcomes.end(), StepOutcome::not_executed);
    }
    r.add(std::move(v));
  }
  auto rep = build_report(m, r);
  EXPECT_LT(rep.totals.executed_stimuli, rep.totals.generated_stimuli);
  EXPECT_EQ(rep.totals.failed_tests, 1u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].count, 1u);
  EXPECT_NE(rep.failures[0].fragment.find('['), std::string::npos);
  std::uint64_t gen = 0;
  for (const auto& row : rep.rows) gen += row.generated;
  EXPECT_EQ(gen, rep.totals.generated_stimuli);
  EXPECT_TRUE(std::is_sorted(rep.rows.begin(), rep.rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.stimulus, a.response) < std::tie(b.stimulus, b.response);
  }));
  auto j = nlohmann::json::parse(render_report_json(m, rep));
  EXPECT_EQ(j["format"], "ucert-report/1");
  EXPECT_NE(render_report_text(m, rep).find("Single Use Reliability"), std::string::npos);
}

TEST(Report, EmptyRecordIsAllZero) {
  auto m = fixture();
  auto rep = build_report(m, TestRecord(m));
  EXPECT_EQ(rep.totals.generated_stimuli, 0u);
  EXPECT_EQ(rep.totals.executed_tests, 0u);
  for (const auto& row : rep.rows) EXPECT_EQ(row.generated, 0u);
  EXPECT_DOUBLE_EQ(rep.relative_kullback_percent, 100.0);
}
