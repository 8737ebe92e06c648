#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "ucert/kernels.hpp"
#include "ucert/testgen.hpp"

using namespace ucert;

namespace {

UsageModel fixture() { return load_model(std::string(UCERT_DATA_DIR) + "/des_usage_model.tml"); }

std::size_t steps(const std::vector<TestCase>& cases) {
  std::size_t n = 0;
  for (const auto& c : cases) n += c.steps.size();
  return n;
}

// All source-to-sink paths with probability >= floor, by DFS.
void enumerate(const UsageModel& m, StateIndex s, double p, double floor, std::vector<ArcIndex>& path,
               std::vector<std::pair<double, std::vector<ArcIndex>>>& out) {
  if (s == m.sink) {
    out.emplace_back(p, path);
    return;
  }
  for (auto a : m.outgoing(s)) {
    double q = p * m.arcs[a].probability;
    if (q < floor) continue;
    path.push_back(a);
    enumerate(m, m.arcs[a].to, q, floor, path, out);
    path.pop_back();
  }
}

void expect_fixture_shape(const UsageModel& m, const TestCase& tc) {
  ASSERT_TRUE(check_test_case(m, tc).empty()) << tc.id;
  std::size_t ct = 0;
  for (const auto& s : tc.steps) ct += s.stimulus == "C_t";
  EXPECT_EQ(ct, 1u) << tc.id;
  EXPECT_EQ(tc.steps.back().stimulus, "E");
  EXPECT_EQ(tc.steps.back().expected_response.tokens.back(), "clear");
}

}  // namespace

TEST(Random, DeterministicAndStreamAddressed) {
  auto m = fixture();
  auto a = generate_random(m, 300, 5);
  auto b = generate_random(m, 300, 5);
  auto tail = generate_random(m, 100, 5, 200);
  ASSERT_EQ(a.cases.size(), 300u);
  for (std::size_t i = 0; i < a.cases.size(); ++i) {
    ASSERT_EQ(a.cases[i].stream, i);
    std::vector<ArcIndex> x, y;
    for (const auto& s : a.cases[i].steps) x.push_back(s.arc);
    for (const auto& s : b.cases[i].steps) y.push_back(s.arc);
    ASSERT_EQ(x, y);
  }
  for (std::size_t i = 0; i < 100; ++i) {
    ASSERT_EQ(tail.cases[i].stream, 200 + i);
    ASSERT_EQ(tail.cases[i].steps.size(), a.cases[200 + i].steps.size());
  }
  auto other = generate_random(m, 300, 6);
  EXPECT_NE(steps(a.cases), steps(other.cases));
}

TEST(Random, MatchesKernelWalks) {
  auto m = fixture();
  auto g = generate_random(m, 50, 77);
  auto walks = sample_walks_serial(CompiledChain::compile(m), 77, 0, 50);
  for (std::size_t i = 0; i < 50; ++i) {
    std::vector<ArcIndex> x;
    for (const auto& s : g.cases[i].steps) x.push_back(s.arc);
    EXPECT_EQ(x, walks[i].arcs);
  }
}

TEST(Random, FirstStepChiSquare) {
  // First arc out of C_t over walks that start with C_t: 7 categories.
  auto m = fixture();
  auto g = generate_random(m, 20000, 31337);
  auto ct_state = *m.find_state("C_t");
  std::map<ArcIndex, double> seen;
  double n = 0;
  for (const auto& tc : g.cases) {
    for (std::size_t k = 0; k + 1 < tc.steps.size(); ++k) {
      if (tc.steps[k].stimulus == "C_t") {
        seen[tc.steps[k + 1].arc] += 1;
        n += 1;
        break;
      }
    }
  }
  double chi = 0;
  auto out = m.outgoing(ct_state);
  for (auto a : out) {
    double e = n * m.arcs[a].probability;
    chi += (seen[a] - e) * (seen[a] - e) / e;
  }
  // 6 degrees of freedom; 22.46 is the 0.999 quantile.
  EXPECT_LT(chi, 22.46);
}

TEST(Random, FixtureInvariants) {
  auto m = fixture();
  auto g = generate_random(m, 2000, 9);
  std::size_t e_a = 0, j_a = 0;
  for (const auto& tc : g.cases) {
    expect_fixture_shape(m, tc);
    for (const auto& s : tc.steps) {
      auto r = s.expected_response.to_string();
      if (s.stimulus == "E" && r == "e_a") ++e_a;
      if (s.stimulus == "J_t" && r == "j_a") ++j_a;
    }
  }
  EXPECT_EQ(e_a, j_a);
}

TEST(Weighted, ToyModelExhaustive) {
  auto m = fill_probabilities(parse_model(R"(model W
source [a]
  ($0.5$) "x/1" [b]
  ($0.3$) "y/1" [c]
          "z/1" [Exit]
[b]
  ($0.6$) "x/1" [Exit]
          "y/1" [c]
[c]
  ($0.5$) "x/1" [Exit]
          "y/1" [Exit]
)"));
  std::vector<std::pair<double, std::vector<ArcIndex>>> all;
  std::vector<ArcIndex> path;
  enumerate(m, m.source, 1.0, 0.0, path, all);
  ASSERT_EQ(all.size(), 6u);
  auto g = generate_weighted(m, 10);
  ASSERT_EQ(g.cases.size(), 6u);
  std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_NEAR(g.cases[i].path_probability, all[i].first, 1e-15) << i;
  // 0.3 (b,x) vs 0.2 (z) vs 0.15 (y,x), (y,y); the tie is ordered by stimulus keys: "y x" < "y y".
  EXPECT_EQ(g.cases[0].steps.size(), 2u);
  EXPECT_EQ(g.cases[2].steps[1].stimulus, "x");
  EXPECT_EQ(g.cases[3].steps[1].stimulus, "y");
}

TEST(Weighted, FixtureTopPathsMatchEnumeration) {
  auto m = fixture();
  const std::size_t k = 200;
  auto g = generate_weighted(m, k);
  ASSERT_EQ(g.cases.size(), k);
  double floor = g.cases.back().path_probability * (1 - 1e-12);
  std::vector<std::pair<double, std::vector<ArcIndex>>> all;
  std::vector<ArcIndex> path;
  enumerate(m, m.source, 1.0, floor, path, all);
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  ASSERT_GE(all.size(), k);
  std::set<std::vector<ArcIndex>> distinct;
  for (std::size_t i = 0; i < k; ++i) {
    EXPECT_NEAR(g.cases[i].path_probability, all[i].first, 1e-15) << i;
    if (i) EXPECT_LE(g.cases[i].path_probability, g.cases[i - 1].path_probability);
    std::vector<ArcIndex> arcs;
    for (const auto& s : g.cases[i].steps) arcs.push_back(s.arc);
    distinct.insert(arcs);
    expect_fixture_shape(m, g.cases[i]);
  }
  EXPECT_EQ(distinct.size(), k);
}

TEST(Weighted, FewerPathsThanRequested) {
  auto m = fill_probabilities(parse_model("model O\nsource [a]\n \"x/1\" [Exit]\n"));
  auto g = generate_weighted(m, 5);
  EXPECT_EQ(g.cases.size(), 1u);
  EXPECT_FALSE(g.warnings.empty());
}

TEST(MinCoverage, FixtureOptimum) {
  auto m = fixture();
  auto g = generate_min_coverage(m);
  std::vector<bool> covered(m.arcs.size(), false);
  for (const auto& tc : g.cases) {
    expect_fixture_shape(m, tc);
    for (const auto& s : tc.steps) covered[s.arc] = true;
  }
  EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }));
  EXPECT_EQ(g.cases.size(), 4u);
  EXPECT_EQ(steps(g.cases), 45u);
  // Every state with a self-loop also has non-loop arcs, so loops can be counted separately.
  EXPECT_EQ(steps(g.cases), oracle::min_coverage_steps_loops_reduced(m));
}

TEST(MinCoverage, RandomModelsMatchExhaustiveSearch) {
  std::mt19937_64 rng(20240101);
  for (int i = 0; i < 150; ++i) {
    std::size_t n = 4 + rng() % 5;
    auto text = oracle::random_model_text(rng, n, 13);
    auto m = fill_probabilities(parse_model(text));
    auto g = generate_min_coverage(m);
    std::vector<bool> covered(m.arcs.size(), false);
    for (const auto& tc : g.cases) {
      ASSERT_TRUE(check_test_case(m, tc).empty()) << text;
      for (const auto& s : tc.steps) covered[s.arc] = true;
    }
    ASSERT_TRUE(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) << text;
    ASSERT_EQ(steps(g.cases), oracle::min_coverage_steps(m)) << text;
  }
}

TEST(Suite, ComposeOrderAndIds) {
  auto m = fixture();
  auto s = compose_suite(m, {true, 5, 7, 1});
  ASSERT_EQ(s.cases.size(), 16u);
  for (std::size_t i = 0; i < s.cases.size(); ++i) EXPECT_EQ(s.cases[i].id, i + 1);
  EXPECT_EQ(s.cases[0].method, Method::min_coverage);
  EXPECT_EQ(s.cases[4].method, Method::weighted);
  EXPECT_EQ(s.cases[9].method, Method::random);
  EXPECT_EQ(s.meta.prng, kPrngName);
}

TEST(Suite, RoundTripIsByteIdentical) {
  auto m = fixture();
  auto s = compose_suite(m, {true, 20, 100, 42});
  auto text = write_suite(s);
  EXPECT_EQ(text, write_suite(compose_suite(m, {true, 20, 100, 42})));
  auto back = read_suite(text, m);
  EXPECT_EQ(write_suite(back), text);
  ASSERT_EQ(back.cases.size(), s.cases.size());
  EXPECT_EQ(back.cases[30].steps.size(), s.cases[30].steps.size());
}

TEST(Suite, ReaderRejectsIllegalStimulus) {
  auto m = fixture();
  auto text = write_suite(compose_suite(m, {false, 0, 1, 3}));
  auto pos = text.find("\"C_t\"");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 5, "\"R_t\"");
  EXPECT_THROW(read_suite(text, m), ModelError);
}

TEST(Suite, EmptySuite) {
  auto m = fixture();
  auto s = compose_suite(m, {false, 0, 0, 1});
  EXPECT_TRUE(s.cases.empty());
  EXPECT_EQ(read_suite(write_suite(s), m).cases.size(), 0u);
}
