#include <gtest/gtest.h>

#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "ucert/markov.hpp"

using namespace ucert;

namespace {

UsageModel fixture() { return load_model(std::string(UCERT_DATA_DIR) + "/des_usage_model.tml"); }

}  // namespace

TEST(Markov, SourceVisits) {
  auto m = fixture();
  auto v = expected_state_visits(m);
  EXPECT_NEAR(v[m.source], 1.0 / 0.99, 1e-9);
  EXPECT_DOUBLE_EQ(v[m.sink], 1.0);
}

TEST(Markov, VisitsMatchBalanceEquations) {
  auto m = fixture();
  auto v = expected_state_visits(m);
  auto ref = oracle::visits_balance(m);
  for (std::size_t s = 0; s < v.size(); ++s) EXPECT_NEAR(v[s], ref[s], 1e-10) << m.states[s];
}

TEST(Markov, StationaryResidualAndPowerIteration) {
  auto m = fixture();
  auto stats = analyze_chain(m);
  EXPECT_LE(stats.stationary_residual, 1e-9);
  auto ref = oracle::stationary_power(m);
  for (std::size_t s = 0; s < ref.size(); ++s) EXPECT_NEAR(stats.occupancy[s], ref[s], 1e-6) << m.states[s];

  auto p = transition_matrix(m);
  Eigen::RowVectorXd pi(static_cast<Eigen::Index>(stats.occupancy.size()));
  for (std::size_t i = 0; i < stats.occupancy.size(); ++i) pi(static_cast<Eigen::Index>(i)) = stats.occupancy[i];
  EXPECT_LE((pi * p - pi).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(pi.sum(), 1.0, 1e-12);
}

TEST(Markov, OccupancyIsVisitsNormalized) {
  auto m = fixture();
  auto stats = analyze_chain(m);
  double total = 0;
  for (double v : stats.state_occurrence) total += v;
  for (std::size_t s = 0; s < m.states.size(); ++s)
    EXPECT_NEAR(stats.occupancy[s], stats.state_occurrence[s] / total, 1e-12);
}

TEST(Markov, LengthIsSumOfArcOccurrences) {
  auto m = fixture();
  auto stats = analyze_chain(m);
  double sum = 0;
  for (double a : stats.arc_occurrence) sum += a;
  EXPECT_NEAR(stats.expected_length, sum, 1e-12);
  EXPECT_NEAR(expected_test_length(m), sum, 1e-12);
  // Every test has exactly one C_t.
  auto ct = m.find_arc(m.source, "C_t");
  EXPECT_NEAR(stats.arc_occurrence[*ct], 1.0, 1e-12);
}

TEST(Markov, LinearChain) {
  // a -> b -> Exit with a self-loop on a of probability 1/2: visits(a) = 2.
  auto m = fill_probabilities(parse_model("model L\nsource [a]\n ($0.5$) \"s/x\" [a]\n \"n/x\" [b]\n[b]\n \"e/x\" [Exit]\n"));
  auto v = expected_state_visits(m);
  EXPECT_NEAR(v[m.source], 2.0, 1e-12);
  EXPECT_NEAR(v[*m.find_state("b")], 1.0, 1e-12);
  EXPECT_NEAR(expected_test_length(m), 3.0, 1e-12);
}

TEST(Markov, SingularSystemIsReported) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  a(0, 0) = 1;
  a(1, 0) = 1;
  EXPECT_THROW(solve_dense(a, Eigen::VectorXd::Ones(2)), SolverError);
}

TEST(Markov, MonteCarloAgreement) {
  auto m = fixture();
  auto stats = analyze_chain(m);
  auto mc = oracle::simulate(m, 100000, 11);
  EXPECT_NEAR(mc.mean_length, stats.expected_length, 0.02 * stats.expected_length);
  for (std::size_t s = 0; s < m.states.size(); ++s)
    EXPECT_NEAR(mc.mean_visits[s], stats.state_occurrence[s], 0.02 * stats.state_occurrence[s]) << m.states[s];
}

TEST(Markov, RandomModelsMatchBalance) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    auto m = fill_probabilities(parse_model(oracle::random_model_text(rng, 4 + rng() % 5, 14)));
    auto v = expected_state_visits(m);
    auto ref = oracle::visits_balance(m);
    for (std::size_t s = 0; s < v.size(); ++s) ASSERT_NEAR(v[s], ref[s], 1e-8 * std::max(1.0, ref[s]));
    EXPECT_LE(analyze_chain(m).stationary_residual, 1e-9);
  }
}

TEST(Markov, JsonReport) {
  auto m = fixture();
  auto j = nlohmann::json::parse(render_analysis_json(m, analyze_chain(m)));
  EXPECT_EQ(j["format"], "ucert-analysis/1");
  EXPECT_NEAR(j["expected_length"].get<double>(), expected_test_length(m), 1e-12);
}
