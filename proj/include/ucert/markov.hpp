#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ucert/model.hpp"

namespace ucert {

/// A linear system could not be solved reliably.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double rcond)
      : std::runtime_error(what + " (reciprocal condition estimate " + std::to_string(rcond) + ")"),
        rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// Dense row-stochastic matrix of the recurrent chain: model arcs plus the
/// implicit sink -> source arc with probability 1.
Eigen::MatrixXd transition_matrix(const UsageModel& model);

/// Solves A x = b by LU with partial pivoting. Throws SolverError when the
/// reciprocal condition estimate falls below `min_rcond`.
Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            double min_rcond = 1e-12);

/// Long-run occupancy of the recurrent chain: pi = pi P, sum(pi) = 1.
std::vector<double> stationary_distribution(const UsageModel& model);

/// Expected visits per test to each state (source row of the fundamental
/// matrix of the absorbing chain). The sink is defined as visited once.
std::vector<double> expected_state_visits(const UsageModel& model);

/// Expected traversals of each arc per test.
std::vector<double> expected_arc_occurrence(const UsageModel& model,
                                            const std::vector<double>& visits);

/// Expected number of stimuli per test.
double expected_test_length(const UsageModel& model);

struct ChainStatistics {
  std::vector<double> occupancy;
  std::vector<double> state_occurrence;
  std::vector<double> arc_occurrence;
  double expected_length = 0.0;
  double stationary_residual = 0.0;  // max |pi P - pi|
};

ChainStatistics analyze_chain(const UsageModel& model);

std::string render_analysis_text(const UsageModel& model, const ChainStatistics& stats);
std::string render_analysis_json(const UsageModel& model, const ChainStatistics& stats);

}  // namespace ucert
