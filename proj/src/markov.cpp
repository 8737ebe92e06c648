#include "ucert/markov.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace ucert {

Eigen::MatrixXd transition_matrix(const UsageModel& model) {
  const auto n = static_cast<Eigen::Index>(model.state_count());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (const Arc& a : model.arcs)
    p(static_cast<Eigen::Index>(a.from), static_cast<Eigen::Index>(a.to)) += a.probability;
  p(static_cast<Eigen::Index>(model.sink), static_cast<Eigen::Index>(model.source)) += 1.0;
  return p;
}

Eigen::VectorXd solve_dense(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double min_rcond) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  double rcond = lu.rcond();
  if (!(rcond >= min_rcond)) throw SolverError("singular or ill-conditioned linear system", rcond);
  return lu.solve(b);
}

std::vector<double> stationary_distribution(const UsageModel& model) {
  const auto n = static_cast<Eigen::Index>(model.state_count());
  Eigen::MatrixXd p = transition_matrix(model);
  // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
  Eigen::MatrixXd a = p.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd pi = solve_dense(a, b);
  return {pi.data(), pi.data() + n};
}

std::vector<double> expected_state_visits(const UsageModel& model) {
  const std::size_t n = model.state_count();
  // Transient states are every state but the sink; map them to 0..n-2.
  std::vector<Eigen::Index> slot(n, -1);
  Eigen::Index m = 0;
  for (StateIndex s = 0; s < n; ++s)
    if (s != model.sink) slot[s] = m++;

  Eigen::MatrixXd i_minus_q = Eigen::MatrixXd::Identity(m, m);
  for (const Arc& a : model.arcs)
    if (a.to != model.sink && a.from != model.sink) i_minus_q(slot[a.from], slot[a.to]) -= a.probability;

  // visits^T (I - Q) = e_source^T
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  e(slot[model.source]) = 1.0;
  Eigen::VectorXd v = solve_dense(i_minus_q.transpose(), e);

  std::vector<double> visits(n, 1.0);
  for (StateIndex s = 0; s < n; ++s)
    if (s != model.sink) visits[s] = v(slot[s]);
  return visits;
}

std::vector<double> expected_arc_occurrence(const UsageModel& model,
                                            const std::vector<double>& visits) {
  std::vector<double> occ(model.arcs.size());
  for (ArcIndex a = 0; a < model.arcs.size(); ++a)
    occ[a] = visits[model.arcs[a].from] * model.arcs[a].probability;
  return occ;
}

double expected_test_length(const UsageModel& model) {
  auto occ = expected_arc_occurrence(model, expected_state_visits(model));
  double sum = 0.0;
  for (double o : occ) sum += o;
  return sum;
}

ChainStatistics analyze_chain(const UsageModel& model) {
  ChainStatistics st;
  st.occupancy = stationary_distribution(model);
  st.state_occurrence = expected_state_visits(model);
  st.arc_occurrence = expected_arc_occurrence(model, st.state_occurrence);
  for (double o : st.arc_occurrence) st.expected_length += o;

  Eigen::Map<const Eigen::RowVectorXd> pi(st.occupancy.data(),
                                          static_cast<Eigen::Index>(st.occupancy.size()));
  Eigen::RowVectorXd r = pi * transition_matrix(model) - pi;
  st.stationary_residual = r.cwiseAbs().maxCoeff();
  return st;
}

std::string render_analysis_text(const UsageModel& model, const ChainStatistics& st) {
  std::ostringstream out;
  out << "Model analysis: " << model.name << "\n"
      << "  states " << model.state_count() << ", arcs " << model.arcs.size() << "\n"
      << "  expected test length " << std::setprecision(10) << st.expected_length << "\n"
      << "  stationary residual  " << std::setprecision(3) << st.stationary_residual << "\n\n";

  out << std::left << std::setw(16) << "state" << std::right << std::setw(16) << "occupancy"
      << std::setw(16) << "occurrence" << "\n";
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    out << std::left << std::setw(16) << model.states[s] << std::right << std::fixed
        << std::setprecision(9) << std::setw(16) << st.occupancy[s] << std::setw(16)
        << st.state_occurrence[s] << "\n";
  }
  out << "\n" << std::left << std::setw(16) << "from" << std::setw(28) << "arc" << std::setw(16)
      << "to" << std::right << std::setw(14) << "probability" << std::setw(14) << "occurrence"
      << "\n";
  for (ArcIndex a = 0; a < model.arcs.size(); ++a) {
    const Arc& arc = model.arcs[a];
    out << std::left << std::setw(16) << model.states[arc.from] << std::setw(28) << arc.label()
        << std::setw(16) << model.states[arc.to] << std::right << std::setw(14)
        << std::setprecision(6) << arc.probability << std::setw(14) << std::setprecision(9)
        << st.arc_occurrence[a] << "\n";
  }
  return out.str();
}

std::string render_analysis_json(const UsageModel& model, const ChainStatistics& st) {
  nlohmann::ordered_json j;
  j["format"] = "ucert-analysis/1";
  j["model"] = model.name;
  j["source"] = model.states[model.source];
  j["sink"] = model.states[model.sink];
  j["expected_length"] = st.expected_length;
  j["stationary_residual"] = st.stationary_residual;
  auto& states = j["states"] = nlohmann::ordered_json::array();
  for (StateIndex s = 0; s < model.state_count(); ++s)
    states.push_back({{"state", model.states[s]},
                      {"occupancy", st.occupancy[s]},
                      {"occurrence", st.state_occurrence[s]}});
  auto& arcs = j["arcs"] = nlohmann::ordered_json::array();
  for (ArcIndex a = 0; a < model.arcs.size(); ++a) {
    const Arc& arc = model.arcs[a];
    arcs.push_back({{"from", model.states[arc.from]},
                    {"to", model.states[arc.to]},
                    {"stimulus", arc.stimulus},
                    {"response", arc.response.tokens},
                    {"probability", arc.probability},
                    {"occurrence", st.arc_occurrence[a]}});
  }
  return j.dump(2) + "\n";
}

}  // namespace ucert
