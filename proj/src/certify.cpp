#include "ucert/certify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "ucert/markov.hpp"

namespace ucert {

using json = nlohmann::ordered_json;

bool TestVerdict::failed() const {
  return std::any_of(outcomes.begin(), outcomes.end(), [](StepOutcome o) {
    return o == StepOutcome::continue_failure || o == StepOutcome::stop_failure;
  });
}

bool TestVerdict::executed() const {
  return std::any_of(outcomes.begin(), outcomes.end(), [](StepOutcome o) {
    return o != StepOutcome::not_executed && o != StepOutcome::harness_error;
  });
}

std::optional<std::size_t> TestVerdict::first_failure() const {
  for (std::size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i] == StepOutcome::continue_failure || outcomes[i] == StepOutcome::stop_failure)
      return i;
  return std::nullopt;
}

TestRecord::TestRecord(const UsageModel& model, SuiteMetadata suite, std::string target)
    : model_name_(model.name),
      suite_(std::move(suite)),
      target_(std::move(target)),
      arcs_(model.arcs.size()) {}

void TestRecord::add(TestVerdict v) {
  if (v.outcomes.size() != v.arcs.size())
    throw std::invalid_argument("verdict outcome count does not match its steps");
  for (std::size_t i = 0; i < v.arcs.size(); ++i) {
    ArcOutcomeCounter& c = arcs_.at(v.arcs[i]);
    ++c.generated;
    switch (v.outcomes[i]) {
      case StepOutcome::pass: ++c.successes; break;
      case StepOutcome::continue_failure: ++c.continue_failures; break;
      case StepOutcome::stop_failure: ++c.stop_failures; break;
      case StepOutcome::harness_error: ++harness_errors_; break;
      case StepOutcome::not_executed: break;
    }
  }
  tests_.push_back(std::move(v));
}

RecordTotals TestRecord::totals() const {
  RecordTotals t;
  for (const auto& c : arcs_) {
    t.generated_stimuli += c.generated;
    t.executed_stimuli += c.executed();
    t.failed_stimuli += c.failures();
  }
  t.generated_tests = tests_.size();
  for (const auto& v : tests_) {
    if (v.executed()) ++t.executed_tests;
    if (v.failed()) ++t.failed_tests;
  }
  t.harness_errors = harness_errors_;
  return t;
}

std::vector<std::uint64_t> TestRecord::executed_counts() const {
  std::vector<std::uint64_t> out(arcs_.size());
  for (std::size_t a = 0; a < arcs_.size(); ++a) out[a] = arcs_[a].executed();
  return out;
}

TestRecord all_pass_record(const UsageModel& model, const Suite& suite) {
  TestRecord r(model, suite.meta, "all-pass");
  for (const auto& tc : suite.cases) {
    TestVerdict v;
    v.test_id = tc.id;
    v.method = tc.method;
    for (const auto& s : tc.steps) v.arcs.push_back(s.arc);
    v.outcomes.assign(v.arcs.size(), StepOutcome::pass);
    r.add(std::move(v));
  }
  return r;
}

std::string write_record(const UsageModel& model, const TestRecord& record) {
  json j;
  j["format"] = "ucert-record/1";
  j["model"] = model.name;
  j["target"] = record.target();
  const auto& m = record.suite();
  j["suite"] = {{"prng", m.prng},
                {"seed", m.seed},
                {"min_coverage", m.min_coverage},
                {"weighted", m.weighted},
                {"random", m.random}};
  auto t = record.totals();
  j["totals"] = {{"generated_stimuli", t.generated_stimuli},
                 {"executed_stimuli", t.executed_stimuli},
                 {"failed_stimuli", t.failed_stimuli},
                 {"generated_tests", t.generated_tests},
                 {"executed_tests", t.executed_tests},
                 {"failed_tests", t.failed_tests},
                 {"harness_errors", t.harness_errors}};
  auto& arcs = j["arcs"] = json::array();
  for (ArcIndex a = 0; a < model.arcs.size(); ++a) {
    const auto& c = record.arcs()[a];
    arcs.push_back({{"from", model.states[model.arcs[a].from]},
                    {"stimulus", model.arcs[a].stimulus},
                    {"response", model.arcs[a].response.to_string()},
                    {"generated", c.generated},
                    {"successes", c.successes},
                    {"continue_failures", c.continue_failures},
                    {"stop_failures", c.stop_failures}});
  }
  auto& tests = j["tests"] = json::array();
  for (const auto& v : record.tests()) {
    std::string outcomes(v.outcomes.size(), ' ');
    std::transform(v.outcomes.begin(), v.outcomes.end(), outcomes.begin(),
                   [](StepOutcome o) { return static_cast<char>(o); });
    json steps = json::array();
    for (ArcIndex a : v.arcs) steps.push_back(model.arcs[a].stimulus);
    json rec = {{"id", v.test_id},
                {"method", method_name(v.method)},
                {"verdict", v.failed() ? "fail" : "pass"},
                {"steps", std::move(steps)},
                {"outcomes", outcomes}};
    if (!v.notes.empty()) rec["notes"] = v.notes;
    if (!v.cause.empty()) rec["cause"] = v.cause;
    tests.push_back(std::move(rec));
  }
  return j.dump(1) + "\n";
}

TestRecord read_record(std::string_view text, const UsageModel& model) {
  try {
    json j = json::parse(text);
    if (j.value("format", "") != "ucert-record/1") throw ModelError("record file: unsupported format");
    if (j.at("model").get<std::string>() != model.name)
      throw ModelError("record file was produced for model '" + j.at("model").get<std::string>() + "'");
    SuiteMetadata meta;
    meta.model = model.name;
    const auto& s = j.at("suite");
    meta.prng = s.at("prng").get<std::string>();
    meta.seed = s.at("seed").get<std::uint64_t>();
    meta.min_coverage = s.at("min_coverage").get<bool>();
    meta.weighted = s.at("weighted").get<std::size_t>();
    meta.random = s.at("random").get<std::size_t>();
    TestRecord record(model, meta, j.at("target").get<std::string>());

    for (const auto& t : j.at("tests")) {
      TestVerdict v;
      v.test_id = t.at("id").get<std::size_t>();
      auto method = parse_method(t.at("method").get<std::string>());
      if (!method) throw ModelError("record file: unknown method");
      v.method = *method;
      StateIndex at = model.source;
      for (const auto& k : t.at("steps")) {
        auto arc = model.find_arc(at, k.get<std::string>());
        if (!arc) throw ModelError("record file: test " + std::to_string(v.test_id) + " leaves the model");
        v.arcs.push_back(*arc);
        at = model.arcs[*arc].to;
      }
      for (char c : t.at("outcomes").get<std::string>()) v.outcomes.push_back(static_cast<StepOutcome>(c));
      if (t.contains("notes")) v.notes = t["notes"].get<std::vector<std::string>>();
      if (t.contains("cause")) v.cause = t["cause"].get<std::string>();
      record.add(std::move(v));
    }
    // Per-arc counters are derived; cross-check against the stored ones.
    const auto& arcs = j.at("arcs");
    if (arcs.size() != model.arcs.size()) throw ModelError("record file: arc table does not match model");
    for (ArcIndex a = 0; a < model.arcs.size(); ++a) {
      const auto& ja = arcs[a];
      const auto& c = record.arcs()[a];
      if (ja.at("stimulus").get<std::string>() != model.arcs[a].stimulus ||
          ja.at("generated").get<std::uint64_t>() != c.generated ||
          ja.at("successes").get<std::uint64_t>() != c.successes ||
          ja.at("continue_failures").get<std::uint64_t>() != c.continue_failures ||
          ja.at("stop_failures").get<std::uint64_t>() != c.stop_failures)
        throw ModelError("record file: arc counters disagree with the test log at arc " + std::to_string(a));
    }
    return record;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("record file: ") + e.what());
  }
}

double arc_reliability(std::uint64_t successes, std::uint64_t failures) {
  return (static_cast<double>(successes) + 1.0) /
         (static_cast<double>(successes) + static_cast<double>(failures) + 2.0);
}

double single_use_reliability(const UsageModel& model, const TestRecord& record) {
  const std::size_t n = model.state_count();
  std::vector<Eigen::Index> slot(n, -1);
  Eigen::Index m = 0;
  for (StateIndex s = 0; s < n; ++s)
    if (s != model.sink) slot[s] = m++;

  // (I - M) R = c over transient states.
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  for (ArcIndex i = 0; i < model.arcs.size(); ++i) {
    const Arc& arc = model.arcs[i];
    if (arc.from == model.sink) continue;
    const auto& cnt = record.arcs().at(i);
    double w = arc.probability * arc_reliability(cnt.successes, cnt.failures());
    if (arc.to == model.sink)
      c(slot[arc.from]) += w;
    else
      a(slot[arc.from], slot[arc.to]) -= w;
  }
  Eigen::VectorXd r = solve_dense(a, c);
  return r(slot[model.source]);
}

double kullback_discrimination(const UsageModel& model, const std::vector<std::uint64_t>& executed) {
  auto pi = stationary_distribution(model);
  double k = 0.0;
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    auto out = model.outgoing(s);
    if (out.empty()) continue;
    double total = static_cast<double>(out.size());
    for (ArcIndex a : out) total += static_cast<double>(executed.at(a));
    double row = 0.0;
    for (ArcIndex a : out) {
      double u = model.arcs[a].probability;
      double t = (static_cast<double>(executed[a]) + 1.0) / total;
      row += u * std::log2(u / t);
    }
    k += pi[s] * row;
  }
  return k;
}

double kullback_discrimination(const UsageModel& model, const TestRecord& record) {
  return kullback_discrimination(model, record.executed_counts());
}

double relative_kullback(const UsageModel& model, const TestRecord& record) {
  double k0 = kullback_discrimination(model, std::vector<std::uint64_t>(model.arcs.size(), 0));
  if (k0 <= 0.0) return 0.0;
  return 100.0 * kullback_discrimination(model, record) / k0;
}

}  // namespace ucert
