#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ucert/certify.hpp"

namespace ucert {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kSurEstimator =
    "per-arc Beta(1,1) posterior mean (s+1)/(s+f+2), composed through the usage chain";
constexpr std::string_view kKullbackEstimator =
    "occupancy-weighted log2 discrimination of the Laplace-smoothed testing chain from the usage "
    "chain; relative = 100 * K / K(no tests)";

std::string fragment_for(const UsageModel& model, const TestVerdict& v, std::size_t k) {
  std::string out;
  std::size_t from = k >= 3 ? k - 3 : 0;
  for (std::size_t i = from; i < k; ++i) out += model.arcs[v.arcs[i]].stimulus + " ";
  out += "[" + model.arcs[v.arcs[k]].stimulus + "]";
  return out;
}

}  // namespace

CertificationReport build_report(const UsageModel& model, const TestRecord& record) {
  CertificationReport r;
  r.model = model.name;
  r.target = record.target();

  std::map<std::pair<std::string, std::string>, ReportRow> rows;
  for (ArcIndex a = 0; a < model.arcs.size(); ++a) {
    const Arc& arc = model.arcs[a];
    const auto& c = record.arcs()[a];
    auto& row = rows[{arc.stimulus, arc.response.to_string()}];
    row.stimulus = arc.stimulus;
    row.response = arc.response.to_string();
    row.generated += c.generated;
    row.executed += c.executed();
    row.failed += c.failures();
    r.arc_reliabilities.push_back(arc_reliability(c.successes, c.failures()));
  }
  for (auto& [key, row] : rows) r.rows.push_back(row);

  r.totals = record.totals();
  r.single_use_reliability = single_use_reliability(model, record);
  r.kullback = kullback_discrimination(model, record);
  r.relative_kullback_percent = relative_kullback(model, record);

  std::map<std::pair<std::string, std::string>, FailureSignature> sigs;
  for (const auto& v : record.tests()) {
    auto k = v.first_failure();
    if (!k) continue;
    StateIndex before = model.arcs[v.arcs[*k]].from;
    auto& sig = sigs[{model.states[before], model.arcs[v.arcs[*k]].label()}];
    if (sig.count == 0) {
      sig.state = model.states[before];
      sig.arc_label = model.arcs[v.arcs[*k]].label();
      sig.fragment = fragment_for(model, v, *k);
    }
    ++sig.count;
  }
  for (auto& [key, sig] : sigs) r.failures.push_back(sig);
  return r;
}

std::string render_report_text(const UsageModel& model, const CertificationReport& r) {
  std::ostringstream out;
  out << "Certification report: " << r.model << "\n";
  if (!r.target.empty()) out << "  target " << r.target << "\n";
  out << "  reliability estimator: " << kSurEstimator << "\n"
      << "  discrimination: " << kKullbackEstimator << "\n\n";

  out << std::left << std::setw(26) << "Stimulus/Response" << std::right << std::setw(12)
      << "Generated" << std::setw(12) << "Executed" << std::setw(10) << "Failed" << "\n";
  for (const auto& row : r.rows)
    out << std::left << std::setw(26) << (row.stimulus + "/" + row.response) << std::right
        << std::setw(12) << row.generated << std::setw(12) << row.executed << std::setw(10)
        << row.failed << "\n";
  out << std::left << std::setw(26) << "Total stimuli" << std::right << std::setw(12)
      << r.totals.generated_stimuli << std::setw(12) << r.totals.executed_stimuli << std::setw(10)
      << r.totals.failed_stimuli << "\n";
  out << std::left << std::setw(26) << "Total tests" << std::right << std::setw(12)
      << r.totals.generated_tests << std::setw(12) << r.totals.executed_tests << std::setw(10)
      << r.totals.failed_tests << "\n";
  if (r.totals.harness_errors)
    out << "Harness errors (not counted as failures): " << r.totals.harness_errors << "\n";

  out << "\nSingle Use Reliability            " << std::setprecision(9) << std::fixed
      << r.single_use_reliability << "\n"
      << "Kullback discrimination (bits)    " << std::scientific << std::setprecision(6)
      << r.kullback << "\n"
      << "Relative Kullback discrimination  " << std::setprecision(6) << r.relative_kullback_percent
      << " %\n";

  out << "\nArc reliabilities\n" << std::defaultfloat;
  for (ArcIndex a = 0; a < model.arcs.size(); ++a)
    out << "  " << std::left << std::setw(14) << model.states[model.arcs[a].from] << std::setw(26)
        << model.arcs[a].label() << std::right << std::fixed << std::setprecision(9)
        << r.arc_reliabilities[a] << "\n";

  if (!r.failures.empty()) {
    out << "\nFailure signatures (first failing step per test)\n";
    for (const auto& f : r.failures)
      out << "  " << std::left << std::setw(14) << f.state << std::setw(26) << f.arc_label
          << std::setw(28) << f.fragment << std::right << std::setw(8) << f.count << "\n";
  }
  return out.str();
}

std::string render_report_json(const UsageModel& model, const CertificationReport& r) {
  json j;
  j["format"] = "ucert-report/1";
  j["model"] = r.model;
  j["target"] = r.target;
  j["estimators"] = {{"single_use_reliability", kSurEstimator},
                     {"kullback", kKullbackEstimator}};
  auto& rows = j["rows"] = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"stimulus", row.stimulus},
                    {"response", row.response},
                    {"generated", row.generated},
                    {"executed", row.executed},
                    {"failed", row.failed}});
  j["totals"] = {{"generated_stimuli", r.totals.generated_stimuli},
                 {"executed_stimuli", r.totals.executed_stimuli},
                 {"failed_stimuli", r.totals.failed_stimuli},
                 {"generated_tests", r.totals.generated_tests},
                 {"executed_tests", r.totals.executed_tests},
                 {"failed_tests", r.totals.failed_tests},
                 {"harness_errors", r.totals.harness_errors}};
  j["single_use_reliability"] = r.single_use_reliability;
  j["kullback_bits"] = r.kullback;
  j["relative_kullback_percent"] = r.relative_kullback_percent;
  auto& arcs = j["arc_reliabilities"] = json::array();
  for (ArcIndex a = 0; a < model.arcs.size(); ++a)
    arcs.push_back({{"from", model.states[model.arcs[a].from]},
                    {"arc", model.arcs[a].label()},
                    {"reliability", r.arc_reliabilities[a]}});
  auto& fails = j["failure_signatures"] = json::array();
  for (const auto& f : r.failures)
    fails.push_back({{"state", f.state},
                     {"arc", f.arc_label},
                     {"fragment", f.fragment},
                     {"count", f.count}});
  return j.dump(2) + "\n";
}

}  // namespace ucert
