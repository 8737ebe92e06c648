#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucert/model.hpp"
#include "ucert/testgen.hpp"

namespace ucert {

enum class StepOutcome : char {
  pass = 'P',
  continue_failure = 'C',
  stop_failure = 'S',
  not_executed = '-',   // skipped after a stop failure or harness error
  harness_error = 'H',  // binding could not be built; not a system failure
};

struct ArcOutcomeCounter {
  std::uint64_t generated = 0;
  std::uint64_t successes = 0;
  std::uint64_t continue_failures = 0;
  std::uint64_t stop_failures = 0;

  std::uint64_t failures() const { return continue_failures + stop_failures; }
  std::uint64_t executed() const { return successes + failures(); }
  bool operator==(const ArcOutcomeCounter&) const = default;
};

struct TestVerdict {
  std::size_t test_id = 0;
  Method method = Method::random;
  std::vector<ArcIndex> arcs;
  std::vector<StepOutcome> outcomes;  // one per arc
  std::vector<std::string> notes;     // one line per failing step
  std::string cause;                  // e.g. "transport" for stop failures without a reply

  bool failed() const;
  bool executed() const;
  std::optional<std::size_t> first_failure() const;
};

struct RecordTotals {
  std::uint64_t generated_stimuli = 0;
  std::uint64_t executed_stimuli = 0;
  std::uint64_t failed_stimuli = 0;
  std::uint64_t generated_tests = 0;
  std::uint64_t executed_tests = 0;
  std::uint64_t failed_tests = 0;
  std::uint64_t harness_errors = 0;
};

/// Accumulated evidence from executing a suite. Single writer.
class TestRecord {
 public:
  TestRecord() = default;
  explicit TestRecord(const UsageModel& model, SuiteMetadata suite = {}, std::string target = {});

  void add(TestVerdict verdict);

  const std::vector<ArcOutcomeCounter>& arcs() const { return arcs_; }
  const std::vector<TestVerdict>& tests() const { return tests_; }
  const SuiteMetadata& suite() const { return suite_; }
  const std::string& target() const { return target_; }
  const std::string& model_name() const { return model_name_; }
  RecordTotals totals() const;

  /// Executed traversals per arc.
  std::vector<std::uint64_t> executed_counts() const;

  /// Direct counter access for building records by hand.
  ArcOutcomeCounter& counter(ArcIndex a) { return arcs_.at(a); }

 private:
  std::string model_name_;
  SuiteMetadata suite_;
  std::string target_;
  std::vector<ArcOutcomeCounter> arcs_;
  std::vector<TestVerdict> tests_;
  std::uint64_t harness_errors_ = 0;
};

/// A record in which every step of every case passed.
TestRecord all_pass_record(const UsageModel& model, const Suite& suite);

std::string write_record(const UsageModel& model, const TestRecord& record);
TestRecord read_record(std::string_view text, const UsageModel& model);

/// Posterior mean of a Beta(1,1) prior after s successes and f failures.
double arc_reliability(std::uint64_t successes, std::uint64_t failures);

/// Probability that a use drawn from the usage model runs source-to-sink
/// without failure: R(sink) = 1, R(s) = sum p(a) r(a) R(target(a)).
double single_use_reliability(const UsageModel& model, const TestRecord& record);

/// Occupancy-weighted discrimination (bits) of the Laplace-smoothed testing
/// chain from the usage chain:
///   K = sum_s pi(s) sum_{a in out(s)} p(a) log2(p(a) / t(a)),
///   t(a) = (c(a) + 1) / (sum_{out(s)} c + |out(s)|).
double kullback_discrimination(const UsageModel& model, const std::vector<std::uint64_t>& executed);
double kullback_discrimination(const UsageModel& model, const TestRecord& record);

/// 100 * K(record) / K(no testing); 0 when the zero-test value is 0.
double relative_kullback(const UsageModel& model, const TestRecord& record);

struct ReportRow {
  std::string stimulus;
  std::string response;
  std::uint64_t generated = 0;
  std::uint64_t executed = 0;
  std::uint64_t failed = 0;
};

struct FailureSignature {
  std::string state;      // expected state before the failing step
  std::string arc_label;  // failing stimulus/response
  std::string fragment;   // up to three preceding stimuli, then the failing one
  std::uint64_t count = 0;
};

struct CertificationReport {
  std::string model;
  std::string target;
  std::vector<ReportRow> rows;  // sorted by stimulus, then response
  RecordTotals totals;
  double single_use_reliability = 0.0;
  double kullback = 0.0;
  double relative_kullback_percent = 0.0;
  std::vector<double> arc_reliabilities;
  std::vector<FailureSignature> failures;
};

CertificationReport build_report(const UsageModel& model, const TestRecord& record);
std::string render_report_text(const UsageModel& model, const CertificationReport& report);
std::string render_report_json(const UsageModel& model, const CertificationReport& report);

}  // namespace ucert
