#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ucert/canonical.hpp"
#include "ucert/certify.hpp"
#include "ucert/harness.hpp"
#include "ucert/model.hpp"
#include "ucert/server.hpp"
#include "ucert/testgen.hpp"

namespace ucert {

enum class ExitCode : int {
  certified = 0,
  not_certified = 1,
  no_evidence = 2,
  invalid_config = 3,
  validation_failure = 4,
  unreachable = 5,
  model_error = 6,
};

std::string default_model_path();

struct PipelineConfig {
  std::string model_path = default_model_path();
  std::string canonical_path;  // empty: built-in table
  SuiteSpec suite;
  std::string variant = "fixed";
  std::vector<std::string> bugs;
  std::string server_url;  // empty: serve locally on a free port
  std::string out_dir = "ucert-out";
  double threshold = 0.99;
  bool keep_partial = false;
  int jobs = 1;

  /// Empty when the configuration is usable.
  std::vector<std::string> problems() const;
};

/// Raised for configuration, model and validation problems; carries the exit code.
class PipelineError : public std::runtime_error {
 public:
  PipelineError(ExitCode code, std::string reason, const std::string& what)
      : std::runtime_error(what), code_(code), reason_(std::move(reason)) {}
  ExitCode code() const { return code_; }
  const std::string& reason() const { return reason_; }

 private:
  ExitCode code_;
  std::string reason_;
};

FaultConfig faults_for(const std::string& variant, const std::vector<std::string>& bugs);

/// Parses, fills and validates; throws PipelineError (model_error / validation_failure).
UsageModel load_checked_model(const std::string& path);
CanonicalTable load_checked_table(const UsageModel& model, const std::string& path);

/// Either a locally served controller or an external URL.
class Target {
 public:
  explicit Target(const PipelineConfig& config);
  ~Target();

  const std::string& url() const { return url_; }
  const std::string& description() const { return description_; }
  SessionApiFactory factory() const;

 private:
  std::unique_ptr<DesServer> server_;
  std::string url_;
  std::string description_;
};

TestRecord run_suite(const Suite& suite, const UsageModel& model, const CanonicalTable& table,
                     const Target& target, const PipelineConfig& config);

struct Certification {
  bool certified = false;
  ExitCode code = ExitCode::not_certified;
  std::string reason;  // certified, failed_tests, below_threshold, no_evidence, ...
  double single_use_reliability = 0.0;
  double threshold = 0.99;
  RecordTotals totals;
  std::string message;
};

Certification certify(const CertificationReport& report, double threshold);
std::string render_certification_json(const Certification& c);

struct PipelineResult {
  Certification certification;
  std::optional<CertificationReport> report;
};

/// Writes suite.jsonl, record.json, analysis.{txt,json}, report.{txt,json}
/// and certification.json under config.out_dir. Errors come back as a
/// certification with the matching exit code (and certification.json when
/// the output directory is usable).
PipelineResult run_pipeline(const PipelineConfig& config);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace ucert
