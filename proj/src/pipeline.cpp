#include "ucert/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ucert/markov.hpp"

namespace ucert {

using nlohmann::json;

std::string default_model_path() { return std::string(UCERT_DATA_DIR) + "/des_usage_model.tml"; }

std::vector<std::string> PipelineConfig::problems() const {
  std::vector<std::string> out;
  if (!(threshold > 0.0 && threshold < 1.0)) out.push_back("threshold must lie in (0,1)");
  if (jobs < 1) out.push_back("jobs must be at least 1");
  if (!FaultConfig::preset(variant)) out.push_back("unknown variant '" + variant + "'");
  for (const auto& b : bugs)
    if (!FaultConfig{}.enable(b)) out.push_back("unknown bug '" + b + "'");
  if (!bugs.empty() && variant != "custom") out.push_back("--bug requires --variant custom");
  if (!server_url.empty() && (!bugs.empty() || variant != "fixed"))
    out.push_back("variant and bugs only apply to a locally served controller");
  if (model_path.empty()) out.push_back("model path is empty");
  if (out_dir.empty()) out.push_back("output directory is empty");
  return out;
}

FaultConfig faults_for(const std::string& variant, const std::vector<std::string>& bugs) {
  auto f = FaultConfig::preset(variant);
  if (!f) throw PipelineError(ExitCode::invalid_config, "invalid_config", "unknown variant '" + variant + "'");
  for (const auto& b : bugs)
    if (!f->enable(b)) throw PipelineError(ExitCode::invalid_config, "invalid_config", "unknown bug '" + b + "'");
  return *f;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << contents;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

UsageModel load_checked_model(const std::string& path) {
  UsageModel model;
  try {
    model = load_model(path);
  } catch (const ModelError& e) {
    throw PipelineError(ExitCode::model_error, "model_parse_error", path + ": " + e.what());
  }
  auto violations = validate_model(model);
  if (!violations.empty()) {
    std::string msg = path + ": model is not valid";
    for (const auto& v : violations) msg += "\n  " + v;
    throw PipelineError(ExitCode::validation_failure, "validation_failure", msg);
  }
  return model;
}

CanonicalTable load_checked_table(const UsageModel& model, const std::string& path) {
  CanonicalTable table;
  try {
    table = path.empty() ? des_canonical_table() : load_canonical_table(path);
  } catch (const std::exception& e) {
    throw PipelineError(ExitCode::validation_failure, "validation_failure", e.what());
  }
  auto issues = check_canonical_consistency(model, table);
  if (!issues.empty()) {
    std::string msg = "canonical table does not fit the model";
    for (const auto& i : issues) msg += "\n  " + i;
    throw PipelineError(ExitCode::validation_failure, "validation_failure", msg);
  }
  return table;
}

Target::Target(const PipelineConfig& config) {
  if (!config.server_url.empty()) {
    url_ = config.server_url;
    description_ = config.server_url;
    return;
  }
  ServerConfig sc;
  sc.port = 0;
  sc.enable_reset = true;
  sc.faults = faults_for(config.variant, config.bugs);
  server_ = std::make_unique<DesServer>(sc);
  server_->start();
  url_ = server_->base_url();
  description_ = "local:" + sc.faults.describe();
}

Target::~Target() = default;

SessionApiFactory Target::factory() const {
  std::string url = url_;
  return [url]() -> std::unique_ptr<SessionApi> { return std::make_unique<HttpSessionApi>(url); };
}

TestRecord run_suite(const Suite& suite, const UsageModel& model, const CanonicalTable& table,
                     const Target& target, const PipelineConfig& config) {
  ExecutionOptions opts;
  opts.jobs = config.jobs;
  opts.keep_partial = config.keep_partial;
  opts.target_description = target.description();
  try {
    return execute_suite(suite, model, table, target.factory(), opts);
  } catch (const TargetUnreachable& e) {
    throw PipelineError(ExitCode::unreachable, "unreachable", std::string(e.what()) + " (" + target.url() + ")");
  }
}

Certification certify(const CertificationReport& report, double threshold) {
  Certification c;
  c.threshold = threshold;
  c.totals = report.totals;
  c.single_use_reliability = report.single_use_reliability;
  std::ostringstream msg;
  msg.precision(9);
  if (report.totals.executed_tests == 0) {
    c.code = ExitCode::no_evidence;
    c.reason = "no_evidence";
    msg << "no test was executed; reliability " << c.single_use_reliability << " reflects the prior only";
  } else if (report.totals.failed_tests > 0) {
    c.reason = "failed_tests";
    msg << report.totals.failed_tests << " of " << report.totals.executed_tests << " tests failed";
  } else if (c.single_use_reliability < threshold) {
    c.reason = "below_threshold";
    msg << "single use reliability " << c.single_use_reliability << " below " << threshold;
  } else {
    c.certified = true;
    c.code = ExitCode::certified;
    c.reason = "certified";
    msg << "all " << report.totals.executed_tests << " tests passed; single use reliability "
        << c.single_use_reliability << " >= " << threshold;
  }
  c.message = msg.str();
  return c;
}

std::string render_certification_json(const Certification& c) {
  json j = {{"format", "ucert-certification/1"},
            {"certified", c.certified},
            {"exit_code", static_cast<int>(c.code)},
            {"reason", c.reason},
            {"message", c.message},
            {"single_use_reliability", c.single_use_reliability},
            {"threshold", c.threshold},
            {"executed_tests", c.totals.executed_tests},
            {"failed_tests", c.totals.failed_tests},
            {"executed_stimuli", c.totals.executed_stimuli},
            {"failed_stimuli", c.totals.failed_stimuli}};
  return j.dump(2) + "\n";
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  PipelineResult result;
  auto fail = [&](ExitCode code, std::string reason, std::string message) {
    result.certification.code = code;
    result.certification.reason = std::move(reason);
    result.certification.message = std::move(message);
    result.certification.threshold = config.threshold;
    std::error_code ec;
    if (!config.out_dir.empty() && fs::is_directory(config.out_dir, ec))
      write_file(config.out_dir + "/certification.json", render_certification_json(result.certification));
    return result;
  };

  auto problems = config.problems();
  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    return fail(ExitCode::invalid_config, "invalid_config", msg);
  }
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) return fail(ExitCode::invalid_config, "invalid_config", "cannot create " + config.out_dir + ": " + ec.message());

  try {
    UsageModel model = load_checked_model(config.model_path);
    CanonicalTable table = load_checked_table(model, config.canonical_path);

    auto stats = analyze_chain(model);
    write_file(config.out_dir + "/analysis.txt", render_analysis_text(model, stats));
    write_file(config.out_dir + "/analysis.json", render_analysis_json(model, stats));

    Suite suite = compose_suite(model, config.suite);
    write_file(config.out_dir + "/suite.jsonl", write_suite(suite));

    Target target(config);
    TestRecord record = run_suite(suite, model, table, target, config);
    write_file(config.out_dir + "/record.json", write_record(model, record));

    auto report = build_report(model, record);
    write_file(config.out_dir + "/report.txt", render_report_text(model, report));
    write_file(config.out_dir + "/report.json", render_report_json(model, report));

    result.certification = certify(report, config.threshold);
    result.report = std::move(report);
    write_file(config.out_dir + "/certification.json", render_certification_json(result.certification));
    return result;
  } catch (const PipelineError& e) {
    return fail(e.code(), e.reason(), e.what());
  } catch (const std::exception& e) {
    return fail(ExitCode::invalid_config, "error", e.what());
  }
}

}  // namespace ucert
