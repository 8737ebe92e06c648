// ucert: usage-model driven test generation, execution and certification.
#include <csignal>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "ucert/markov.hpp"
#include "ucert/pipeline.hpp"

using namespace ucert;

namespace {

struct Options {
  PipelineConfig pipeline;
  std::string suite_path;
  std::string record_path;
  std::string server_config;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool enable_reset = false;
  bool json = false;
};

void add_model(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.pipeline.model_path, "Usage model file")->envname("UCERT_MODEL");
  cmd->add_option("--canonical", o.pipeline.canonical_path, "Canonical state table (default: built-in)")
      ->envname("UCERT_CANONICAL");
}

void add_suite(CLI::App* cmd, Options& o) {
  auto& s = o.pipeline.suite;
  cmd->add_option("--random", s.random, "Number of random tests")->envname("UCERT_RANDOM");
  cmd->add_option("--weighted", s.weighted, "Number of weighted tests")->envname("UCERT_WEIGHTED");
  cmd->add_flag("--min-coverage,!--no-min-coverage", s.min_coverage, "Include the minimum-coverage tests")
      ->envname("UCERT_MIN_COVERAGE");
  cmd->add_option("--seed", s.seed, "Random generation seed")->envname("UCERT_SEED");
}

void add_target(CLI::App* cmd, Options& o) {
  cmd->add_option("--variant", o.pipeline.variant, "Local controller variant: fixed, new, custom")
      ->envname("UCERT_VARIANT");
  cmd->add_option("--bug", o.pipeline.bugs, "Fault to enable with --variant custom (repeatable)")
      ->envname("UCERT_BUGS")
      ->delimiter(',');
  cmd->add_option("--server-url", o.pipeline.server_url, "Run against an external server instead")
      ->envname("UCERT_SERVER_URL");
  cmd->add_flag("--keep-partial", o.pipeline.keep_partial, "Keep the record if the server goes away")
      ->envname("UCERT_KEEP_PARTIAL");
  cmd->add_option("--jobs", o.pipeline.jobs, "Concurrent test cases")->envname("UCERT_JOBS");
}

void add_out(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.pipeline.out_dir, "Output directory")->envname("UCERT_OUT");
}

void add_threshold(CLI::App* cmd, Options& o) {
  cmd->add_option("--threshold", o.pipeline.threshold, "Single use reliability required")
      ->envname("UCERT_THRESHOLD");
}

void prepare_out(const Options& o) {
  std::filesystem::create_directories(o.pipeline.out_dir);
}

void check_config(const Options& o) {
  auto problems = o.pipeline.problems();
  if (problems.empty()) return;
  std::string msg;
  for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
  throw PipelineError(ExitCode::invalid_config, "invalid_config", msg);
}

int cmd_validate(const Options& o) {
  auto model = load_checked_model(o.pipeline.model_path);
  load_checked_table(model, o.pipeline.canonical_path);
  std::cout << "model " << model.name << ": " << model.states.size() << " states, " << model.arcs.size()
            << " arcs, valid\n";
  return 0;
}

int cmd_analyze(const Options& o) {
  auto model = load_checked_model(o.pipeline.model_path);
  auto stats = analyze_chain(model);
  std::cout << (o.json ? render_analysis_json(model, stats) : render_analysis_text(model, stats));
  return 0;
}

int cmd_generate(const Options& o) {
  check_config(o);
  auto model = load_checked_model(o.pipeline.model_path);
  auto suite = compose_suite(model, o.pipeline.suite);
  prepare_out(o);
  auto path = o.pipeline.out_dir + "/suite.jsonl";
  write_file(path, write_suite(suite));
  for (const auto& w : suite.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << suite.cases.size() << " tests (" << suite.total_steps() << " steps) to " << path
            << "\n";
  return 0;
}

DesServer* g_server = nullptr;

int cmd_serve(const Options& o) {
  ServerConfig sc;
  sc.host = o.host;
  sc.port = o.port;
  sc.enable_reset = o.enable_reset;
  sc.faults = faults_for(o.pipeline.variant, o.pipeline.bugs);
  if (!o.server_config.empty()) sc = ServerConfig::from_file(o.server_config, sc);
  DesServer server(sc);
  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  std::cerr << "serving " << sc.faults.describe() << " controller on " << sc.host << ":" << sc.port << "\n";
  server.run();
  g_server = nullptr;
  return 0;
}

int cmd_run(const Options& o) {
  check_config(o);
  auto model = load_checked_model(o.pipeline.model_path);
  auto table = load_checked_table(model, o.pipeline.canonical_path);
  Suite suite;
  try {
    suite = read_suite(read_file(o.suite_path), model);
  } catch (const ModelError& e) {
    throw PipelineError(ExitCode::validation_failure, "validation_failure", o.suite_path + ": " + e.what());
  }
  prepare_out(o);
  Target target(o.pipeline);
  auto record = run_suite(suite, model, table, target, o.pipeline);
  auto path = o.pipeline.out_dir + "/record.json";
  write_file(path, write_record(model, record));
  auto t = record.totals();
  std::cout << "executed " << t.executed_tests << " tests, " << t.failed_tests << " failed; record in " << path
            << "\n";
  return 0;
}

int report_and_certify(const UsageModel& model, const TestRecord& record, const Options& o) {
  auto report = build_report(model, record);
  write_file(o.pipeline.out_dir + "/report.txt", render_report_text(model, report));
  write_file(o.pipeline.out_dir + "/report.json", render_report_json(model, report));
  auto c = certify(report, o.pipeline.threshold);
  write_file(o.pipeline.out_dir + "/certification.json", render_certification_json(c));
  std::cout << render_report_text(model, report) << "\n" << c.reason << ": " << c.message << "\n";
  return static_cast<int>(c.code);
}

int cmd_report(const Options& o) {
  check_config(o);
  auto model = load_checked_model(o.pipeline.model_path);
  TestRecord record;
  try {
    record = read_record(read_file(o.record_path), model);
  } catch (const std::exception& e) {
    throw PipelineError(ExitCode::validation_failure, "validation_failure", o.record_path + ": " + e.what());
  }
  prepare_out(o);
  return report_and_certify(model, record, o);
}

int cmd_certify(const Options& o) {
  auto result = run_pipeline(o.pipeline);
  if (result.report) {
    std::cout << render_report_text(load_model(o.pipeline.model_path), *result.report) << "\n";
  }
  const auto& c = result.certification;
  (c.certified ? std::cout : std::cerr) << c.reason << ": " << c.message << "\n";
  return static_cast<int>(c.code);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statistical usage-based testing and certification"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Parse and validate a usage model");
  add_model(validate, o);

  auto* analyze = app.add_subcommand("analyze", "Markov analysis of a usage model");
  add_model(analyze, o);
  analyze->add_flag("--json", o.json, "JSON output");

  auto* generate = app.add_subcommand("generate", "Generate a test suite");
  add_model(generate, o);
  add_suite(generate, o);
  add_out(generate, o);

  auto* serve = app.add_subcommand("serve", "Serve the Data Exchange Controller");
  add_target(serve, o);
  serve->add_option("--host", o.host)->envname("UCERT_HOST");
  serve->add_option("--port", o.port)->envname("UCERT_PORT");
  serve->add_flag("--enable-reset", o.enable_reset, "Enable POST /reset")->envname("UCERT_ENABLE_RESET");
  serve->add_option("--config", o.server_config, "JSON server configuration")->envname("UCERT_SERVER_CONFIG");

  auto* run = app.add_subcommand("run", "Execute a suite and write a test record");
  add_model(run, o);
  add_target(run, o);
  add_out(run, o);
  run->add_option("--suite", o.suite_path, "Suite file from 'generate'")->required();

  auto* report = app.add_subcommand("report", "Certification report from a test record");
  add_model(report, o);
  add_out(report, o);
  add_threshold(report, o);
  report->add_option("--record", o.record_path, "Record file from 'run'")->required();

  auto* certify_cmd = app.add_subcommand("certify", "Generate, run, report and certify");
  add_model(certify_cmd, o);
  add_suite(certify_cmd, o);
  add_target(certify_cmd, o);
  add_out(certify_cmd, o);
  add_threshold(certify_cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::invalid_config);
  }

  try {
    if (*validate) return cmd_validate(o);
    if (*analyze) return cmd_analyze(o);
    if (*generate) return cmd_generate(o);
    if (*serve) return cmd_serve(o);
    if (*run) return cmd_run(o);
    if (*report) return cmd_report(o);
    return cmd_certify(o);
  } catch (const PipelineError& e) {
    std::cerr << e.reason() << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::invalid_config);
  }
}
