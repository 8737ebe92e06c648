#include <sstream>

#include <json.hpp>

#include "ucert/testgen.hpp"

namespace ucert {

using json = nlohmann::ordered_json;

std::string write_suite(const Suite& suite) {
  std::string out;
  json meta = {{"format", suite.meta.format},
               {"model", suite.meta.model},
               {"prng", suite.meta.prng},
               {"seed", suite.meta.seed},
               {"min_coverage", suite.meta.min_coverage},
               {"weighted", suite.meta.weighted},
               {"random", suite.meta.random},
               {"cases", suite.cases.size()},
               {"steps", suite.total_steps()},
               {"warnings", suite.warnings}};
  out += meta.dump() + "\n";
  for (const auto& tc : suite.cases) {
    json steps = json::array();
    for (const auto& s : tc.steps) steps.push_back(s.stimulus);
    json rec = {{"id", tc.id}, {"method", method_name(tc.method)}};
    rec["stream"] = tc.stream ? json(*tc.stream) : json(nullptr);
    rec["steps"] = std::move(steps);
    out += rec.dump() + "\n";
  }
  return out;
}

Suite read_suite(std::string_view text, const UsageModel& model) {
  Suite suite;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ModelError(std::string("suite file: ") + e.what(), line_no, 1);
    }
    try {
      if (!have_meta) {
        if (j.value("format", "") != "ucert-suite/1")
          throw ModelError("suite file: unsupported format", line_no, 1);
        suite.meta.model = j.at("model").get<std::string>();
        suite.meta.prng = j.at("prng").get<std::string>();
        suite.meta.seed = j.at("seed").get<std::uint64_t>();
        suite.meta.min_coverage = j.at("min_coverage").get<bool>();
        suite.meta.weighted = j.at("weighted").get<std::size_t>();
        suite.meta.random = j.at("random").get<std::size_t>();
        if (j.contains("warnings")) suite.warnings = j["warnings"].get<std::vector<std::string>>();
        if (suite.meta.model != model.name)
          throw ModelError("suite was generated for model '" + suite.meta.model + "', not '" +
                               model.name + "'",
                           line_no, 1);
        have_meta = true;
        continue;
      }
      auto method = parse_method(j.at("method").get<std::string>());
      if (!method) throw ModelError("suite file: unknown method", line_no, 1);
      std::vector<ArcIndex> arcs;
      StateIndex at = model.source;
      for (const auto& key : j.at("steps")) {
        auto k = key.get<std::string>();
        if (at == model.sink) throw ModelError("suite file: case continues past the sink", line_no, 1);
        auto arc = model.find_arc(at, k);
        if (!arc)
          throw ModelError("suite file: stimulus " + k + " is not applicable in state " +
                               model.states[at],
                           line_no, 1);
        arcs.push_back(*arc);
        at = model.arcs[*arc].to;
      }
      if (at != model.sink) throw ModelError("suite file: case does not reach the sink", line_no, 1);
      TestCase tc = make_test_case(model, arcs, j.at("id").get<std::size_t>(), *method);
      if (!j.at("stream").is_null()) tc.stream = j["stream"].get<std::uint64_t>();
      suite.cases.push_back(std::move(tc));
    } catch (const json::exception& e) {
      throw ModelError(std::string("suite file: ") + e.what(), line_no, 1);
    }
  }
  if (!have_meta) throw ModelError("suite file: missing metadata line");
  return suite;
}

}  // namespace ucert
