#include "ucert/canonical.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ucert {

namespace {

char attr_char(Attr a) {
  switch (a) {
    case Attr::zero: return '0';
    case Attr::one: return '1';
    case Attr::na: return '-';
  }
  return '?';
}

Attr parse_attr(const std::string& tok, std::size_t line) {
  if (tok == "0") return Attr::zero;
  if (tok == "1") return Attr::one;
  if (tok == "-") return Attr::na;
  throw ModelError("canonical attribute must be 0, 1 or '-', got '" + tok + "'", line, 1);
}

bool has(const ResponseLabel& r, std::string_view atom) {
  return std::find(r.tokens.begin(), r.tokens.end(), atom) != r.tokens.end();
}

bool is_error_response(const ResponseLabel& r) {
  return r.tokens.size() == 1 && r.tokens[0].ends_with("_e");
}

}  // namespace

std::string CanonicalStateVector::to_string() const {
  return {attr_char(created), ' ', attr_char(joined), ' ', attr_char(data_sent), ' ',
          attr_char(partial_end)};
}

CanonicalTable parse_canonical_table(std::string_view text) {
  CanonicalTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 5) throw ModelError("canonical row needs 5 columns", line_no, 1);
    CanonicalStateVector v{parse_attr(tok[1], line_no), parse_attr(tok[2], line_no),
                           parse_attr(tok[3], line_no), parse_attr(tok[4], line_no)};
    if (!table.emplace(tok[0], v).second)
      throw ModelError("duplicate canonical row for " + tok[0], line_no, 1);
  }
  return table;
}

CanonicalTable load_canonical_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open canonical table '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_canonical_table(buf.str());
}

std::vector<std::string> check_canonical_consistency(const UsageModel& model,
                                                     const CanonicalTable& table) {
  std::vector<std::string> v;
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    if (s != model.sink && !table.count(model.states[s]))
      v.push_back("state " + model.states[s] + " has no canonical vector");
  }
  if (!v.empty()) return v;

  // Injectivity.
  for (auto a = table.begin(); a != table.end(); ++a)
    for (auto b = std::next(a); b != table.end(); ++b)
      if (a->second == b->second)
        v.push_back("states " + a->first + " and " + b->first + " share canonical vector " +
                    a->second.to_string());

  for (const Arc& arc : model.arcs) {
    const std::string& from = model.states[arc.from];
    const std::string& to = model.states[arc.to];
    std::string where = "arc " + from + " -" + arc.label() + "-> " + to;
    if (arc.to == model.sink) {
      if (arc.stimulus != "E" || !has(arc.response, "clear"))
        v.push_back(where + ": only a clearing end may reach the sink");
      continue;
    }
    const auto& target = table.find(to)->second;

    if (is_error_response(arc.response)) {
      if (arc.to != arc.from) v.push_back(where + ": error response must not change state");
      continue;
    }
    if (arc.stimulus == "E" && has(arc.response, "clear"))
      v.push_back(where + ": clearing end must reach the sink");
    if (arc.stimulus == "E" && !has(arc.response, "clear") && target.partial_end != Attr::one)
      v.push_back(where + ": partial end must lead to partial_end=1");
    if (arc.stimulus == "S_t" && target.data_sent != Attr::one)
      v.push_back(where + ": send must lead to data_sent=1");
    if (arc.stimulus == "R_t" && has(arc.response, "uf(0)") && target.data_sent != Attr::zero)
      v.push_back(where + ": draining receive must lead to data_sent=0");
    if (arc.stimulus == "J_t" && has(arc.response, "j_a") && target.joined != Attr::one)
      v.push_back(where + ": acknowledged join must lead to joined=1");
    if (arc.stimulus == "C_t" && target.created != Attr::one)
      v.push_back(where + ": create must lead to created=1");
  }
  return v;
}

}  // namespace ucert
