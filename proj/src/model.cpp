#include "ucert/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace ucert {

ModelError::ModelError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line == 0 ? what
                                   : "line " + std::to_string(line) + ", column " +
                                         std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

std::string ResponseLabel::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ',';
    out += tokens[i];
  }
  return out;
}

std::optional<StateIndex> UsageModel::find_state(std::string_view n) const {
  auto it = std::find(states.begin(), states.end(), n);
  if (it == states.end()) return std::nullopt;
  return static_cast<StateIndex>(it - states.begin());
}

std::vector<ArcIndex> UsageModel::outgoing(StateIndex s) const {
  std::vector<ArcIndex> out;
  for (ArcIndex a = 0; a < arcs.size(); ++a)
    if (arcs[a].from == s) out.push_back(a);
  return out;
}

std::optional<ArcIndex> UsageModel::find_arc(StateIndex from, std::string_view stimulus) const {
  for (ArcIndex a = 0; a < arcs.size(); ++a)
    if (arcs[a].from == from && arcs[a].stimulus == stimulus) return a;
  return std::nullopt;
}

std::vector<StimulusLabel> UsageModel::stimuli() const {
  std::vector<StimulusLabel> out;
  for (const auto& arc : arcs) {
    bool seen = std::any_of(out.begin(), out.end(),
                            [&](const StimulusLabel& s) { return s.key == arc.stimulus; });
    if (!seen) out.push_back({arc.stimulus, {}});
  }
  return out;
}

namespace {

constexpr std::string_view kDefaultSinkName = "Exit";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

/// Cursor over one source line with 1-based column tracking.
class LineScanner {
 public:
  LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

  void skip_space() {
    while (pos_ < line_.size() && is_space(line_[pos_])) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= line_.size();
  }
  char peek() {
    skip_space();
    return pos_ < line_.size() ? line_[pos_] : '\0';
  }
  bool starts_with(std::string_view s) {
    skip_space();
    return line_.substr(pos_).starts_with(s);
  }
  std::size_t column() const { return pos_ + 1; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ModelError(what, line_no_, column());
  }

  std::string word() {
    skip_space();
    std::size_t start = pos_;
    while (pos_ < line_.size() && !is_space(line_[pos_]) && line_[pos_] != '[' &&
           line_[pos_] != '"')
      ++pos_;
    return std::string(line_.substr(start, pos_ - start));
  }

  /// `[name]`
  std::string bracketed() {
    skip_space();
    if (peek() != '[') fail("expected '['");
    ++pos_;
    std::size_t start = pos_;
    while (pos_ < line_.size() && line_[pos_] != ']') {
      if (is_space(line_[pos_]) || line_[pos_] == '[' || line_[pos_] == '"')
        fail("invalid character in state name");
      ++pos_;
    }
    if (pos_ >= line_.size()) fail("unterminated state name, expected ']'");
    std::string name(line_.substr(start, pos_ - start));
    if (name.empty()) fail("empty state name");
    ++pos_;
    return name;
  }

  /// `($ ... $)`, returns the trimmed inside.
  std::string annotation() {
    skip_space();
    if (!starts_with("($")) fail("expected '($'");
    pos_ += 2;
    std::size_t close = line_.find("$)", pos_);
    if (close == std::string_view::npos) fail("unterminated annotation, expected '$)'");
    std::string_view inner = line_.substr(pos_, close - pos_);
    pos_ = close + 2;
    while (!inner.empty() && is_space(inner.front())) inner.remove_prefix(1);
    while (!inner.empty() && is_space(inner.back())) inner.remove_suffix(1);
    return std::string(inner);
  }

  /// `"..."`
  std::string quoted() {
    skip_space();
    if (peek() != '"') fail("expected '\"'");
    ++pos_;
    std::size_t close = line_.find('"', pos_);
    if (close == std::string_view::npos) fail("unterminated quoted label");
    std::string out(line_.substr(pos_, close - pos_));
    pos_ = close + 1;
    return out;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::string_view line_;
  std::size_t line_no_;
  std::size_t pos_ = 0;
};

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

struct PendingArc {
  std::string from;
  std::string to;
  std::string stimulus;
  ResponseLabel response;
  double probability;
  bool annotated;
  std::size_t line;
  std::size_t target_column;
};

void parse_label(LineScanner& sc, std::size_t label_column, const std::string& label,
                 PendingArc& arc) {
  auto fail = [&](const std::string& what) {
    throw ModelError(what, sc.line_no(), label_column);
  };
  auto slash = label.find('/');
  if (slash == std::string::npos) fail("arc label must have the form \"stimulus/response\"");
  arc.stimulus = trim(std::string_view(label).substr(0, slash));
  if (arc.stimulus.empty()) fail("empty stimulus key");
  if (std::any_of(arc.stimulus.begin(), arc.stimulus.end(),
                  [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '\''; }))
    fail("stimulus key '" + arc.stimulus + "' contains whitespace or quotes");

  std::string_view rest = std::string_view(label).substr(slash + 1);
  while (true) {
    auto comma = rest.find(',');
    std::string token = trim(rest.substr(0, comma));
    if (token.empty()) fail("empty response token in \"" + label + "\"");
    if (token == "\xcf\x89" || token == "omega")
      fail("illegal response marker may not label a usage-model arc");
    arc.response.tokens.push_back(std::move(token));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
}

}  // namespace

UsageModel parse_model(std::string_view text) {
  UsageModel model;
  std::optional<std::string> model_name;
  std::optional<std::string> source_name;
  std::optional<std::string> sink_name;
  std::vector<std::string> declared;
  std::set<std::string> declared_set;
  std::optional<std::string> current;
  std::vector<PendingArc> pending;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;

    LineScanner sc(line, line_no);
    if (sc.at_end()) {
      if (end == text.size()) break;
      continue;
    }
    if (sc.starts_with("//") || sc.starts_with("#"))
      sc.fail("comments are not supported by this model language subset");

    std::optional<double> annotation;
    std::size_t annotation_column = 0;
    if (sc.starts_with("($")) {
      annotation_column = sc.column();
      std::string inner = sc.annotation();
      if (inner.starts_with("fill")) {
        if (model_name) throw ModelError("fill directive must precede 'model'", line_no, annotation_column);
        std::string arg = trim(std::string_view(inner).substr(4));
        if (arg.size() < 2 || arg.front() != '(' || arg.back() != ')')
          throw ModelError("malformed fill directive", line_no, annotation_column);
        auto mass = parse_number(trim(std::string_view(arg).substr(1, arg.size() - 2)));
        if (!mass || std::abs(*mass - 1.0) > kProbabilityTolerance)
          throw ModelError("fill directive must distribute a total mass of 1", line_no,
                           annotation_column);
        model.fill_directive = *mass;
        if (!sc.at_end()) sc.fail("unexpected text after fill directive");
        continue;
      }
      auto p = parse_number(inner);
      if (!p) throw ModelError("unsupported annotation '" + inner + "'", line_no, annotation_column);
      if (!(*p > 0.0 && *p <= 1.0))
        throw ModelError("probability " + inner + " outside (0,1]", line_no, annotation_column);
      annotation = *p;
    }

    char c = sc.peek();
    if (c == '"') {
      if (!current) sc.fail("arc outside of a state block");
      PendingArc arc;
      arc.from = *current;
      arc.annotated = annotation.has_value();
      arc.probability = annotation.value_or(0.0);
      arc.line = line_no;
      std::size_t label_column = sc.column();
      parse_label(sc, label_column, sc.quoted(), arc);
      arc.target_column = sc.column();
      if (sc.peek() != '[') sc.fail("expected target state '[name]'");
      arc.to = sc.bracketed();
      if (!sc.at_end()) sc.fail("unexpected text after arc target");
      pending.push_back(std::move(arc));
      continue;
    }
    if (annotation) throw ModelError("probability annotation must precede an arc label", line_no, annotation_column);

    auto declare = [&](std::string name) {
      if (!model_name) sc.fail("state block before 'model' header");
      if (!declared_set.insert(name).second) sc.fail("duplicate state block [" + name + "]");
      declared.push_back(name);
      current = std::move(name);
    };

    if (c == '[') {
      declare(sc.bracketed());
    } else {
      std::size_t kw_column = sc.column();
      std::string kw = sc.word();
      if (kw == "model") {
        if (model_name) throw ModelError("duplicate 'model' header", line_no, kw_column);
        std::string name = sc.word();
        if (name.empty()) sc.fail("expected model name");
        model_name = name;
      } else if (kw == "source" || kw == "sink") {
        std::string name = sc.bracketed();
        auto& slot = kw == "source" ? source_name : sink_name;
        if (slot) throw ModelError("more than one " + kw + " state", line_no, kw_column);
        slot = name;
        declare(name);
      } else {
        throw ModelError(kw.empty() ? "unexpected character" : "unknown keyword '" + kw + "'",
                         line_no, kw_column);
      }
      if (!sc.at_end()) sc.fail("unexpected text after state declaration");
    }
  }

  if (!model_name) throw ModelError("missing 'model <name>' header");
  if (!source_name) throw ModelError("no source state");

  std::string sink = sink_name.value_or(std::string(kDefaultSinkName));
  bool sink_referenced = declared_set.count(sink) > 0 ||
                         std::any_of(pending.begin(), pending.end(),
                                     [&](const PendingArc& a) { return a.to == sink; });
  for (const auto& p : pending)
    if (p.to != sink && !declared_set.count(p.to))
      throw ModelError("unknown target state [" + p.to + "]", p.line, p.target_column);
  if (!sink_referenced) throw ModelError("no sink state ('[" + sink + "]' is never referenced)");

  model.name = *model_name;
  model.states = declared;
  if (!declared_set.count(sink)) model.states.push_back(sink);
  model.source = *model.find_state(*source_name);
  model.sink = *model.find_state(sink);

  for (auto& p : pending) {
    auto to = model.find_state(p.to);
    StateIndex from = *model.find_state(p.from);
    if (model.find_arc(from, p.stimulus))
      throw ModelError("nondeterministic model: state [" + p.from + "] has more than one '" +
                           p.stimulus + "' arc",
                       p.line, 1);
    model.arcs.push_back(Arc{from, *to, std::move(p.stimulus), std::move(p.response),
                             p.probability, p.annotated});
  }
  return model;
}

UsageModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return fill_probabilities(parse_model(buf.str()));
}

std::string render_model(const UsageModel& model) {
  std::ostringstream out;
  if (model.fill_directive) out << "($ fill (1) $)\n";
  out << "model " << model.name << "\n";

  auto render_block = [&](StateIndex s) {
    out << "\n";
    if (s == model.source)
      out << "source ";
    else if (s == model.sink && model.states[s] != kDefaultSinkName)
      out << "sink ";
    out << "[" << model.states[s] << "]\n";
    for (ArcIndex a : model.outgoing(s)) {
      const Arc& arc = model.arcs[a];
      out << "  ";
      if (arc.annotated) out << "($" << std::setprecision(17) << arc.probability << "$) ";
      out << '"' << arc.stimulus << '/';
      for (std::size_t i = 0; i < arc.response.tokens.size(); ++i)
        out << (i ? ", " : "") << arc.response.tokens[i];
      out << "\" [" << model.states[arc.to] << "]\n";
    }
  };
  for (StateIndex s = 0; s < model.states.size(); ++s) {
    bool implicit_sink = s == model.sink && model.states[s] == kDefaultSinkName &&
                         model.outgoing(s).empty();
    if (!implicit_sink) render_block(s);
  }
  return out.str();
}

UsageModel fill_probabilities(UsageModel model) {
  for (StateIndex s = 0; s < model.states.size(); ++s) {
    if (s == model.sink) continue;
    auto out = model.outgoing(s);
    if (out.empty()) continue;  // reported by validate_model
    double annotated = 0.0;
    std::size_t bare = 0;
    for (ArcIndex a : out) {
      if (model.arcs[a].annotated)
        annotated += model.arcs[a].probability;
      else
        ++bare;
    }
    const std::string& name = model.states[s];
    if (bare == 0) {
      if (std::abs(annotated - 1.0) > kProbabilityTolerance)
        throw ModelError("state [" + name + "] probabilities sum to " + std::to_string(annotated) +
                         ", expected 1");
      continue;
    }
    if (annotated >= 1.0 - kProbabilityTolerance)
      throw ModelError("state [" + name + "] has annotated mass " + std::to_string(annotated) +
                       " leaving nothing for " + std::to_string(bare) + " unannotated arc(s)");
    double share = (1.0 - annotated) / static_cast<double>(bare);
    for (ArcIndex a : out)
      if (!model.arcs[a].annotated) model.arcs[a].probability = share;
  }
  return model;
}

namespace {

std::vector<bool> reachable(const UsageModel& m, StateIndex from, bool reverse) {
  std::vector<bool> seen(m.states.size(), false);
  std::deque<StateIndex> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    StateIndex s = queue.front();
    queue.pop_front();
    for (const Arc& a : m.arcs) {
      StateIndex u = reverse ? a.to : a.from;
      StateIndex v = reverse ? a.from : a.to;
      if (u == s && !seen[v]) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

std::vector<std::string> validate_model(const UsageModel& m) {
  std::vector<std::string> v;
  const auto n = m.states.size();
  if (n == 0) return {"model has no states"};
  if (m.source >= n) v.push_back("source index out of range");
  if (m.sink >= n) v.push_back("sink index out of range");
  if (!v.empty()) return v;
  if (m.source == m.sink) v.push_back("source and sink are the same state");

  std::set<std::pair<StateIndex, std::string>> seen;
  for (const Arc& a : m.arcs) {
    std::string where = "arc " + m.states[a.from] + " -" + a.label() + "-> " + m.states[a.to];
    if (!seen.emplace(a.from, a.stimulus).second)
      v.push_back("state " + m.states[a.from] + " has duplicate stimulus " + a.stimulus);
    if (!(a.probability > 0.0) || a.probability > 1.0 + kProbabilityTolerance)
      v.push_back(where + " has probability outside (0,1]");
    if (a.response.tokens.empty()) v.push_back(where + " has an empty response");
  }

  for (StateIndex s = 0; s < n; ++s) {
    auto out = m.outgoing(s);
    if (s == m.sink) {
      if (!out.empty()) v.push_back("sink " + m.states[s] + " has outgoing arcs");
      continue;
    }
    if (out.empty()) {
      v.push_back("state " + m.states[s] + " has no outgoing arcs");
      continue;
    }
    double sum = 0.0;
    for (ArcIndex a : out) sum += m.arcs[a].probability;
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg << "state " << m.states[s] << " outgoing probabilities sum to " << std::setprecision(12)
          << sum;
      v.push_back(msg.str());
    }
  }

  auto forward = reachable(m, m.source, false);
  auto backward = reachable(m, m.sink, true);
  for (StateIndex s = 0; s < n; ++s) {
    if (!forward[s]) v.push_back("state " + m.states[s] + " unreachable from source");
    if (!backward[s]) v.push_back("sink unreachable from " + m.states[s]);
  }
  return v;
}

}  // namespace ucert
