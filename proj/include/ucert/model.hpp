#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ucert {

using StateIndex = std::size_t;
using ArcIndex = std::size_t;

/// Raised for malformed model text and for probability assignments that
/// cannot be completed. `line` and `column` are 1-based; zero means the
/// error is not tied to a source position.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& what, std::size_t line = 0, std::size_t column = 0);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct StimulusLabel {
  std::string key;
  std::string description;
};

/// Ordered response atoms, e.g. {"s_a", "store", "uf(1)"}.
struct ResponseLabel {
  std::vector<std::string> tokens;

  std::string to_string() const;  // "s_a,store,uf(1)"
  bool operator==(const ResponseLabel&) const = default;
};

struct Arc {
  StateIndex from = 0;
  StateIndex to = 0;
  std::string stimulus;
  ResponseLabel response;
  double probability = 0.0;  // 0 until filled when !annotated
  bool annotated = false;

  /// "S_t/s_a,store,uf(1)"
  std::string label() const { return stimulus + "/" + response.to_string(); }
};

/// Markov-chain usage model. Also read as a deterministic Mealy machine:
/// each (state, stimulus) pair has at most one arc.
class UsageModel {
 public:
  std::string name;
  std::vector<std::string> states;
  StateIndex source = 0;
  StateIndex sink = 0;
  std::vector<Arc> arcs;
  std::optional<double> fill_directive;

  std::size_t state_count() const { return states.size(); }
  std::optional<StateIndex> find_state(std::string_view name) const;
  const std::string& state_name(StateIndex s) const { return states.at(s); }

  /// Arc indices leaving `s`, in file order.
  std::vector<ArcIndex> outgoing(StateIndex s) const;
  std::optional<ArcIndex> find_arc(StateIndex from, std::string_view stimulus) const;

  /// Distinct stimulus keys in order of first appearance.
  std::vector<StimulusLabel> stimuli() const;

  bool is_sink(StateIndex s) const { return s == sink; }
};

/// Parses the line-oriented model language:
///
///   ($ fill (1) $)
///   model <name>
///   source [name]
///     ($0.01$) "C_f/c_e" [name]
///              "C_t/c_s, c_a" [other]
///   [other]
///     ...
///
/// A target of `[Exit]` names the sink unless a `sink [name]` block is given.
/// Unannotated arcs carry probability 0; call fill_probabilities() next.
UsageModel parse_model(std::string_view text);

/// Reads and parses a file, then fills probabilities.
UsageModel load_model(const std::string& path);

/// Inverse of parse_model. Annotated arcs are printed with round-trip
/// precision; unannotated arcs are printed bare.
std::string render_model(const UsageModel& model);

/// Splits the residual mass of each state equally among its unannotated arcs.
UsageModel fill_probabilities(UsageModel model);

inline constexpr double kProbabilityTolerance = 1e-9;

/// Structural checks: one source, one sink, sink has no arcs, rows sum to 1,
/// determinism, reachability from source, sink reachable from every state.
/// An empty result means the model is valid.
std::vector<std::string> validate_model(const UsageModel& model);

}  // namespace ucert
