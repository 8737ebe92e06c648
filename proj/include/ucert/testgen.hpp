#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucert/model.hpp"

namespace ucert {

enum class Method { random, weighted, min_coverage };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct TestStep {
  ArcIndex arc = 0;
  std::string stimulus;
  ResponseLabel expected_response;
  StateIndex expected_state = 0;  // arc target
};

struct TestCase {
  std::size_t id = 0;
  Method method = Method::random;
  std::optional<std::uint64_t> stream;  // random cases: PRNG sub-stream index
  std::vector<TestStep> steps;
  double path_probability = 1.0;
};

/// Builds a test case from a source-to-sink arc sequence.
TestCase make_test_case(const UsageModel& model, const std::vector<ArcIndex>& arcs,
                        std::size_t id, Method method);

/// Structural problems with a case: wrong start, broken chain, missing sink.
std::vector<std::string> check_test_case(const UsageModel& model, const TestCase& tc);

struct Generated {
  std::vector<TestCase> cases;
  std::vector<std::string> warnings;
};

/// `n` random walks; case i uses sub-stream `first_stream + i` of `seed`.
/// Walks that exceed kMaxWalkSteps are dropped with a warning. Duplicates are kept.
Generated generate_random(const UsageModel& model, std::size_t n, std::uint64_t seed,
                          std::uint64_t first_stream = 0);

struct WeightedLimits {
  std::size_t max_path_length = 100;
  std::size_t max_frontier = 1'000'000;
};

/// The `k` most probable distinct source-to-sink paths, by non-increasing
/// probability; equal probabilities are ordered by stimulus-key sequence.
Generated generate_weighted(const UsageModel& model, std::size_t k, WeightedLimits limits = {});

/// Fewest total steps covering every arc: the implicit sink -> source arc is
/// added, imbalances are repaired by min-cost flow, and the resulting Eulerian
/// circuit is split at each return to the source.
Generated generate_min_coverage(const UsageModel& model);

struct SuiteSpec {
  bool min_coverage = true;
  std::size_t weighted = 200;
  std::size_t random = 5000;
  std::uint64_t seed = 20240101;
};

struct SuiteMetadata {
  std::string format = "ucert-suite/1";
  std::string model;
  std::string prng;
  std::uint64_t seed = 0;
  bool min_coverage = false;
  std::size_t weighted = 0;
  std::size_t random = 0;
};

struct Suite {
  SuiteMetadata meta;
  std::vector<TestCase> cases;
  std::vector<std::string> warnings;

  std::size_t total_steps() const;
};

/// Min-coverage cases first, then weighted, then random; ids are 1-based.
Suite compose_suite(const UsageModel& model, const SuiteSpec& spec);

/// JSON Lines: one metadata line, then one line per case
/// {"id","method","stream","steps":[stimulus keys]}.
std::string write_suite(const Suite& suite);

/// Replays stimulus keys against the model; throws ModelError on a stimulus
/// that has no arc from the current state or a case that misses the sink.
Suite read_suite(std::string_view text, const UsageModel& model);

}  // namespace ucert
