#include "ucert/testgen.hpp"

#include <algorithm>
#include <queue>

#include "ucert/kernels.hpp"

namespace ucert {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::random: return "random";
    case Method::weighted: return "weighted";
    case Method::min_coverage: return "min_coverage";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::random, Method::weighted, Method::min_coverage})
    if (method_name(m) == name) return m;
  return std::nullopt;
}

TestCase make_test_case(const UsageModel& model, const std::vector<ArcIndex>& arcs,
                        std::size_t id, Method method) {
  TestCase tc;
  tc.id = id;
  tc.method = method;
  tc.steps.reserve(arcs.size());
  for (ArcIndex a : arcs) {
    const Arc& arc = model.arcs.at(a);
    tc.steps.push_back(TestStep{a, arc.stimulus, arc.response, arc.to});
    tc.path_probability *= arc.probability;
  }
  return tc;
}

std::vector<std::string> check_test_case(const UsageModel& model, const TestCase& tc) {
  std::vector<std::string> v;
  std::string name = "case " + std::to_string(tc.id);
  if (tc.steps.empty()) return {name + " is empty"};
  StateIndex at = model.source;
  for (std::size_t i = 0; i < tc.steps.size(); ++i) {
    const Arc& arc = model.arcs.at(tc.steps[i].arc);
    if (arc.from != at) v.push_back(name + " step " + std::to_string(i + 1) + " does not chain");
    if (tc.steps[i].expected_state != arc.to || tc.steps[i].stimulus != arc.stimulus)
      v.push_back(name + " step " + std::to_string(i + 1) + " disagrees with its arc");
    if (arc.to == model.sink && i + 1 != tc.steps.size())
      v.push_back(name + " continues past the sink");
    at = arc.to;
  }
  if (at != model.sink) v.push_back(name + " does not end at the sink");
  if (!(tc.path_probability > 0.0 && tc.path_probability <= 1.0))
    v.push_back(name + " path probability outside (0,1]");
  return v;
}

Generated generate_random(const UsageModel& model, std::size_t n, std::uint64_t seed,
                          std::uint64_t first_stream) {
  Generated g;
  auto chain = CompiledChain::compile(model);
  auto walks = sample_walks(chain, seed, first_stream, n);
  g.cases.reserve(n);
  for (std::size_t i = 0; i < walks.size(); ++i) {
    if (walks[i].truncated) {
      g.warnings.push_back("random walk on stream " + std::to_string(first_stream + i) +
                           " exceeded " + std::to_string(kMaxWalkSteps) + " steps; dropped");
      continue;
    }
    TestCase tc = make_test_case(model, walks[i].arcs, g.cases.size() + 1, Method::random);
    tc.stream = first_stream + i;
    g.cases.push_back(std::move(tc));
  }
  return g;
}

namespace {

struct SearchNode {
  std::size_t parent;  // npos for the root
  ArcIndex arc;
  StateIndex state;
  double probability;
  std::size_t depth;
};

constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

}  // namespace

Generated generate_weighted(const UsageModel& model, std::size_t k, WeightedLimits limits) {
  Generated g;
  if (k == 0) return g;

  // Stimulus rank by key for tie-breaking.
  auto stimuli = model.stimuli();
  std::sort(stimuli.begin(), stimuli.end(),
            [](const StimulusLabel& a, const StimulusLabel& b) { return a.key < b.key; });
  std::vector<std::size_t> arc_rank(model.arcs.size());
  for (ArcIndex a = 0; a < model.arcs.size(); ++a)
    arc_rank[a] = static_cast<std::size_t>(
        std::find_if(stimuli.begin(), stimuli.end(),
                     [&](const StimulusLabel& s) { return s.key == model.arcs[a].stimulus; }) -
        stimuli.begin());

  std::vector<SearchNode> arena;
  arena.push_back({kNoParent, 0, model.source, 1.0, 0});

  auto key_path = [&](std::size_t id) {
    std::vector<std::size_t> ranks(arena[id].depth);
    for (std::size_t n = id; arena[n].parent != kNoParent; n = arena[n].parent)
      ranks[arena[n].depth - 1] = arc_rank[arena[n].arc];
    return ranks;
  };
  // "Less urgent" ordering for the max-heap.
  auto lower_priority = [&](std::size_t a, std::size_t b) {
    if (arena[a].probability != arena[b].probability)
      return arena[a].probability < arena[b].probability;
    return key_path(a) > key_path(b);
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(lower_priority)> frontier(
      lower_priority);
  frontier.push(0);

  auto outgoing = std::vector<std::vector<ArcIndex>>(model.state_count());
  for (StateIndex s = 0; s < model.state_count(); ++s) outgoing[s] = model.outgoing(s);

  bool frontier_capped = false;
  while (!frontier.empty() && g.cases.size() < k) {
    std::size_t id = frontier.top();
    frontier.pop();
    const SearchNode node = arena[id];
    if (node.state == model.sink) {
      std::vector<ArcIndex> arcs(node.depth);
      for (std::size_t n = id; arena[n].parent != kNoParent; n = arena[n].parent)
        arcs[arena[n].depth - 1] = arena[n].arc;
      g.cases.push_back(make_test_case(model, arcs, g.cases.size() + 1, Method::weighted));
      continue;
    }
    if (node.depth >= limits.max_path_length) continue;
    for (ArcIndex a : outgoing[node.state]) {
      if (frontier.size() >= limits.max_frontier) {
        frontier_capped = true;
        break;
      }
      arena.push_back({id, a, model.arcs[a].to, node.probability * model.arcs[a].probability,
                       node.depth + 1});
      frontier.push(arena.size() - 1);
    }
    if (frontier_capped) break;
  }
  if (g.cases.size() < k)
    g.warnings.push_back("weighted sampling found " + std::to_string(g.cases.size()) + " of " +
                         std::to_string(k) + " requested paths" +
                         (frontier_capped ? " (frontier cap reached)" : " (search exhausted)"));
  return g;
}

std::size_t Suite::total_steps() const {
  std::size_t n = 0;
  for (const auto& c : cases) n += c.steps.size();
  return n;
}

Suite compose_suite(const UsageModel& model, const SuiteSpec& spec) {
  Suite suite;
  suite.meta.model = model.name;
  suite.meta.prng = std::string(kPrngName);
  suite.meta.seed = spec.seed;
  suite.meta.min_coverage = spec.min_coverage;
  suite.meta.weighted = spec.weighted;
  suite.meta.random = spec.random;

  auto append = [&](Generated g) {
    for (auto& c : g.cases) {
      c.id = suite.cases.size() + 1;
      suite.cases.push_back(std::move(c));
    }
    for (auto& w : g.warnings) suite.warnings.push_back(std::move(w));
  };
  if (spec.min_coverage) append(generate_min_coverage(model));
  if (spec.weighted > 0) append(generate_weighted(model, spec.weighted));
  if (spec.random > 0) append(generate_random(model, spec.random, spec.seed));
  return suite;
}

}  // namespace ucert
