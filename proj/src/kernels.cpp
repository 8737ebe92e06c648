#include "ucert/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace ucert {

std::uint64_t SubstreamRng::splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SubstreamRng::SubstreamRng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed + (stream + 1) * 0x9e3779b97f4a7c15ULL)) {}

CompiledChain CompiledChain::compile(const UsageModel& model) {
  CompiledChain c;
  c.source = model.source;
  c.sink = model.sink;
  c.arc_count = model.arcs.size();
  c.offset.assign(model.state_count() + 1, 0);
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    c.offset[s] = c.arc.size();
    double run = 0.0;
    for (ArcIndex a : model.outgoing(s)) {
      run += model.arcs[a].probability;
      c.cumulative.push_back(run);
      c.arc.push_back(a);
      c.target.push_back(model.arcs[a].to);
    }
  }
  c.offset.back() = c.arc.size();
  return c;
}

std::size_t CompiledChain::pick(StateIndex s, double u) const {
  const std::size_t lo = offset[s], hi = offset[s + 1];
  // The row total may round to slightly below 1; the last arc absorbs it.
  auto it = std::upper_bound(cumulative.begin() + static_cast<std::ptrdiff_t>(lo),
                             cumulative.begin() + static_cast<std::ptrdiff_t>(hi - 1), u);
  return static_cast<std::size_t>(it - cumulative.begin());
}

Walk random_walk(const CompiledChain& chain, SubstreamRng& rng, std::size_t max_steps) {
  Walk w;
  StateIndex s = chain.source;
  while (s != chain.sink) {
    if (w.arcs.size() >= max_steps || chain.offset[s] == chain.offset[s + 1]) {
      w.truncated = true;
      break;
    }
    std::size_t slot = chain.pick(s, rng.uniform());
    w.arcs.push_back(chain.arc[slot]);
    s = chain.target[slot];
  }
  return w;
}

std::vector<Walk> sample_walks_serial(const CompiledChain& chain, std::uint64_t seed,
                                      std::uint64_t first_stream, std::size_t count) {
  std::vector<Walk> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    SubstreamRng rng(seed, first_stream + i);
    out[i] = random_walk(chain, rng);
  }
  return out;
}

std::vector<Walk> sample_walks(const CompiledChain& chain, std::uint64_t seed,
                               std::uint64_t first_stream, std::size_t count) {
  std::vector<Walk> out(count);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    SubstreamRng rng(seed, first_stream + static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = random_walk(chain, rng);
  }
  return out;
}

namespace {

WalkTally empty_tally(const CompiledChain& chain) {
  WalkTally t;
  t.state_visits.assign(chain.state_count(), 0);
  t.arc_traversals.assign(chain.arc_count, 0);
  return t;
}

void tally_one(const CompiledChain& chain, SubstreamRng& rng, WalkTally& t) {
  StateIndex s = chain.source;
  ++t.state_visits[s];
  ++t.walks;
  std::size_t steps = 0;
  while (s != chain.sink) {
    if (steps >= kMaxWalkSteps || chain.offset[s] == chain.offset[s + 1]) {
      ++t.truncated;
      return;
    }
    std::size_t slot = chain.pick(s, rng.uniform());
    ++t.arc_traversals[chain.arc[slot]];
    s = chain.target[slot];
    ++t.state_visits[s];
    ++steps;
    ++t.steps;
  }
}

void merge_into(WalkTally& into, const WalkTally& from) {
  for (std::size_t i = 0; i < into.state_visits.size(); ++i) into.state_visits[i] += from.state_visits[i];
  for (std::size_t i = 0; i < into.arc_traversals.size(); ++i)
    into.arc_traversals[i] += from.arc_traversals[i];
  into.walks += from.walks;
  into.steps += from.steps;
  into.truncated += from.truncated;
}

}  // namespace

WalkTally tally_walks_serial(const CompiledChain& chain, std::uint64_t seed, std::size_t count) {
  WalkTally t = empty_tally(chain);
  for (std::size_t i = 0; i < count; ++i) {
    SubstreamRng rng(seed, i);
    tally_one(chain, rng, t);
  }
  return t;
}

WalkTally tally_walks(const CompiledChain& chain, std::uint64_t seed, std::size_t count) {
  WalkTally total = empty_tally(chain);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel
  {
    WalkTally local = empty_tally(chain);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      SubstreamRng rng(seed, static_cast<std::uint64_t>(i));
      tally_one(chain, rng, local);
    }
#pragma omp critical(ucert_tally_merge)
    merge_into(total, local);
  }
  return total;
}

}  // namespace ucert
