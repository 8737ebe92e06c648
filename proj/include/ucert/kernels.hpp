#pragma once

// Data-parallel walk kernels. Every parallel kernel has a `_serial`
// counterpart that produces identical output; the serial versions are kept
// as the reference for tests and benchmarks.

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "ucert/model.hpp"

namespace ucert {

/// Recorded in suite metadata. Changing the generator or the way sub-streams
/// are derived is a breaking change and must bump the version suffix.
inline constexpr std::string_view kPrngName = "mt19937_64+splitmix64-substream/v1";

inline constexpr std::size_t kMaxWalkSteps = 10000;

/// Independent pseudo-random stream `stream` of a run seeded with `seed`.
/// The engine is seeded with splitmix64(seed + (stream + 1) * golden gamma),
/// and doubles are built from the top 53 bits, so results do not depend on
/// the standard library's distribution implementations.
class SubstreamRng {
 public:
  SubstreamRng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  static std::uint64_t splitmix64(std::uint64_t x);

 private:
  std::mt19937_64 engine_;
};

/// CSR view of a filled model for fast sampling.
struct CompiledChain {
  StateIndex source = 0;
  StateIndex sink = 0;
  std::size_t arc_count = 0;
  std::vector<std::size_t> offset;  // per state, size n + 1
  std::vector<double> cumulative;   // running sum of probabilities within a row
  std::vector<ArcIndex> arc;        // model arc index
  std::vector<StateIndex> target;

  static CompiledChain compile(const UsageModel& model);

  std::size_t state_count() const { return offset.size() - 1; }
  /// Position (CSR slot) of the arc chosen from `s` for draw `u`.
  std::size_t pick(StateIndex s, double u) const;
};

struct Walk {
  std::vector<ArcIndex> arcs;
  bool truncated = false;  // hit kMaxWalkSteps before the sink
};

Walk random_walk(const CompiledChain& chain, SubstreamRng& rng,
                 std::size_t max_steps = kMaxWalkSteps);

/// Walks for streams [first_stream, first_stream + count).
std::vector<Walk> sample_walks_serial(const CompiledChain& chain, std::uint64_t seed,
                                      std::uint64_t first_stream, std::size_t count);
std::vector<Walk> sample_walks(const CompiledChain& chain, std::uint64_t seed,
                               std::uint64_t first_stream, std::size_t count);

/// Aggregate visit counts over many source-to-sink walks.
struct WalkTally {
  std::vector<std::uint64_t> state_visits;
  std::vector<std::uint64_t> arc_traversals;
  std::uint64_t walks = 0;
  std::uint64_t steps = 0;
  std::uint64_t truncated = 0;

  bool operator==(const WalkTally&) const = default;
};

WalkTally tally_walks_serial(const CompiledChain& chain, std::uint64_t seed, std::size_t count);
WalkTally tally_walks(const CompiledChain& chain, std::uint64_t seed, std::size_t count);

}  // namespace ucert
