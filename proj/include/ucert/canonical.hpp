#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ucert/model.hpp"

namespace ucert {

enum class Attr { zero, one, na };

/// Observable session attributes used as the state oracle.
struct CanonicalStateVector {
  Attr created = Attr::zero;
  Attr joined = Attr::na;
  Attr data_sent = Attr::na;
  Attr partial_end = Attr::na;

  static CanonicalStateVector no_session() { return {}; }

  bool operator==(const CanonicalStateVector&) const = default;
  std::string to_string() const;  // e.g. "1 1 0 -"
};

using CanonicalTable = std::map<std::string, CanonicalStateVector, std::less<>>;

/// Parses `state created joined data_sent partial_end` rows; '#' starts a comment.
CanonicalTable parse_canonical_table(std::string_view text);
CanonicalTable load_canonical_table(const std::string& path);

/// Checks that the vector mapping is injective and agrees with arc semantics
/// (sends set data, draining receives clear it, clearing ends reach the sink,
/// plain ends set partial_end, acknowledged joins set joined, error responses
/// leave the state unchanged).
std::vector<std::string> check_canonical_consistency(const UsageModel& model,
                                                     const CanonicalTable& table);

}  // namespace ucert
