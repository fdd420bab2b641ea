#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "caer/labels/annotation.hpp"

namespace caer::labels {

// Majority-vote outcome for one clip at one granularity. `counts` has an
// entry (possibly zero) for every category of the granularity's label set.
struct VoteResult {
  std::string clip_id;
  Granularity granularity = Granularity::fine;
  std::map<std::string, int> counts;
  std::optional<std::string> winner;  // nullopt == UNRESOLVED
  int margin = 0;

  int total() const;
  bool resolved() const noexcept { return winner.has_value(); }
  bool operator==(const VoteResult&) const = default;
};

// Records must share clip_id and granularity (Error(input_integrity)) and
// the list must be non-empty (Error(no_votes)). Duplicate
// (clip, annotator, granularity) records collapse to the latest one.
VoteResult majority_vote(std::span<const AnnotationRecord> records);

// True iff both votes are resolved and the fine winner maps to the coarse
// winner. Throws Error(input_integrity) if the votes refer to different
// clips or the granularities are not (fine, coarse).
bool check_consistency(const VoteResult& fine_vote, const VoteResult& coarse_vote);

void to_json(nlohmann::json& j, const VoteResult& v);
void from_json(const nlohmann::json& j, VoteResult& v);

}  // namespace caer::labels
