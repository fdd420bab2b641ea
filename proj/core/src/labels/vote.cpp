#include "caer/labels/vote.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::labels {

int VoteResult::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0,
                         [](int acc, const auto& kv) { return acc + kv.second; });
}

VoteResult majority_vote(std::span<const AnnotationRecord> records) {
  if (records.empty()) throw Error(ErrorCode::no_votes, "majority_vote: no records");
  const auto& first = records.front();
  for (const auto& r : records) {
    if (r.clip_id != first.clip_id || r.granularity != first.granularity) {
      throw Error(ErrorCode::input_integrity,
                  fmt::format("majority_vote: mixed inputs ('{}'/{} vs '{}'/{})", first.clip_id,
                              to_string(first.granularity), r.clip_id, to_string(r.granularity)));
    }
  }

  VoteResult result;
  result.clip_id = first.clip_id;
  result.granularity = first.granularity;
  const auto& set = label_set(first.granularity);
  for (const auto& c : set.categories()) result.counts[c] = 0;

  for (const auto& r : latest_records(records)) {
    auto it = result.counts.find(r.label);
    if (it == result.counts.end()) {
      throw Error(ErrorCode::invalid_label,
                  fmt::format("label '{}' not in {} set", r.label, to_string(r.granularity)));
    }
    ++it->second;
  }

  int top = -1;
  int second = -1;
  const std::string* top_name = nullptr;
  for (const auto& [name, count] : result.counts) {
    if (count > top) {
      second = top;
      top = count;
      top_name = &name;
    } else if (count > second) {
      second = count;
    }
  }
  second = std::max(second, 0);
  if (top > second) {
    result.winner = *top_name;
    result.margin = top - second;
  }
  return result;
}

bool check_consistency(const VoteResult& fine_vote, const VoteResult& coarse_vote) {
  if (fine_vote.clip_id != coarse_vote.clip_id) {
    throw Error(ErrorCode::input_integrity,
                fmt::format("check_consistency: clip '{}' vs '{}'", fine_vote.clip_id,
                            coarse_vote.clip_id));
  }
  if (fine_vote.granularity != Granularity::fine || coarse_vote.granularity != Granularity::coarse) {
    throw Error(ErrorCode::input_integrity, "check_consistency: expected (fine, coarse) votes");
  }
  if (!fine_vote.winner || !coarse_vote.winner) return false;
  return map_fine_to_coarse(*fine_vote.winner) == *coarse_vote.winner;
}

void to_json(nlohmann::json& j, const VoteResult& v) {
  j = nlohmann::json{{"clip_id", v.clip_id},
                     {"granularity", std::string(to_string(v.granularity))},
                     {"counts", v.counts},
                     {"winner", v.winner ? nlohmann::json(*v.winner) : nlohmann::json(nullptr)},
                     {"margin", v.margin}};
}

void from_json(const nlohmann::json& j, VoteResult& v) {
  v.clip_id = j.at("clip_id").get<std::string>();
  v.granularity = parse_granularity(j.at("granularity").get<std::string>());
  v.counts = j.at("counts").get<std::map<std::string, int>>();
  const auto& w = j.at("winner");
  v.winner = w.is_null() ? std::nullopt : std::optional<std::string>(w.get<std::string>());
  v.margin = j.at("margin").get<int>();
}

}  // namespace caer::labels
