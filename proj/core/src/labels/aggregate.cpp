#include "caer/labels/aggregate.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "caer/error.hpp"
#include "util/jsonl.hpp"

namespace caer::labels {
namespace {

VoteResult empty_vote(const std::string& clip_id, Granularity g) {
  VoteResult v;
  v.clip_id = clip_id;
  v.granularity = g;
  for (const auto& c : label_set(g).categories()) v.counts[c] = 0;
  return v;
}

std::vector<int> count_row(const VoteResult& vote) {
  std::vector<int> row;
  for (const auto& c : fine_labels().categories()) row.push_back(vote.counts.at(c));
  return row;
}

}  // namespace

KappaInput kappa_input(std::span<const AggregatedLabel> labels) {
  KappaInput input;
  std::map<int, int> frequency;
  for (const auto& l : labels) ++frequency[l.fine_vote.total()];
  if (frequency.empty()) return input;
  // Modal rater count; ties go to the larger count.
  int modal = 0;
  int best = -1;
  for (const auto& [raters, freq] : frequency) {
    if (freq >= best) {
      best = freq;
      modal = raters;
    }
  }
  input.table.raters_per_item = modal;
  for (const auto& l : labels) {
    if (l.fine_vote.total() == modal) {
      input.table.rows.push_back(count_row(l.fine_vote));
      input.included_clips.push_back(l.clip_id);
    } else {
      input.excluded_clips.push_back(l.clip_id);
    }
  }
  return input;
}

AggregationResult aggregate(std::span<const AnnotationRecord> annotations) {
  for (const auto& r : annotations) validate(r);
  const auto records = latest_records(annotations);

  // records are sorted by (clip, granularity, annotator): walk contiguous runs.
  std::map<std::string, std::pair<std::vector<AnnotationRecord>, std::vector<AnnotationRecord>>> by_clip;
  for (const auto& r : records) {
    auto& slot = by_clip[r.clip_id];
    (r.granularity == Granularity::fine ? slot.first : slot.second).push_back(r);
  }

  AggregationResult result;
  auto& report = result.report;
  for (const auto& c : fine_labels().categories()) report.retained_fine_counts[c] = 0;
  for (const auto& c : coarse_labels().categories()) report.retained_coarse_counts[c] = 0;

  for (const auto& [clip_id, votes] : by_clip) {
    const auto& [fine_records, coarse_records] = votes;
    AggregatedLabel label;
    label.clip_id = clip_id;
    label.fine_vote = fine_records.empty() ? empty_vote(clip_id, Granularity::fine) : majority_vote(fine_records);
    label.coarse_vote = coarse_records.empty() ? empty_vote(clip_id, Granularity::coarse) : majority_vote(coarse_records);
    label.fine_label = label.fine_vote.winner;
    label.coarse_label = label.coarse_vote.winner;
    label.complete = !fine_records.empty() && !coarse_records.empty();

    ++report.clips;
    if (!label.complete) {
      report.incomplete_clips.push_back(clip_id);
      spdlog::info("clip '{}' is incomplete (labels at one granularity only)", clip_id);
    } else {
      ++report.complete;
      if (!label.fine_vote.resolved()) {
        report.tied_fine_clips.push_back(clip_id);
        spdlog::info("clip '{}': fine-grained vote tied", clip_id);
      }
      if (!label.coarse_vote.resolved()) {
        report.tied_coarse_clips.push_back(clip_id);
        spdlog::info("clip '{}': coarse-grained vote tied", clip_id);
      }
      label.consistent = check_consistency(label.fine_vote, label.coarse_vote);
      label.retained = label.consistent;
    }
    if (label.consistent) ++report.consistent;
    if (label.retained) {
      ++report.retained;
      ++report.retained_fine_counts[*label.fine_label];
      ++report.retained_coarse_counts[*label.coarse_label];
    }
    result.labels.push_back(std::move(label));
  }

  if (report.complete > 0) {
    report.consistency_rate = static_cast<double>(report.consistent) / static_cast<double>(report.complete);
  }

  std::vector<AggregatedLabel> retained;
  std::copy_if(result.labels.begin(), result.labels.end(), std::back_inserter(retained),
               [](const AggregatedLabel& l) { return l.retained; });
  auto input = kappa_input(retained);
  auto& kappa = report.kappa;
  kappa.items = static_cast<int>(input.table.rows.size());
  kappa.raters_per_item = input.table.raters_per_item;
  kappa.excluded_clips = std::move(input.excluded_clips);
  if (kappa.items < 2) {
    kappa.note = "fewer than two retained items with the modal rater count";
  } else if (kappa.raters_per_item < 2) {
    kappa.note = "fewer than two raters per item";
  } else {
    try {
      kappa.value = fleiss_kappa(input.table);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_table) throw;
      kappa.note = e.what();
    }
  }
  return result;
}

void to_json(nlohmann::json& j, const AggregatedLabel& a) {
  auto opt = [](const std::optional<std::string>& s) {
    return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
  };
  j = nlohmann::json{{"clip_id", a.clip_id},       {"fine_vote", a.fine_vote},
                     {"coarse_vote", a.coarse_vote}, {"fine_label", opt(a.fine_label)},
                     {"coarse_label", opt(a.coarse_label)}, {"complete", a.complete},
                     {"consistent", a.consistent}, {"retained", a.retained}};
}

void from_json(const nlohmann::json& j, AggregatedLabel& a) {
  auto opt = [](const nlohmann::json& v) {
    return v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
  };
  a.clip_id = j.at("clip_id").get<std::string>();
  a.fine_vote = j.at("fine_vote").get<VoteResult>();
  a.coarse_vote = j.at("coarse_vote").get<VoteResult>();
  a.fine_label = opt(j.at("fine_label"));
  a.coarse_label = opt(j.at("coarse_label"));
  a.complete = j.value("complete", true);
  a.consistent = j.at("consistent").get<bool>();
  a.retained = j.at("retained").get<bool>();
  if (a.retained) {
    if (!a.fine_label || !a.coarse_label || map_fine_to_coarse(*a.fine_label) != *a.coarse_label) {
      throw Error(ErrorCode::input_integrity,
                  fmt::format("clip '{}' is retained but its labels are inconsistent", a.clip_id));
    }
  }
}

void to_json(nlohmann::json& j, const KappaSummary& k) {
  j = nlohmann::json{{"value", k.value ? nlohmann::json(*k.value) : nlohmann::json(nullptr)},
                     {"items", k.items},
                     {"raters_per_item", k.raters_per_item},
                     {"excluded_clips", k.excluded_clips},
                     {"note", k.note}};
}

void to_json(nlohmann::json& j, const AggregationReport& r) {
  j = nlohmann::json{
      {"clips", r.clips},
      {"complete", r.complete},
      {"consistent", r.consistent},
      {"retained", r.retained},
      {"consistency_rate", r.consistency_rate ? nlohmann::json(*r.consistency_rate) : nlohmann::json(nullptr)},
      {"incomplete_clips", r.incomplete_clips},
      {"tied_fine_clips", r.tied_fine_clips},
      {"tied_coarse_clips", r.tied_coarse_clips},
      {"retained_fine_counts", r.retained_fine_counts},
      {"retained_coarse_counts", r.retained_coarse_counts},
      {"kappa", r.kappa}};
}

std::vector<AggregatedLabel> read_aggregated_labels(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<AggregatedLabel> out;
  detail::for_each_json_line(in, ErrorCode::input_integrity, [&](std::size_t line, const nlohmann::json& j) {
    try {
      out.push_back(j.get<AggregatedLabel>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::input_integrity, fmt::format("{} line {}: {}", path.string(), line, e.what()));
    }
  });
  return out;
}

void write_aggregated_labels(std::ostream& out, std::span<const AggregatedLabel> labels) {
  for (const auto& l : labels) detail::write_json_line(out, nlohmann::json(l));
}

}  // namespace caer::labels
