#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/labels/annotation.hpp"
#include "caer/labels/kappa.hpp"
#include "caer/labels/vote.hpp"

namespace caer::labels {

// Voting outcome of one clip across both granularities.
//   retained => consistent && both winners resolved
//   retained => coarse_label == map_fine_to_coarse(fine_label)
struct AggregatedLabel {
  std::string clip_id;
  VoteResult fine_vote;
  VoteResult coarse_vote;
  std::optional<std::string> fine_label;
  std::optional<std::string> coarse_label;
  bool complete = false;  // records present at both granularities
  bool consistent = false;
  bool retained = false;

  bool operator==(const AggregatedLabel&) const = default;
};

// Fleiss' kappa over the retained clips' fine-grained votes. Only clips
// whose rater count equals the modal count enter the table; the others are
// listed in excluded_clips. `value` is empty when kappa is undefined
// (fewer than two usable items, one rater, or a degenerate table) and
// `note` says why.
struct KappaSummary {
  std::optional<double> value;
  int items = 0;
  int raters_per_item = 0;
  std::vector<std::string> excluded_clips;
  std::string note;

  bool operator==(const KappaSummary&) const = default;
};

struct AggregationReport {
  std::size_t clips = 0;
  std::size_t complete = 0;
  std::size_t consistent = 0;
  std::size_t retained = 0;
  // consistent / complete; empty when no clip is complete.
  std::optional<double> consistency_rate;
  std::vector<std::string> incomplete_clips;
  std::vector<std::string> tied_fine_clips;
  std::vector<std::string> tied_coarse_clips;
  std::map<std::string, int> retained_fine_counts;
  std::map<std::string, int> retained_coarse_counts;
  KappaSummary kappa;

  bool operator==(const AggregationReport&) const = default;
};

struct AggregationResult {
  std::vector<AggregatedLabel> labels;  // sorted by clip_id
  AggregationReport report;
};

// Majority vote per clip and granularity, coarse/fine consistency check,
// retention filter and the agreement report. Ties are UNRESOLVED and make
// the clip inconsistent; clips seen at only one granularity are incomplete
// and never retained.
AggregationResult aggregate(std::span<const AnnotationRecord> annotations);

// Agreement table built from fine-vote counts of the given labels
// (modal-rater-count rule applied), with the clips left out.
struct KappaInput {
  AgreementTable table;
  std::vector<std::string> included_clips;
  std::vector<std::string> excluded_clips;
};
KappaInput kappa_input(std::span<const AggregatedLabel> labels);

void to_json(nlohmann::json& j, const AggregatedLabel& a);
void from_json(const nlohmann::json& j, AggregatedLabel& a);
void to_json(nlohmann::json& j, const KappaSummary& k);
void to_json(nlohmann::json& j, const AggregationReport& r);

std::vector<AggregatedLabel> read_aggregated_labels(const std::filesystem::path& path);
void write_aggregated_labels(std::ostream& out, std::span<const AggregatedLabel> labels);

}  // namespace caer::labels
