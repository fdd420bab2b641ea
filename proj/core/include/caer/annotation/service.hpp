#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/annotation/assignment.hpp"
#include "caer/annotation/store.hpp"
#include "caer/labels/aggregate.hpp"

namespace caer::annotation {

struct Task {
  std::string clip_id;
  labels::Granularity granularity = labels::Granularity::fine;
  std::vector<std::string> options;
  std::size_t assigned = 0;
  std::size_t submitted = 0;

  bool operator==(const Task&) const = default;
};

struct Ack {
  labels::AnnotationRecord record;
  bool replaced = false;
  std::size_t assigned = 0;
  std::size_t submitted = 0;
};

struct Progress {
  std::size_t assigned = 0;
  std::size_t submitted = 0;
};

struct Stats {
  std::map<labels::Granularity, Progress> progress;
  std::map<std::string, std::map<labels::Granularity, Progress>> annotators;
  labels::AggregationReport report;  // label_core over the exported records
};

void to_json(nlohmann::json& j, const Stats& s);

// Clip id -> media file. Built from a manifest (paths relative to
// media_root) or, without one, by looking for <media_root>/<clip_id>.<ext>.
class MediaIndex {
 public:
  MediaIndex() = default;
  explicit MediaIndex(std::filesystem::path media_root, std::map<std::string, std::filesystem::path> files = {});
  static MediaIndex from_manifest(const std::filesystem::path& manifest, std::optional<std::filesystem::path> media_root = {});

  std::optional<std::filesystem::path> find(const std::string& clip_id) const;

 private:
  std::filesystem::path root_;
  std::map<std::string, std::filesystem::path> files_;
};

class AnnotationService {
 public:
  AnnotationService(AssignmentPlan plan, std::shared_ptr<LabelStore> store, MediaIndex media = {});

  // First assigned, unsubmitted clip in plan order; nullopt when none remain.
  // Error(not_found) for an annotator the plan does not know.
  std::optional<Task> next_task(const std::string& annotator, labels::Granularity g) const;

  // Error(rejected) for an unassigned (clip, annotator, granularity) or a
  // label outside the granularity's set. Resubmission replaces the label.
  Ack submit(const labels::AnnotationRecord& record);

  Stats stats() const;
  std::vector<labels::AnnotationRecord> export_records() const;
  std::string export_table() const;  // line-delimited JSON

  // Only clips in the plan are served.
  std::optional<std::filesystem::path> media_path(const std::string& clip_id) const;

  const AssignmentPlan& plan() const { return plan_; }

 private:
  Progress progress_of(const std::vector<labels::AnnotationRecord>& records, const std::string& annotator,
                       labels::Granularity g) const;

  AssignmentPlan plan_;
  std::shared_ptr<LabelStore> store_;
  MediaIndex media_;
};

}  // namespace caer::annotation
