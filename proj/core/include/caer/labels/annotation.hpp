#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/labels/label_set.hpp"
#include "caer/util/time.hpp"

namespace caer::labels {

// One annotator's vote for one clip at one granularity.
struct AnnotationRecord {
  std::string clip_id;
  std::string annotator_id;
  Granularity granularity = Granularity::fine;
  std::string label;
  Timestamp timestamp{};

  bool operator==(const AnnotationRecord&) const = default;
};

// Throws Error(invalid_label) when the label is not in the label set of the
// record's granularity, or Error(input_integrity) for empty identifiers.
void validate(const AnnotationRecord& record);

// Keeps the latest record per (clip, annotator, granularity); equal
// timestamps resolve to the later position in the input. Output is sorted
// by (clip_id, granularity, annotator_id).
std::vector<AnnotationRecord> latest_records(std::span<const AnnotationRecord> records);

// Line-delimited JSON with keys clip_id, annotator_id, granularity, label,
// timestamp. Records are validated while reading.
std::vector<AnnotationRecord> read_annotation_table(std::istream& in);
std::vector<AnnotationRecord> read_annotation_table(const std::filesystem::path& path);
void write_annotation_table(std::ostream& out, std::span<const AnnotationRecord> records);

void to_json(nlohmann::json& j, const AnnotationRecord& r);
void from_json(const nlohmann::json& j, AnnotationRecord& r);

}  // namespace caer::labels
