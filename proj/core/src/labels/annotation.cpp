#include "caer/labels/annotation.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <fmt/ranges.h>

#include "caer/error.hpp"
#include "util/jsonl.hpp"

namespace caer::labels {

void validate(const AnnotationRecord& record) {
  if (record.clip_id.empty() || record.annotator_id.empty()) {
    throw Error(ErrorCode::input_integrity, "annotation record with empty clip_id or annotator_id");
  }
  const auto& set = label_set(record.granularity);
  if (!set.contains(record.label)) {
    throw Error(ErrorCode::invalid_label,
                fmt::format("label '{}' is not in the {} label set [{}]", record.label,
                            to_string(record.granularity), fmt::join(set.categories(), ", ")));
  }
}

std::vector<AnnotationRecord> latest_records(std::span<const AnnotationRecord> records) {
  using Key = std::tuple<std::string, Granularity, std::string>;
  std::map<Key, const AnnotationRecord*> latest;
  for (const auto& r : records) {
    auto [it, inserted] = latest.try_emplace(Key{r.clip_id, r.granularity, r.annotator_id}, &r);
    if (!inserted && it->second->timestamp <= r.timestamp) it->second = &r;
  }
  std::vector<AnnotationRecord> out;
  out.reserve(latest.size());
  for (const auto& [key, r] : latest) out.push_back(*r);
  return out;
}

void to_json(nlohmann::json& j, const AnnotationRecord& r) {
  j = nlohmann::json{{"clip_id", r.clip_id},
                     {"annotator_id", r.annotator_id},
                     {"granularity", std::string(to_string(r.granularity))},
                     {"label", r.label},
                     {"timestamp", format_timestamp(r.timestamp)}};
}

void from_json(const nlohmann::json& j, AnnotationRecord& r) {
  r.clip_id = j.at("clip_id").get<std::string>();
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.granularity = parse_granularity(j.at("granularity").get<std::string>());
  r.label = j.at("label").get<std::string>();
  r.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
}

std::vector<AnnotationRecord> read_annotation_table(std::istream& in) {
  std::vector<AnnotationRecord> out;
  detail::for_each_json_line(in, ErrorCode::input_integrity,
                             [&](std::size_t line, const nlohmann::json& j) {
                               try {
                                 auto r = j.get<AnnotationRecord>();
                                 validate(r);
                                 out.push_back(std::move(r));
                               } catch (const Error& e) {
                                 throw Error(e.code(), fmt::format("line {}: {}", line, e.what()));
                               } catch (const nlohmann::json::exception& e) {
                                 throw Error(ErrorCode::input_integrity,
                                             fmt::format("line {}: {}", line, e.what()));
                               }
                             });
  return out;
}

std::vector<AnnotationRecord> read_annotation_table(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return read_annotation_table(in);
}

void write_annotation_table(std::ostream& out, std::span<const AnnotationRecord> records) {
  for (const auto& r : records) detail::write_json_line(out, nlohmann::json(r));
}

}  // namespace caer::labels
