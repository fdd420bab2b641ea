#include "caer/annotation/service.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "caer/dataset/manifest.hpp"
#include "caer/error.hpp"

namespace caer::annotation {

namespace fs = std::filesystem;
using labels::AnnotationRecord;
using labels::Granularity;

void to_json(nlohmann::json& j, const Stats& s) {
  auto progress_json = [](const std::map<Granularity, Progress>& m) {
    nlohmann::json o = nlohmann::json::object();
    for (const auto& [g, p] : m) o[std::string(labels::to_string(g))] = {{"assigned", p.assigned}, {"submitted", p.submitted}};
    return o;
  };
  nlohmann::json annotators = nlohmann::json::object();
  for (const auto& [a, m] : s.annotators) annotators[a] = progress_json(m);
  j = {{"progress", progress_json(s.progress)},
       {"annotators", annotators},
       {"kappa", s.report.kappa.value ? nlohmann::json(*s.report.kappa.value) : nlohmann::json(nullptr)},
       {"consistency_rate",
        s.report.consistency_rate ? nlohmann::json(*s.report.consistency_rate) : nlohmann::json(nullptr)},
       {"report", s.report}};
}

MediaIndex::MediaIndex(fs::path media_root, std::map<std::string, fs::path> files)
    : root_(std::move(media_root)), files_(std::move(files)) {}

MediaIndex MediaIndex::from_manifest(const fs::path& manifest, std::optional<fs::path> media_root) {
  const fs::path root = media_root ? *media_root : manifest.parent_path();
  std::map<std::string, fs::path> files;
  for (const auto& rec : dataset::load_manifest(manifest)) {
    const fs::path p(rec.media_path);
    files.emplace(rec.clip_id, p.is_absolute() ? p : root / p);
  }
  return MediaIndex(root, std::move(files));
}

std::optional<fs::path> MediaIndex::find(const std::string& clip_id) const {
  if (auto it = files_.find(clip_id); it != files_.end()) {
    return fs::is_regular_file(it->second) ? std::optional(it->second) : std::nullopt;
  }
  if (root_.empty() || clip_id.find_first_of("/\\") != std::string::npos || clip_id == "." || clip_id == "..") {
    return std::nullopt;
  }
  for (const char* ext : {".mp4", ".webm", ".avi", ".mkv", ".mov"}) {
    const auto p = root_ / (clip_id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

AnnotationService::AnnotationService(AssignmentPlan plan, std::shared_ptr<LabelStore> store, MediaIndex media)
    : plan_(std::move(plan)), store_(std::move(store)), media_(std::move(media)) {
  if (!store_) throw Error(ErrorCode::config, "annotation service needs a label store");
}

Progress AnnotationService::progress_of(const std::vector<AnnotationRecord>& records, const std::string& annotator,
                                        Granularity g) const {
  Progress p;
  p.assigned = plan_.tasks_for(annotator, g).size();
  for (const auto& r : records) {
    if (r.annotator_id == annotator && r.granularity == g) ++p.submitted;
  }
  return p;
}

std::optional<Task> AnnotationService::next_task(const std::string& annotator, Granularity g) const {
  if (!plan_.knows(annotator)) throw Error(ErrorCode::not_found, fmt::format("unknown annotator '{}'", annotator));
  const auto records = store_->all();
  std::set<std::string> done;
  for (const auto& r : records) {
    if (r.annotator_id == annotator && r.granularity == g) done.insert(r.clip_id);
  }
  const auto tasks = plan_.tasks_for(annotator, g);
  for (const auto& clip : tasks) {
    if (done.contains(clip)) continue;
    Task t;
    t.clip_id = clip;
    t.granularity = g;
    t.options = labels::label_set(g).categories();
    t.assigned = tasks.size();
    t.submitted = done.size();
    return t;
  }
  return std::nullopt;
}

Ack AnnotationService::submit(const AnnotationRecord& record) {
  try {
    labels::validate(record);
  } catch (const Error& e) {
    throw Error(ErrorCode::rejected, e.what());
  }
  if (!plan_.is_assigned(record.clip_id, record.annotator_id, record.granularity)) {
    throw Error(ErrorCode::rejected, fmt::format("clip '{}' is not assigned to '{}' at {} granularity", record.clip_id,
                                                 record.annotator_id, labels::to_string(record.granularity)));
  }
  Ack ack;
  ack.record = record;
  ack.replaced = store_->put(record);
  const auto p = progress_of(store_->all(), record.annotator_id, record.granularity);
  ack.assigned = p.assigned;
  ack.submitted = p.submitted;
  return ack;
}

Stats AnnotationService::stats() const {
  const auto records = store_->all();  // one snapshot for every number below
  Stats s;
  for (const auto& [g, gp] : plan_.by_granularity) {
    auto& total = s.progress[g];
    for (const auto& a : gp.annotators) {
      const auto p = progress_of(records, a, g);
      s.annotators[a][g] = p;
      total.assigned += p.assigned;
      total.submitted += p.submitted;
    }
  }
  s.report = labels::aggregate(records).report;
  return s;
}

std::vector<AnnotationRecord> AnnotationService::export_records() const { return store_->all(); }

std::string AnnotationService::export_table() const {
  std::ostringstream out;
  const auto records = store_->all();
  labels::write_annotation_table(out, records);
  return out.str();
}

std::optional<fs::path> AnnotationService::media_path(const std::string& clip_id) const {
  const auto clips = plan_.clips();
  if (!std::binary_search(clips.begin(), clips.end(), clip_id)) return std::nullopt;
  return media_.find(clip_id);
}

}  // namespace caer::annotation
