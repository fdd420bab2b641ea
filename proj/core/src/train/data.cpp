#include "caer/train/data.hpp"

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/labels/aggregate.hpp"

namespace caer::train {

namespace fs = std::filesystem;

MediaClipProvider::MediaClipProvider(labels::LabelSet labels, std::vector<dataset::ClipRecord> records,
                                     std::vector<int> labels_idx, fs::path media_root, preproc::PreprocConfig preproc)
    : labels_(std::move(labels)),
      records_(std::move(records)),
      media_root_(std::move(media_root)),
      preproc_(preproc) {
  if (labels_idx.size() != records_.size()) throw Error(ErrorCode::input_integrity, "one label per clip required");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    items_.push_back({records_[i].clip_id, records_[i].subject_id, labels_idx[i]});
  }
}

preproc::ClipSample MediaClipProvider::load(std::size_t index, preproc::SampleMode mode, std::uint64_t seed) const {
  const auto& r = records_.at(index);
  auto source = preproc::open_frame_source(preproc::media_path(r, media_root_));
  auto s = preproc::preprocess_clip(r, *source, preproc_, mode, seed);
  s.label = items_[index].label;
  return s;
}

SyntheticClipProvider::SyntheticClipProvider(std::shared_ptr<const SyntheticCorpus> corpus,
                                             preproc::PreprocConfig preproc)
    : corpus_(std::move(corpus)), preproc_(preproc) {
  for (const auto& c : corpus_->clips()) items_.push_back({c.record.clip_id, c.record.subject_id, c.label});
}

preproc::ClipSample SyntheticClipProvider::load(std::size_t index, preproc::SampleMode mode,
                                                std::uint64_t seed) const {
  SyntheticFrameSource source(corpus_, index);
  auto s = preproc::preprocess_clip(corpus_->clips().at(index).record, source, preproc_, mode, seed);
  s.label = items_[index].label;
  return s;
}

void to_json(nlohmann::json& j, const DataConfig& c) {
  j = {{"kind", c.kind}, {"augment", c.augment}, {"max_rotation_deg", c.max_rotation_deg}};
  if (c.kind == "synthetic") {
    j["synthetic"] = c.synthetic;
    j["ratio"] = c.ratio;
    j["split_seed"] = c.split_seed;
  } else {
    j["manifest"] = c.manifest.string();
    j["labels"] = c.labels.string();
    j["split"] = c.split.string();
    j["media_root"] = c.media_root.string();
    j["granularity"] = labels::to_string(c.granularity);
  }
}

void from_json(const nlohmann::json& j, DataConfig& c) {
  const DataConfig d;
  c.kind = j.value("kind", d.kind);
  if (c.kind != "media" && c.kind != "synthetic") {
    throw Error(ErrorCode::config, fmt::format("data.kind must be 'media' or 'synthetic', got '{}'", c.kind));
  }
  c.manifest = j.value("manifest", std::string());
  c.labels = j.value("labels", std::string());
  c.split = j.value("split", std::string());
  c.media_root = j.value("media_root", std::string());
  c.granularity = labels::parse_granularity(j.value("granularity", std::string("fine")));
  c.synthetic = j.value("synthetic", SyntheticSpec{});
  c.ratio = j.value("ratio", d.ratio);
  c.split_seed = j.value("split_seed", d.split_seed);
  c.augment = j.value("augment", d.augment);
  c.max_rotation_deg = j.value("max_rotation_deg", d.max_rotation_deg);
}

void resolve_paths(DataConfig& c, const fs::path& base_dir) {
  for (fs::path* p : {&c.manifest, &c.labels, &c.split, &c.media_root}) {
    if (!p->empty() && p->is_relative()) *p = base_dir / *p;
  }
}

Dataset synthetic_dataset(std::shared_ptr<const SyntheticCorpus> corpus, int n_frames, double ratio,
                          std::uint64_t split_seed, bool augment) {
  preproc::PreprocConfig pc;
  pc.n_frames = n_frames;
  pc.augment = augment;
  const auto agg = labels::aggregate(corpus->annotations());
  std::vector<labels::AggregatedLabel> retained;
  for (const auto& l : agg.labels) {
    if (l.retained) retained.push_back(l);
  }
  const auto manifest = corpus->manifest();
  const auto split = dataset::split_subject_disjoint(retained, manifest, {ratio, split_seed});

  Dataset d;
  auto provider = std::make_shared<SyntheticClipProvider>(std::move(corpus), pc);
  const auto& items = provider->items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto it = split.clips.find(items[i].clip_id);
    if (it == split.clips.end()) continue;
    (it->second == dataset::Split::train ? d.train : d.test).push_back(i);
  }
  d.provider = std::move(provider);
  return d;
}

Dataset load_dataset(const DataConfig& c, int n_frames) {
  if (c.kind == "synthetic") {
    return synthetic_dataset(std::make_shared<SyntheticCorpus>(c.synthetic), n_frames, c.ratio, c.split_seed,
                             c.augment);
  }
  if (c.manifest.empty() || c.labels.empty() || c.split.empty()) {
    throw Error(ErrorCode::config, "media data config needs manifest, labels and split");
  }
  preproc::PreprocConfig pc;
  pc.n_frames = n_frames;
  pc.augment = c.augment;
  pc.max_rotation_deg = c.max_rotation_deg;

  const auto manifest = dataset::load_manifest(c.manifest);
  std::map<std::string, const dataset::ClipRecord*> by_id;
  for (const auto& r : manifest) by_id.emplace(r.clip_id, &r);
  const auto split = dataset::read_split(c.split);
  const auto& label_set = labels::label_set(c.granularity);

  std::vector<dataset::ClipRecord> records;
  std::vector<int> label_idx;
  std::vector<dataset::Split> which;
  for (const auto& l : labels::read_aggregated_labels(c.labels)) {
    if (!l.retained) continue;
    const auto& name = c.granularity == labels::Granularity::fine ? l.fine_label : l.coarse_label;
    if (!name) continue;
    auto m = by_id.find(l.clip_id);
    if (m == by_id.end()) {
      throw Error(ErrorCode::input_integrity, fmt::format("clip '{}' is labelled but not in the manifest", l.clip_id));
    }
    auto s = split.clips.find(l.clip_id);
    if (s == split.clips.end()) {
      throw Error(ErrorCode::input_integrity, fmt::format("clip '{}' is labelled but not in the split", l.clip_id));
    }
    records.push_back(*m->second);
    label_idx.push_back(static_cast<int>(*label_set.index_of(*name)));
    which.push_back(s->second);
  }
  const fs::path media_root = c.media_root.empty() ? c.manifest.parent_path() : c.media_root;
  Dataset d;
  for (std::size_t i = 0; i < which.size(); ++i) (which[i] == dataset::Split::train ? d.train : d.test).push_back(i);
  d.provider = std::make_shared<MediaClipProvider>(label_set, std::move(records), std::move(label_idx), media_root, pc);
  return d;
}

}  // namespace caer::train
