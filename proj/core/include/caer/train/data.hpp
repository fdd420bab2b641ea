#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/dataset/manifest.hpp"
#include "caer/dataset/split.hpp"
#include "caer/labels/label_set.hpp"
#include "caer/preproc/pipeline.hpp"
#include "caer/train/synthetic.hpp"

namespace caer::train {

struct ClipItem {
  std::string clip_id;
  std::string subject_id;
  int label = -1;
};

// Labelled clips that can be turned into model inputs on demand.
class ClipProvider {
 public:
  virtual ~ClipProvider() = default;
  virtual const labels::LabelSet& labels() const = 0;
  virtual const std::vector<ClipItem>& items() const = 0;
  // Preprocessed clip; train mode draws sampling and augmentation from seed.
  virtual preproc::ClipSample load(std::size_t index, preproc::SampleMode mode, std::uint64_t seed) const = 0;
};

// Clips decoded from video files or frame directories on disk.
class MediaClipProvider final : public ClipProvider {
 public:
  MediaClipProvider(labels::LabelSet labels, std::vector<dataset::ClipRecord> records, std::vector<int> labels_idx,
                    std::filesystem::path media_root, preproc::PreprocConfig preproc);

  const labels::LabelSet& labels() const override { return labels_; }
  const std::vector<ClipItem>& items() const override { return items_; }
  preproc::ClipSample load(std::size_t index, preproc::SampleMode mode, std::uint64_t seed) const override;

 private:
  labels::LabelSet labels_;
  std::vector<dataset::ClipRecord> records_;
  std::vector<ClipItem> items_;
  std::filesystem::path media_root_;
  preproc::PreprocConfig preproc_;
};

// Clips of a SyntheticCorpus, rendered when loaded.
class SyntheticClipProvider final : public ClipProvider {
 public:
  SyntheticClipProvider(std::shared_ptr<const SyntheticCorpus> corpus, preproc::PreprocConfig preproc);

  const labels::LabelSet& labels() const override { return corpus_->labels(); }
  const std::vector<ClipItem>& items() const override { return items_; }
  preproc::ClipSample load(std::size_t index, preproc::SampleMode mode, std::uint64_t seed) const override;
  const SyntheticCorpus& corpus() const { return *corpus_; }

 private:
  std::shared_ptr<const SyntheticCorpus> corpus_;
  std::vector<ClipItem> items_;
  preproc::PreprocConfig preproc_;
};

struct Dataset {
  std::shared_ptr<const ClipProvider> provider;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;

  const labels::LabelSet& labels() const { return provider->labels(); }
  const std::vector<std::size_t>& indices(dataset::Split s) const { return s == dataset::Split::train ? train : test; }
};

// JSON:
//   {"kind": "media", "manifest": P, "labels": P, "split": P,
//    "media_root": P (default: the manifest's directory),
//    "granularity": "fine"}
//   {"kind": "synthetic", "synthetic": {SyntheticSpec}, "ratio": 0.8,
//    "split_seed": 0}
// Both accept "augment" and "max_rotation_deg". Relative paths resolve
// against `base_dir` when the config came from a file.
struct DataConfig {
  std::string kind = "media";
  std::filesystem::path manifest;
  std::filesystem::path labels;
  std::filesystem::path split;
  std::filesystem::path media_root;
  labels::Granularity granularity = labels::Granularity::fine;
  SyntheticSpec synthetic;
  double ratio = 0.8;
  std::uint64_t split_seed = 0;
  bool augment = true;
  double max_rotation_deg = 15.0;
};

void to_json(nlohmann::json& j, const DataConfig& c);
void from_json(const nlohmann::json& j, DataConfig& c);
// Makes relative paths absolute with respect to base_dir.
void resolve_paths(DataConfig& c, const std::filesystem::path& base_dir);

// Builds the dataset. Retained clips only; the label of each clip is its
// majority label at the configured granularity. Throws Error(input_integrity)
// for labelled clips missing from the manifest or the split.
Dataset load_dataset(const DataConfig& config, int n_frames);

// Synthetic corpus split through the regular label aggregation and the
// subject-disjoint splitter.
Dataset synthetic_dataset(std::shared_ptr<const SyntheticCorpus> corpus, int n_frames, double ratio = 0.8,
                          std::uint64_t split_seed = 0, bool augment = true);

}  // namespace caer::train
