#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include "caer/dataset/manifest.hpp"
#include "caer/labels/annotation.hpp"
#include "caer/labels/label_set.hpp"
#include "caer/preproc/frame_source.hpp"

namespace caer::train {

// Generated five-class study-video corpus. Each clip shows a figure at a
// desk: a small face patch carrying a fine texture and a coloured object
// on the desk. The face texture and the object colour are assigned per
// class so that neither alone separates all classes:
//
//   class        face texture   desk object
//   enjoyment    horizontal     red
//   neutrality   vertical       red
//   confusion    checker        green
//   fatigue      flat           blue
//   distraction  flat           yellow
//
// The textures have a 4 px period and equal mean, so they vanish once the
// full frame is pooled; only the face crop resolves them.
struct SyntheticSpec {
  int subjects = 20;
  int width = 192;
  int height = 144;
  int face_size = 20;
  int min_frames = 20;
  int max_frames = 40;
  double fps = 8.0;
  double noise = 4.0;       // pixel noise stddev
  double label_noise = 0.25;  // chance that one fine rater disagrees
  std::uint64_t seed = 0;
};

void to_json(nlohmann::json& j, const SyntheticSpec& s);
void from_json(const nlohmann::json& j, SyntheticSpec& s);

inline constexpr std::array<int, 5> kSyntheticFacePattern{0, 1, 2, 3, 3};
inline constexpr std::array<int, 5> kSyntheticContextCue{0, 0, 1, 2, 3};

struct SyntheticClip {
  dataset::ClipRecord record;
  int label = 0;  // index into fine_labels()
  int face_x = 0, face_y = 0;
  int object_x = 0, object_y = 0;
  double phase = 0.0;
  cv::Scalar background, skin, desk, body;
};

// One clip per class and subject, so every subject is class-balanced.
class SyntheticCorpus {
 public:
  explicit SyntheticCorpus(SyntheticSpec spec = {});

  const SyntheticSpec& spec() const { return spec_; }
  const labels::LabelSet& labels() const;
  const std::vector<SyntheticClip>& clips() const { return clips_; }
  std::vector<dataset::ClipRecord> manifest() const;

  // Frame `frame` of clip `clip`, 8-bit BGR. Pure function of the spec.
  cv::Mat render(std::size_t clip, int frame) const;
  cv::Rect face_rect(std::size_t clip, int frame) const;

  // Five fine and five coarse votes per clip, with some disagreement that
  // never flips the majority.
  std::vector<labels::AnnotationRecord> annotations() const;

  // manifest.jsonl, annotations.jsonl and media/<clip_id>.avi (MJPG).
  // Face boxes are listed for every fourth frame.
  void write(const std::filesystem::path& dir) const;

 private:
  SyntheticSpec spec_;
  std::vector<SyntheticClip> clips_;
};

// Renders the requested frames on demand.
class SyntheticFrameSource final : public preproc::FrameSource {
 public:
  SyntheticFrameSource(std::shared_ptr<const SyntheticCorpus> corpus, std::size_t clip);
  int frame_count() const override;
  std::vector<cv::Mat> read(std::span<const int> indices) override;

 private:
  std::shared_ptr<const SyntheticCorpus> corpus_;
  std::size_t clip_;
};

}  // namespace caer::train
