#include "caer/preproc/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "caer/error.hpp"
#include "caer/preproc/augment.hpp"
#include "caer/util/rng.hpp"

namespace caer::preproc {

int FrameBatch::sequence_length() const {
  if (items.empty()) return 0;
  const auto n = items.front().frames.images.size();
  for (const auto& it : items) {
    if (it.frames.images.size() != n || it.faces.images.size() != n) {
      throw Error(ErrorCode::shape, fmt::format("clip {} has a different sequence length", it.frames.clip_id));
    }
  }
  return static_cast<int>(n);
}

ClipSample preprocess_clip(const dataset::ClipRecord& clip, FrameSource& source, const PreprocConfig& config,
                           SampleMode mode, std::uint64_t seed, FaceDetector* detector) {
  const int available = source.frame_count();
  if (available != clip.n_frames) {
    spdlog::debug("{}: manifest says {} frames, media has {}", clip.clip_id, clip.n_frames, available);
  }
  ClipSample s;
  s.frames.clip_id = s.faces.clip_id = clip.clip_id;
  s.frames.indices = sample_frames(available, config.n_frames, mode, derive_seed(seed, {1}));
  s.faces.indices = s.frames.indices;
  const auto raw = source.read(s.frames.indices);

  std::vector<dataset::FaceBox> known = clip.face_boxes;
  if (known.empty() && detector) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (auto r = detector->detect(raw[i])) {
        known.push_back({s.frames.indices[i], r->x, r->y, r->width, r->height});
      }
    }
  }
  const auto boxes = resolve_boxes(known, s.frames.indices);
  s.faces.full_frame_fallback = boxes.full_frame_fallback;
  if (boxes.full_frame_fallback) spdlog::warn("{}: no face boxes, using full frames for the face stream", clip.clip_id);

  std::vector<cv::Mat> frames, faces;
  frames.reserve(raw.size());
  faces.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    frames.push_back(letterbox(raw[i], config.side));
    faces.push_back(boxes.boxes[i] ? crop_face(raw[i], *boxes.boxes[i], config.side) : frames.back());
  }
  // Geometric augmentation on the 8-bit images; the zero border maps to
  // normalised black.
  if (mode == SampleMode::train && config.augment) {
    const auto params = draw_augment(derive_seed(seed, {2}), config.max_rotation_deg);
    apply_augment(frames, params, cv::Scalar::all(0));
    apply_augment(faces, params, cv::Scalar::all(0));
  }
  s.frames.images.reserve(raw.size());
  s.faces.images.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    s.frames.images.push_back(normalize(frames[i], config.norm));
    s.faces.images.push_back(normalize(faces[i], config.norm));
  }
  return s;
}

std::filesystem::path media_path(const dataset::ClipRecord& clip, const std::filesystem::path& media_root) {
  const std::filesystem::path p(clip.media_path);
  if (p.is_absolute() || media_root.empty()) return p;
  return media_root / p;
}

}  // namespace caer::preproc
