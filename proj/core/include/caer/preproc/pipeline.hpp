#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>

#include "caer/dataset/manifest.hpp"
#include "caer/preproc/face_detector.hpp"
#include "caer/preproc/frame_source.hpp"
#include "caer/preproc/image_ops.hpp"
#include "caer/preproc/sampling.hpp"

namespace caer::preproc {

// Normalised CV_32FC3 images, side x side, RGB.
struct FrameSequence {
  std::string clip_id;
  std::vector<int> indices;
  std::vector<cv::Mat> images;
};

struct FaceSequence {
  std::string clip_id;
  std::vector<int> indices;
  std::vector<cv::Mat> images;
  bool full_frame_fallback = false;
};

struct ClipSample {
  FrameSequence frames;
  FaceSequence faces;
  std::optional<int> label;  // index into the label set
};

struct FrameBatch {
  std::vector<ClipSample> items;
  int sequence_length() const;  // N, checked uniform; 0 when empty
};

struct PreprocConfig {
  int n_frames = 16;
  int side = kImageSide;
  double max_rotation_deg = 15.0;
  bool augment = true;  // train mode only
  Normalization norm;
};

// Samples, decodes, crops and normalises one clip. Boxes come from the
// manifest; when it has none and a detector is given, the detector runs on
// each sampled frame. Train mode draws the sampling and augmentation from
// `seed`; eval mode ignores it.
ClipSample preprocess_clip(const dataset::ClipRecord& clip, FrameSource& source, const PreprocConfig& config,
                           SampleMode mode, std::uint64_t seed = 0, FaceDetector* detector = nullptr);

// Resolves clip.media_path against media_root (absolute paths are kept).
std::filesystem::path media_path(const dataset::ClipRecord& clip, const std::filesystem::path& media_root);

}  // namespace caer::preproc
