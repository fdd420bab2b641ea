#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

#include "caer/dataset/manifest.hpp"

namespace caer::preproc {

// Adapter for any face detector: one frame in, a box or nothing out.
class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual std::optional<cv::Rect> detect(const cv::Mat& frame) = 0;
};

class CallbackFaceDetector final : public FaceDetector {
 public:
  using Fn = std::function<std::optional<cv::Rect>(const cv::Mat&)>;
  explicit CallbackFaceDetector(Fn fn) : fn_(std::move(fn)) {}
  std::optional<cv::Rect> detect(const cv::Mat& frame) override { return fn_(frame); }

 private:
  Fn fn_;
};

struct ResolvedBoxes {
  std::vector<std::optional<dataset::FaceBox>> boxes;  // one per sampled index
  bool full_frame_fallback = false;                    // no box anywhere
};

// For each sampled index: the box annotated for that frame, otherwise the
// one of the nearest annotated frame (the earlier one on a tie). With no
// boxes at all every entry is empty and the fallback flag is set.
ResolvedBoxes resolve_boxes(std::span<const dataset::FaceBox> known, std::span<const int> indices);

}  // namespace caer::preproc
