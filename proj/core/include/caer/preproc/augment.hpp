#pragma once

#include <cstdint>
#include <vector>

#include <opencv2/core.hpp>

namespace caer::preproc {

struct AugmentParams {
  double angle_deg = 0.0;
  bool flip = false;

  bool operator==(const AugmentParams&) const = default;
};

// One angle uniform in [-max_angle, max_angle] and one horizontal flip with
// probability 0.5, drawn from `seed`.
AugmentParams draw_augment(std::uint64_t seed, double max_angle_deg = 15.0);

// Rotation about the image centre, then the flip. `border` fills the
// uncovered corners.
cv::Mat apply_augment(const cv::Mat& image, const AugmentParams& params, const cv::Scalar& border);
void apply_augment(std::vector<cv::Mat>& images, const AugmentParams& params, const cv::Scalar& border);

}  // namespace caer::preproc
