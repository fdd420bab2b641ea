#pragma once

#include <array>

#include <opencv2/core.hpp>

#include "caer/dataset/manifest.hpp"

namespace caer::preproc {

inline constexpr int kImageSide = 224;

// Per-channel statistics in RGB order.
struct Normalization {
  std::array<float, 3> mean{0.48145466f, 0.4578275f, 0.40821073f};
  std::array<float, 3> stddev{0.26862954f, 0.26130258f, 0.27577711f};
};

// Geometry of a letterbox: the scaled content rectangle inside the square.
struct LetterboxGeometry {
  cv::Size scaled;
  int pad_left = 0;
  int pad_top = 0;
};

LetterboxGeometry letterbox_geometry(cv::Size source, int side = kImageSide);

// Scale so the longer side equals `side`, then pad the shorter side with
// black, left/top getting floor(pad / 2). Same type as the input.
cv::Mat letterbox(const cv::Mat& image, int side = kImageSide);

// Box clamped to the image bounds. Throws Error(invalid_box) for a
// non-positive width or height, or a box that misses the image entirely.
cv::Rect clamp_box(const dataset::FaceBox& box, cv::Size image);

// Clamped crop, letterboxed to side x side.
cv::Mat crop_face(const cv::Mat& image, const dataset::FaceBox& box, int side = kImageSide);

// 8-bit BGR (OpenCV order) -> float RGB, (x / 255 - mean) / std.
cv::Mat normalize(const cv::Mat& bgr, const Normalization& norm = {});

// The normalised value of a black pixel, used to fill borders after
// normalisation.
cv::Scalar normalized_black(const Normalization& norm = {});

}  // namespace caer::preproc
