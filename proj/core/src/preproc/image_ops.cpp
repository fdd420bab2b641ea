#include "caer/preproc/image_ops.hpp"

#include <algorithm>
#include <array>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "caer/error.hpp"

namespace caer::preproc {

LetterboxGeometry letterbox_geometry(cv::Size source, int side) {
  if (source.width <= 0 || source.height <= 0) throw Error(ErrorCode::degenerate_input, "empty image");
  const double scale = static_cast<double>(side) / std::max(source.width, source.height);
  LetterboxGeometry g;
  g.scaled = {std::clamp(cvRound(source.width * scale), 1, side), std::clamp(cvRound(source.height * scale), 1, side)};
  g.pad_left = (side - g.scaled.width) / 2;
  g.pad_top = (side - g.scaled.height) / 2;
  return g;
}

cv::Mat letterbox(const cv::Mat& image, int side) {
  if (image.empty()) throw Error(ErrorCode::degenerate_input, "empty image");
  const auto g = letterbox_geometry(image.size(), side);
  cv::Mat scaled;
  if (g.scaled == image.size()) {
    scaled = image;
  } else {
    const bool shrinking = g.scaled.width < image.cols;
    cv::resize(image, scaled, g.scaled, 0, 0, shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  }
  if (g.scaled.width == side && g.scaled.height == side) return scaled.clone();
  cv::Mat out;
  cv::copyMakeBorder(scaled, out, g.pad_top, side - g.scaled.height - g.pad_top, g.pad_left,
                     side - g.scaled.width - g.pad_left, cv::BORDER_CONSTANT, cv::Scalar::all(0));
  return out;
}

cv::Rect clamp_box(const dataset::FaceBox& box, cv::Size image) {
  if (box.width <= 0 || box.height <= 0) {
    throw Error(ErrorCode::invalid_box,
                fmt::format("frame {}: box {}x{} has zero area", box.frame_index, box.width, box.height));
  }
  const cv::Rect r = cv::Rect(box.x, box.y, box.width, box.height) & cv::Rect({0, 0}, image);
  if (r.empty()) {
    throw Error(ErrorCode::invalid_box, fmt::format("frame {}: box ({}, {}, {}, {}) lies outside the {}x{} frame",
                                                    box.frame_index, box.x, box.y, box.width, box.height,
                                                    image.width, image.height));
  }
  return r;
}

cv::Mat crop_face(const cv::Mat& image, const dataset::FaceBox& box, int side) {
  return letterbox(image(clamp_box(box, image.size())), side);
}

cv::Mat normalize(const cv::Mat& image, const Normalization& norm) {
  cv::Mat bgr;
  switch (image.channels()) {
    case 1: cv::cvtColor(image, bgr, cv::COLOR_GRAY2BGR); break;
    case 3: bgr = image; break;
    case 4: cv::cvtColor(image, bgr, cv::COLOR_BGRA2BGR); break;
    default: throw Error(ErrorCode::shape, fmt::format("unsupported channel count {}", image.channels()));
  }
  if (bgr.depth() != CV_8U) throw Error(ErrorCode::shape, "normalize expects 8-bit images");
  // 8-bit input has only 256 values per channel; lut is indexed by RGB channel.
  std::array<std::array<float, 256>, 3> lut;
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < 256; ++v) lut[c][v] = (static_cast<float>(v) / 255.0f - norm.mean[c]) / norm.stddev[c];
  }
  cv::Mat f(bgr.size(), CV_32FC3);
  for (int y = 0; y < bgr.rows; ++y) {
    const uchar* in = bgr.ptr<uchar>(y);
    float* out = f.ptr<float>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      out[3 * x] = lut[0][in[3 * x + 2]];
      out[3 * x + 1] = lut[1][in[3 * x + 1]];
      out[3 * x + 2] = lut[2][in[3 * x]];
    }
  }
  return f;
}

cv::Scalar normalized_black(const Normalization& norm) {
  return {-norm.mean[0] / norm.stddev[0], -norm.mean[1] / norm.stddev[1], -norm.mean[2] / norm.stddev[2]};
}

}  // namespace caer::preproc
