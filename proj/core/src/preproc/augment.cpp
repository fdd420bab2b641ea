#include "caer/preproc/augment.hpp"

#include <opencv2/imgproc.hpp>

#include "caer/util/rng.hpp"

namespace caer::preproc {

AugmentParams draw_augment(std::uint64_t seed, double max_angle_deg) {
  Rng rng(seed);
  AugmentParams p;
  p.angle_deg = std::uniform_real_distribution<double>(-max_angle_deg, max_angle_deg)(rng);
  p.flip = std::bernoulli_distribution(0.5)(rng);
  return p;
}

cv::Mat apply_augment(const cv::Mat& image, const AugmentParams& params, const cv::Scalar& border) {
  cv::Mat out = image;
  if (params.angle_deg != 0.0) {
    const cv::Point2f centre((image.cols - 1) * 0.5f, (image.rows - 1) * 0.5f);
    const cv::Mat m = cv::getRotationMatrix2D(centre, params.angle_deg, 1.0);
    cv::warpAffine(image, out, m, image.size(), cv::INTER_LINEAR, cv::BORDER_CONSTANT, border);
  }
  if (params.flip) {
    cv::Mat flipped;
    cv::flip(out, flipped, 1);
    out = flipped;
  }
  return out.data == image.data ? image.clone() : out;
}

void apply_augment(std::vector<cv::Mat>& images, const AugmentParams& params, const cv::Scalar& border) {
  for (auto& img : images) img = apply_augment(img, params, border);
}

}  // namespace caer::preproc
