#include "caer/preproc/frame_source.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include "caer/error.hpp"

namespace caer::preproc {

namespace {

void check_index(int i, int count) {
  if (i < 0 || i >= count) throw Error(ErrorCode::shape, fmt::format("frame index {} out of range [0, {})", i, count));
}

}  // namespace

MemoryFrameSource::MemoryFrameSource(std::vector<cv::Mat> frames) : frames_(std::move(frames)) {}

std::vector<cv::Mat> MemoryFrameSource::read(std::span<const int> indices) {
  std::vector<cv::Mat> out;
  out.reserve(indices.size());
  for (int i : indices) {
    check_index(i, frame_count());
    out.push_back(frames_[static_cast<std::size_t>(i)]);
  }
  return out;
}

VideoFileSource::VideoFileSource(std::filesystem::path path) : path_(std::move(path)) {
  cv::VideoCapture cap(path_.string());
  if (!cap.isOpened()) throw Error(ErrorCode::io, fmt::format("cannot open video {}", path_.string()));
  count_ = static_cast<int>(cap.get(cv::CAP_PROP_FRAME_COUNT));
  if (count_ <= 0) {
    // Some containers do not report a count.
    count_ = 0;
    while (cap.grab()) ++count_;
  }
  if (count_ <= 0) throw Error(ErrorCode::io, fmt::format("video {} has no frames", path_.string()));
}

std::vector<cv::Mat> VideoFileSource::read(std::span<const int> indices) {
  for (int i : indices) check_index(i, count_);
  const std::set<int> wanted(indices.begin(), indices.end());
  std::map<int, cv::Mat> decoded;

  cv::VideoCapture cap(path_.string());
  if (!cap.isOpened()) throw Error(ErrorCode::io, fmt::format("cannot open video {}", path_.string()));
  cv::Mat last;
  int pos = 0;
  for (int target : wanted) {
    bool ok = true;
    while (pos < target && (ok = cap.grab())) ++pos;
    cv::Mat frame;
    if (ok && cap.read(frame) && !frame.empty()) {
      ++pos;
      last = frame;
    } else if (last.empty()) {
      throw Error(ErrorCode::io, fmt::format("cannot decode frame {} of {}", target, path_.string()));
    } else {
      spdlog::warn("{}: frame {} not decodable, repeating frame before it", path_.string(), target);
      frame = last;
    }
    decoded[target] = frame;
  }

  std::vector<cv::Mat> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(decoded.at(i));
  return out;
}

ImageDirectorySource::ImageDirectorySource(const std::filesystem::path& dir) {
  static const std::set<std::string> kExt{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (e.is_regular_file() && kExt.count(ext)) files_.push_back(e.path());
  }
  std::sort(files_.begin(), files_.end());
  if (files_.empty()) throw Error(ErrorCode::io, fmt::format("no images in {}", dir.string()));
}

std::vector<cv::Mat> ImageDirectorySource::read(std::span<const int> indices) {
  std::vector<cv::Mat> out;
  out.reserve(indices.size());
  for (int i : indices) {
    check_index(i, frame_count());
    cv::Mat img = cv::imread(files_[static_cast<std::size_t>(i)].string(), cv::IMREAD_COLOR);
    if (img.empty()) throw Error(ErrorCode::io, fmt::format("cannot decode {}", files_[i].string()));
    out.push_back(std::move(img));
  }
  return out;
}

std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw Error(ErrorCode::io, fmt::format("media not found: {}", path.string()));
  if (std::filesystem::is_directory(path, ec)) return std::make_unique<ImageDirectorySource>(path);
  return std::make_unique<VideoFileSource>(path);
}

}  // namespace caer::preproc
