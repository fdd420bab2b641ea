#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <opencv2/core.hpp>

namespace caer::preproc {

// Random access to the decoded 8-bit BGR frames of one clip.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int frame_count() const = 0;
  // Frames for the requested indices, in request order. Indices may repeat.
  virtual std::vector<cv::Mat> read(std::span<const int> indices) = 0;
};

class MemoryFrameSource final : public FrameSource {
 public:
  explicit MemoryFrameSource(std::vector<cv::Mat> frames);
  int frame_count() const override { return static_cast<int>(frames_.size()); }
  std::vector<cv::Mat> read(std::span<const int> indices) override;

 private:
  std::vector<cv::Mat> frames_;
};

// Decodes sequentially and keeps only the requested frames, which avoids
// relying on container seek accuracy.
class VideoFileSource final : public FrameSource {
 public:
  explicit VideoFileSource(std::filesystem::path path);
  int frame_count() const override { return count_; }
  std::vector<cv::Mat> read(std::span<const int> indices) override;

 private:
  std::filesystem::path path_;
  int count_ = 0;
};

// A directory of still images, ordered by file name.
class ImageDirectorySource final : public FrameSource {
 public:
  explicit ImageDirectorySource(const std::filesystem::path& dir);
  int frame_count() const override { return static_cast<int>(files_.size()); }
  std::vector<cv::Mat> read(std::span<const int> indices) override;

 private:
  std::vector<std::filesystem::path> files_;
};

// Directory -> ImageDirectorySource, anything else -> VideoFileSource.
// Throws Error(io) if the path does not exist or cannot be decoded.
std::unique_ptr<FrameSource> open_frame_source(const std::filesystem::path& path);

}  // namespace caer::preproc
