#pragma once

#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>

#include "caer/model/tensor.hpp"
#include "caer/model/tokenizer.hpp"

namespace caer::model {

// Image -> embedding. Encoding is split in two: prepare() is a fixed,
// parameter-free transform of 224x224 normalised images into rows, and
// encode() maps those rows to embeddings through the trainable weights.
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual long output_dim() const = 0;
  virtual long input_dim() const = 0;
  // One row per image. Error(shape) for a wrong size or type.
  virtual Mat prepare(std::span<const cv::Mat> images) const = 0;
  virtual Var encode(const Mat& prepared) const = 0;
  virtual std::vector<ParamRef> parameters() const = 0;
  virtual nlohmann::json spec() const = 0;
};

// Token embeddings -> embedding. The weights are frozen: parameters() are
// leaves that never require a gradient.
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual long width() const = 0;  // token embedding size
  virtual long output_dim() const = 0;
  virtual int context_length() const = 0;
  virtual const Tokenizer& tokenizer() const = 0;
  // Constant embeddings of the given token ids (rows x width).
  virtual Mat embed(std::span<const int> ids) const = 0;
  // Sequence of at most context_length rows whose last row is the
  // end-of-text token; returns the 1 x output_dim feature at that row.
  virtual Var encode(const Var& embeddings) const = 0;
  virtual std::vector<ParamRef> parameters() const = 0;
  virtual nlohmann::json spec() const = 0;
};

// Spec objects:
//   {"kind": "standin", "dim": 512, "seed": 0}
//       7x7 average pooling of each channel (147 values) then a trainable
//       linear map to `dim`.
//   {"kind": "standin", "width": 512, "dim": 512, "layers": 1, "heads": 8,
//    "vocab": 2048, "context_length": 77, "mlp_ratio": 1, "seed": 0}
//       frozen random CLIP-style text transformer with a hash tokenizer.
//   {"kind": "clip", "archive": PATH, "bpe": PATH}
//       weights converted from a pretrained CLIP model.
std::shared_ptr<ImageEncoder> make_image_encoder(const nlohmann::json& spec);
std::shared_ptr<TextEncoder> make_text_encoder(const nlohmann::json& spec);

// Stable hash of parameter names, shapes and values.
std::uint64_t hash_parameters(const std::vector<ParamRef>& params);

}  // namespace caer::model
