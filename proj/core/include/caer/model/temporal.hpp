#pragma once

#include <string>
#include <vector>

#include "caer/model/layers.hpp"

namespace caer::model {

struct TemporalConfig {
  long dim = 512;
  int layers = 1;
  int heads = 8;
  long mlp_dim = 2048;
  int max_frames = 16;  // positions = max_frames + 1
  double init_std = 0.02;
};

// [class token; features] + positional embeddings -> pre-norm transformer
// -> final LayerNorm -> the class-token row.
class TemporalEncoder {
 public:
  TemporalEncoder() = default;
  TemporalEncoder(const TemporalConfig& config, Rng& rng);

  // features: n x dim with 1 <= n <= max_frames. Returns 1 x dim.
  Var operator()(const Var& features) const;

  const Var& class_token() const { return class_token_; }
  void collect(std::vector<ParamRef>& out, const std::string& prefix) const;

 private:
  TemporalConfig config_;
  Var class_token_;
  Var positional_;
  Transformer transformer_;
  LayerNorm ln_post_;
};

}  // namespace caer::model
