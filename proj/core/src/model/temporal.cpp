#include "caer/model/temporal.hpp"

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/model/ops.hpp"

namespace caer::model {

TemporalEncoder::TemporalEncoder(const TemporalConfig& config, Rng& rng) : config_(config) {
  if (config.layers < 1) throw Error(ErrorCode::config, "temporal encoder needs at least one layer");
  if (config.max_frames < 1) throw Error(ErrorCode::config, "temporal encoder needs at least one frame");
  class_token_ = parameter(randn(1, config.dim, config.init_std, rng));
  positional_ = parameter(randn(config.max_frames + 1, config.dim, config.init_std, rng));
  transformer_ = Transformer(config.layers, config.dim, config.heads, config.mlp_dim, Activation::gelu, rng);
  ln_post_ = LayerNorm(config.dim);
}

Var TemporalEncoder::operator()(const Var& features) const {
  const long n = features->rows();
  if (features->cols() != config_.dim) {
    throw Error(ErrorCode::shape, fmt::format("temporal encoder: feature width {} != {}", features->cols(), config_.dim));
  }
  if (n < 1 || n > config_.max_frames) {
    throw Error(ErrorCode::shape, fmt::format("temporal encoder: {} frames, supports 1..{}", n, config_.max_frames));
  }
  Var seq = concat_rows(std::vector<Var>{class_token_, features});
  Var pos = n + 1 == positional_->rows() ? positional_ : slice_rows(positional_, 0, n + 1);
  seq = transformer_(add(seq, pos), false);
  return ln_post_(slice_rows(seq, 0, 1));
}

void TemporalEncoder::collect(std::vector<ParamRef>& out, const std::string& prefix) const {
  out.push_back({prefix + ".class_token", class_token_});
  out.push_back({prefix + ".positional_embedding", positional_});
  transformer_.collect(out, prefix + ".transformer");
  ln_post_.collect(out, prefix + ".ln_post");
}

}  // namespace caer::model
