#include "caer/model/layers.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/model/ops.hpp"

namespace caer::model {

Mat randn(long rows, long cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Mat uniform(long rows, long cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Mat m(rows, cols);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(long in, long out, Rng& rng, bool with_bias) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = parameter(uniform(in, out, bound, rng));
  if (with_bias) bias = parameter(uniform(1, out, bound, rng));
}

Var Linear::operator()(const Var& x) const {
  Var y = matmul(x, weight);
  return bias ? add_row(y, bias) : y;
}

void Linear::collect(std::vector<ParamRef>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  if (bias) out.push_back({prefix + ".bias", bias});
}

LayerNorm::LayerNorm(long dim, double eps_) : eps(eps_) {
  gamma = parameter(Mat::Ones(1, dim));
  beta = parameter(Mat::Zero(1, dim));
}

Var LayerNorm::operator()(const Var& x) const { return layer_norm(x, gamma, beta, eps); }

void LayerNorm::collect(std::vector<ParamRef>& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", gamma});
  out.push_back({prefix + ".bias", beta});
}

MultiheadAttention::MultiheadAttention(long dim, int heads_, Rng& rng) : heads(heads_) {
  if (heads <= 0 || dim % heads != 0) {
    throw Error(ErrorCode::config, fmt::format("width {} is not divisible by {} heads", dim, heads));
  }
  // Xavier-uniform projection with zero bias, as torch's MultiheadAttention.
  in_proj.weight = parameter(uniform(dim, 3 * dim, std::sqrt(6.0 / (dim + 3.0 * dim)), rng));
  in_proj.bias = parameter(Mat::Zero(1, 3 * dim));
  out_proj = Linear(dim, dim, rng);
  out_proj.bias->value.setZero();
}

Var MultiheadAttention::operator()(const Var& x, bool causal) const {
  const long d = x->cols();
  const long dh = d / heads;
  const Var qkv = in_proj(x);
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Var q = slice_cols(qkv, h * dh, dh);
    Var k = slice_cols(qkv, d + h * dh, dh);
    Var v = slice_cols(qkv, 2 * d + h * dh, dh);
    Var att = softmax_rows(scale(matmul_nt(q, k), s), causal);
    outs.push_back(matmul(att, v));
  }
  return out_proj(heads == 1 ? outs[0] : concat_cols(outs));
}

void MultiheadAttention::collect(std::vector<ParamRef>& out, const std::string& prefix) const {
  in_proj.collect(out, prefix + ".in_proj");
  out_proj.collect(out, prefix + ".out_proj");
}

TransformerBlock::TransformerBlock(long dim, int heads, long mlp_dim, Activation act, Rng& rng)
    : ln1(dim), attn(dim, heads, rng), ln2(dim), fc1(dim, mlp_dim, rng), fc2(mlp_dim, dim, rng), activation(act) {}

Var TransformerBlock::operator()(const Var& x, bool causal) const {
  Var h = add(x, attn(ln1(x), causal));
  Var m = fc1(ln2(h));
  m = activation == Activation::gelu ? gelu(m) : quick_gelu(m);
  return add(h, fc2(m));
}

void TransformerBlock::collect(std::vector<ParamRef>& out, const std::string& prefix) const {
  ln1.collect(out, prefix + ".ln_1");
  attn.collect(out, prefix + ".attn");
  ln2.collect(out, prefix + ".ln_2");
  fc1.collect(out, prefix + ".mlp.c_fc");
  fc2.collect(out, prefix + ".mlp.c_proj");
}

Transformer::Transformer(int layers, long dim, int heads, long mlp_dim, Activation act, Rng& rng) {
  blocks.reserve(static_cast<std::size_t>(layers));
  for (int i = 0; i < layers; ++i) blocks.emplace_back(dim, heads, mlp_dim, act, rng);
}

Var Transformer::operator()(Var x, bool causal) const {
  for (const auto& b : blocks) x = b(x, causal);
  return x;
}

void Transformer::collect(std::vector<ParamRef>& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(out, fmt::format("{}.{}", prefix, i));
}

}  // namespace caer::model
