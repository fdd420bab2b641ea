#pragma once

#include <string>
#include <vector>

#include "caer/model/tensor.hpp"
#include "caer/util/rng.hpp"

namespace caer::model {

Mat randn(long rows, long cols, double stddev, Rng& rng);
Mat uniform(long rows, long cols, double bound, Rng& rng);

// y = x W + b with W stored in x out.
struct Linear {
  Var weight;
  Var bias;  // null when bias-free

  Linear() = default;
  // PyTorch default init: U(-1/sqrt(in), 1/sqrt(in)) for weight and bias.
  Linear(long in, long out, Rng& rng, bool with_bias = true);
  Var operator()(const Var& x) const;
  long in_features() const { return weight->rows(); }
  long out_features() const { return weight->cols(); }
  void collect(std::vector<ParamRef>& out, const std::string& prefix) const;
};

struct LayerNorm {
  Var gamma;
  Var beta;
  double eps = 1e-5;

  LayerNorm() = default;
  explicit LayerNorm(long dim, double eps = 1e-5);
  Var operator()(const Var& x) const;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) const;
};

enum class Activation { gelu, quick_gelu };

struct MultiheadAttention {
  Linear in_proj;  // d -> 3d, rows laid out as [q | k | v]
  Linear out_proj;
  int heads = 1;

  MultiheadAttention() = default;
  MultiheadAttention(long dim, int heads, Rng& rng);
  Var operator()(const Var& x, bool causal) const;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) const;
};

// Pre-norm residual block: x + attn(ln1(x)), then + mlp(ln2(.)).
struct TransformerBlock {
  LayerNorm ln1;
  MultiheadAttention attn;
  LayerNorm ln2;
  Linear fc1;
  Linear fc2;
  Activation activation = Activation::gelu;

  TransformerBlock() = default;
  TransformerBlock(long dim, int heads, long mlp_dim, Activation act, Rng& rng);
  Var operator()(const Var& x, bool causal) const;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) const;
};

struct Transformer {
  std::vector<TransformerBlock> blocks;

  Transformer() = default;
  Transformer(int layers, long dim, int heads, long mlp_dim, Activation act, Rng& rng);
  Var operator()(Var x, bool causal) const;
  void collect(std::vector<ParamRef>& out, const std::string& prefix) const;
};

}  // namespace caer::model
