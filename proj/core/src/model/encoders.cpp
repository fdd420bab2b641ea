#include "caer/model/encoders.hpp"

#include <cstdlib>
#include <cstring>

#include <fmt/format.h>
#include <opencv2/imgproc.hpp>

#include "caer/error.hpp"
#include "caer/model/archive.hpp"
#include "caer/model/layers.hpp"
#include "caer/model/ops.hpp"
#include "caer/util/hash.hpp"

#ifndef CAER_DEFAULT_ASSET_DIR
#define CAER_DEFAULT_ASSET_DIR "assets"
#endif

namespace caer::model {

namespace {

constexpr int kSide = 224;

void check_image(const cv::Mat& img, int side) {
  if (img.rows != side || img.cols != side || img.type() != CV_32FC3) {
    throw Error(ErrorCode::shape, fmt::format("image encoder expects {0}x{0} CV_32FC3, got {1}x{2} type {3}", side,
                                              img.cols, img.rows, img.type()));
  }
}

void freeze(std::vector<ParamRef>& params) {
  for (auto& p : params) p.var->requires_grad = false;
}

void load_into(const Archive& a, std::vector<ParamRef>& params) {
  for (auto& p : params) {
    const Mat& m = a.at(p.name);
    if (m.rows() != p.var->rows() || m.cols() != p.var->cols()) {
      throw Error(ErrorCode::shape, fmt::format("tensor '{}' is {}x{}, expected {}x{}", p.name, m.rows(), m.cols(),
                                                p.var->rows(), p.var->cols()));
    }
    p.var->value = m;
  }
}

// ---------------------------------------------------------------- stand-ins

class StandinImageEncoder final : public ImageEncoder {
 public:
  explicit StandinImageEncoder(const nlohmann::json& spec) : spec_(spec) {
    dim_ = spec.value("dim", 512L);
    Rng rng(spec.value("seed", std::uint64_t{0}));
    proj_ = Linear(kInputs, dim_, rng);
  }
  long output_dim() const override { return dim_; }
  long input_dim() const override { return kInputs; }

  Mat prepare(std::span<const cv::Mat> images) const override {
    Mat out(static_cast<long>(images.size()), kInputs);
    for (std::size_t i = 0; i < images.size(); ++i) {
      check_image(images[i], kSide);
      cv::Mat pooled;
      cv::resize(images[i], pooled, {kGrid, kGrid}, 0, 0, cv::INTER_AREA);
      long c = 0;
      for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < kGrid; ++y)
          for (int x = 0; x < kGrid; ++x) out(static_cast<long>(i), c++) = pooled.at<cv::Vec3f>(y, x)[ch];
    }
    return out;
  }

  Var encode(const Mat& prepared) const override {
    if (prepared.cols() != kInputs) throw Error(ErrorCode::shape, "stand-in image encoder: bad prepared width");
    return proj_(constant(prepared));
  }

  std::vector<ParamRef> parameters() const override {
    std::vector<ParamRef> out;
    proj_.collect(out, "image_encoder.proj");
    return out;
  }
  nlohmann::json spec() const override { return spec_; }

 private:
  static constexpr int kGrid = 7;
  static constexpr long kInputs = 3 * kGrid * kGrid;
  nlohmann::json spec_;
  long dim_;
  Linear proj_;
};

// Shared by the stand-in and CLIP text encoders.
class TransformerTextEncoder final : public TextEncoder {
 public:
  TransformerTextEncoder(nlohmann::json spec, std::unique_ptr<Tokenizer> tok, long width, long dim, int layers,
                         int heads, long mlp_dim, int context, Activation act, Rng& rng)
      : spec_(std::move(spec)), tokenizer_(std::move(tok)), context_(context) {
    token_embedding_ = parameter(randn(tokenizer_->vocab_size(), width, 0.02, rng));
    positional_ = parameter(randn(context, width, 0.01, rng));
    transformer_ = Transformer(layers, width, heads, mlp_dim, act, rng);
    ln_final_ = LayerNorm(width);
    projection_ = parameter(randn(width, dim, 1.0 / std::sqrt(static_cast<double>(width)), rng));
    auto ps = parameters();
    freeze(ps);
  }

  void load(const Archive& a) {
    auto ps = parameters();
    load_into(a, ps);
  }

  long width() const override { return token_embedding_->cols(); }
  long output_dim() const override { return projection_->cols(); }
  int context_length() const override { return context_; }
  const Tokenizer& tokenizer() const override { return *tokenizer_; }

  Mat embed(std::span<const int> ids) const override {
    Mat out(static_cast<long>(ids.size()), width());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= token_embedding_->rows()) {
        throw Error(ErrorCode::shape, fmt::format("token id {} outside vocabulary", ids[i]));
      }
      out.row(static_cast<long>(i)) = token_embedding_->value.row(ids[i]);
    }
    return out;
  }

  Var encode(const Var& embeddings) const override {
    const long len = embeddings->rows();
    if (len < 1 || len > context_ || embeddings->cols() != width()) {
      throw Error(ErrorCode::shape, fmt::format("text encoder: sequence {}x{} (context {}, width {})", len,
                                                embeddings->cols(), context_, width()));
    }
    Var x = add(embeddings, constant(positional_->value.topRows(len)));
    x = transformer_(x, /*causal=*/true);
    x = ln_final_(slice_rows(x, len - 1, 1));
    return matmul(x, projection_);
  }

  std::vector<ParamRef> parameters() const override {
    std::vector<ParamRef> out{{"text.token_embedding", token_embedding_}, {"text.positional_embedding", positional_}};
    transformer_.collect(out, "text.transformer");
    ln_final_.collect(out, "text.ln_final");
    out.push_back({"text.text_projection", projection_});
    return out;
  }
  nlohmann::json spec() const override { return spec_; }

 private:
  nlohmann::json spec_;
  std::unique_ptr<Tokenizer> tokenizer_;
  int context_;
  Var token_embedding_;
  Var positional_;
  Transformer transformer_;
  LayerNorm ln_final_;
  Var projection_;
};

// ---------------------------------------------------------------- CLIP ViT

class ClipImageEncoder final : public ImageEncoder {
 public:
  ClipImageEncoder(nlohmann::json spec, const Archive& a) : spec_(std::move(spec)) {
    const auto& v = a.meta.at("visual");
    width_ = v.at("width").get<long>();
    patch_ = v.at("patch_size").get<int>();
    image_size_ = v.at("image_size").get<int>();
    grid_ = image_size_ / patch_;
    const int layers = v.at("layers").get<int>();
    const int heads = v.at("heads").get<int>();
    const auto act = a.meta.value("activation", "quick_gelu") == "gelu" ? Activation::gelu : Activation::quick_gelu;
    Rng rng(0);
    patch_embed_ = parameter(Mat::Zero(3L * patch_ * patch_, width_));
    class_embedding_ = parameter(Mat::Zero(1, width_));
    positional_ = parameter(Mat::Zero(1L + grid_ * grid_, width_));
    ln_pre_ = LayerNorm(width_);
    transformer_ = Transformer(layers, width_, heads, 4 * width_, act, rng);
    ln_post_ = LayerNorm(width_);
    proj_ = parameter(Mat::Zero(width_, v.at("dim").get<long>()));
    auto ps = parameters();
    load_into(a, ps);
  }

  long output_dim() const override { return proj_->cols(); }
  long input_dim() const override { return 3L * image_size_ * image_size_; }

  Mat prepare(std::span<const cv::Mat> images) const override {
    Mat out(static_cast<long>(images.size()), input_dim());
    for (std::size_t i = 0; i < images.size(); ++i) {
      check_image(images[i], image_size_);
      long c = 0;
      // patch-major, then channel, row, column inside the patch (conv weight order)
      for (int gy = 0; gy < grid_; ++gy)
        for (int gx = 0; gx < grid_; ++gx)
          for (int ch = 0; ch < 3; ++ch)
            for (int y = 0; y < patch_; ++y) {
              const auto* row = images[i].ptr<cv::Vec3f>(gy * patch_ + y);
              for (int x = 0; x < patch_; ++x) out(static_cast<long>(i), c++) = row[gx * patch_ + x][ch];
            }
    }
    return out;
  }

  Var encode(const Mat& prepared) const override {
    if (prepared.cols() != input_dim()) throw Error(ErrorCode::shape, "CLIP image encoder: bad prepared width");
    const long patch_len = 3L * patch_ * patch_;
    std::vector<Var> outs;
    for (long i = 0; i < prepared.rows(); ++i) {
      Mat patches = Eigen::Map<const Mat>(prepared.row(i).data(), static_cast<long>(grid_) * grid_, patch_len);
      Var tokens = matmul(constant(std::move(patches)), patch_embed_);
      Var seq = concat_rows(std::vector<Var>{class_embedding_, tokens});
      seq = ln_pre_(add(seq, positional_));
      seq = transformer_(seq, false);
      outs.push_back(matmul(ln_post_(slice_rows(seq, 0, 1)), proj_));
    }
    return outs.size() == 1 ? outs[0] : concat_rows(outs);
  }

  std::vector<ParamRef> parameters() const override {
    std::vector<ParamRef> out{{"visual.patch_embed", patch_embed_},
                              {"visual.class_embedding", class_embedding_},
                              {"visual.positional_embedding", positional_}};
    ln_pre_.collect(out, "visual.ln_pre");
    transformer_.collect(out, "visual.transformer");
    ln_post_.collect(out, "visual.ln_post");
    out.push_back({"visual.proj", proj_});
    return out;
  }
  nlohmann::json spec() const override { return spec_; }

 private:
  nlohmann::json spec_;
  long width_ = 0;
  int patch_ = 32;
  int image_size_ = kSide;
  int grid_ = 7;
  Var patch_embed_;
  Var class_embedding_;
  Var positional_;
  LayerNorm ln_pre_;
  Transformer transformer_;
  LayerNorm ln_post_;
  Var proj_;
};

// CAER_ASSET_DIR overrides the compiled-in location (e.g. after install).
std::string default_bpe_path() {
  const char* env = std::getenv("CAER_ASSET_DIR");
  return std::string(env && *env ? env : CAER_DEFAULT_ASSET_DIR) + "/clip/bpe_simple_vocab_16e6.txt.gz";
}

std::string kind_of(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind")) throw Error(ErrorCode::config, "encoder spec needs a \"kind\"");
  return spec.at("kind").get<std::string>();
}

}  // namespace

std::shared_ptr<ImageEncoder> make_image_encoder(const nlohmann::json& spec) {
  try {
    const auto kind = kind_of(spec);
    if (kind == "standin") return std::make_shared<StandinImageEncoder>(spec);
    if (kind == "clip") return std::make_shared<ClipImageEncoder>(spec, load_archive(spec.at("archive").get<std::string>()));
    throw Error(ErrorCode::config, fmt::format("unknown image encoder kind '{}'", kind));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("image encoder spec: {}", e.what()));
  }
}

std::shared_ptr<TextEncoder> make_text_encoder(const nlohmann::json& spec) {
  try {
    const auto kind = kind_of(spec);
    if (kind == "standin") {
      const long width = spec.value("width", 512L);
      Rng rng(spec.value("seed", std::uint64_t{0}) ^ 0x7e47ULL);
      return std::make_shared<TransformerTextEncoder>(
          spec, std::make_unique<HashTokenizer>(spec.value("vocab", 2048)), width, spec.value("dim", 512L),
          spec.value("layers", 1), spec.value("heads", 8), static_cast<long>(spec.value("mlp_ratio", 1.0) * width),
          spec.value("context_length", 77), Activation::quick_gelu, rng);
    }
    if (kind == "clip") {
      const auto a = load_archive(spec.at("archive").get<std::string>());
      const auto& t = a.meta.at("text");
      const long width = t.at("width").get<long>();
      std::unique_ptr<Tokenizer> tok;
      if (spec.contains("bpe") || t.at("vocab").get<int>() == 49408) {
        tok = std::make_unique<BpeTokenizer>(spec.value("bpe", default_bpe_path()));
      } else {
        tok = std::make_unique<HashTokenizer>(t.at("vocab").get<int>());
      }
      Rng rng(0);
      const auto act = a.meta.value("activation", "quick_gelu") == "gelu" ? Activation::gelu : Activation::quick_gelu;
      auto enc = std::make_shared<TransformerTextEncoder>(spec, std::move(tok), width, t.at("dim").get<long>(),
                                                          t.at("layers").get<int>(), t.at("heads").get<int>(),
                                                          4 * width, t.at("context_length").get<int>(), act, rng);
      enc->load(a);
      return enc;
    }
    throw Error(ErrorCode::config, fmt::format("unknown text encoder kind '{}'", kind));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("text encoder spec: {}", e.what()));
  }
}

std::uint64_t hash_parameters(const std::vector<ParamRef>& params) {
  std::uint64_t h = fnv1a64("params");
  for (const auto& p : params) {
    h = mix_seed(h ^ fnv1a64(p.name));
    h = mix_seed(h ^ static_cast<std::uint64_t>(p.var->rows() * 1000003 + p.var->cols()));
    h ^= fnv1a64(std::string_view(reinterpret_cast<const char*>(p.var->value.data()),
                                  static_cast<std::size_t>(p.var->value.size()) * sizeof(double)));
    h = mix_seed(h);
  }
  return h;
}

}  // namespace caer::model
