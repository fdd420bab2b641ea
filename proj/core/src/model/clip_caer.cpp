#include "caer/model/clip_caer.hpp"

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/model/ops.hpp"

namespace caer::model {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::face_only: return "face_only";
    case Variant::context_only: return "context_only";
    case Variant::both: return "both";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "face_only" || text == "a") return Variant::face_only;
  if (text == "context_only" || text == "b") return Variant::context_only;
  if (text == "both" || text == "c") return Variant::both;
  throw Error(ErrorCode::config, fmt::format("unknown variant '{}' (face_only, context_only, both)", text));
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"variant", to_string(c.variant)},
       {"prompt_strategy", to_string(c.prompt_strategy)},
       {"prompt_tokens", c.prompt_tokens},
       {"temporal_layers", c.temporal_layers},
       {"temporal_heads", c.temporal_heads},
       {"temporal_mlp_dim", c.temporal_mlp_dim},
       {"n_frames", c.n_frames},
       {"temperature", c.temperature},
       {"init_std", c.init_std},
       {"seed", c.seed},
       {"descriptor_profile", c.descriptor_profile},
       {"image_encoder", c.image_encoder},
       {"text_encoder", c.text_encoder},
       {"train_image_encoder", c.train_image_encoder}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  const ModelConfig d;
  c.variant = parse_variant(j.value("variant", std::string(to_string(d.variant))));
  c.prompt_strategy = parse_prompt_strategy(j.value("prompt_strategy", std::string(to_string(d.prompt_strategy))));
  c.prompt_tokens = j.value("prompt_tokens", d.prompt_tokens);
  c.temporal_layers = j.value("temporal_layers", d.temporal_layers);
  c.temporal_heads = j.value("temporal_heads", d.temporal_heads);
  c.temporal_mlp_dim = j.value("temporal_mlp_dim", d.temporal_mlp_dim);
  c.n_frames = j.value("n_frames", d.n_frames);
  c.temperature = j.value("temperature", d.temperature);
  c.init_std = j.value("init_std", d.init_std);
  c.seed = j.value("seed", d.seed);
  c.descriptor_profile = j.value("descriptor_profile", d.descriptor_profile);
  c.image_encoder = j.value("image_encoder", d.image_encoder);
  c.text_encoder = j.value("text_encoder", d.text_encoder);
  c.train_image_encoder = j.value("train_image_encoder", d.train_image_encoder);
  if (!(c.temperature > 0.0)) throw Error(ErrorCode::config, "temperature must be positive");
}

Var cosine_logits(const Var& visual, const Var& text, double temperature, Var* similarities) {
  Var sim = matmul_nt(l2_normalize_rows(visual), l2_normalize_rows(text));
  if (similarities) *similarities = sim;
  return temperature == 1.0 ? sim : scale(sim, 1.0 / temperature);
}

ClipCaerModel::ClipCaerModel(ModelConfig config, labels::LabelSet labels)
    : ClipCaerModel(config, std::move(labels), resolve_descriptor_profile(config.descriptor_profile),
                    make_image_encoder(config.image_encoder), make_text_encoder(config.text_encoder)) {}

ClipCaerModel::ClipCaerModel(ModelConfig config, labels::LabelSet labels, DescriptorProfile profile,
                             std::shared_ptr<ImageEncoder> image_encoder, std::shared_ptr<TextEncoder> text_encoder)
    : config_(std::move(config)),
      labels_(std::move(labels)),
      profile_(std::move(profile)),
      image_encoder_(std::move(image_encoder)),
      text_encoder_(std::move(text_encoder)) {
  const long d = image_encoder_->output_dim();
  if (text_encoder_->output_dim() != d) {
    throw Error(ErrorCode::config, fmt::format("image embedding width {} differs from text embedding width {}", d,
                                               text_encoder_->output_dim()));
  }
  if (labels_.size() < 2) throw Error(ErrorCode::config, "need at least two classes");
  Rng rng(config_.seed);
  TemporalConfig tc{d, config_.temporal_layers, config_.temporal_heads, config_.temporal_mlp_dim, config_.n_frames,
                    config_.init_std};
  face_encoder_ = TemporalEncoder(tc, rng);
  context_encoder_ = TemporalEncoder(tc, rng);
  fusion_ = Linear(2 * d, d, rng);
  PromptConfig pc{config_.prompt_strategy, config_.prompt_tokens, config_.init_std,
                  config_.variant == Variant::face_only};
  prompts_ = std::make_unique<PromptLearner>(labels_, profile_, pc, *text_encoder_, rng);
  if (!config_.train_image_encoder) {
    for (auto& p : image_encoder_->parameters()) p.var->requires_grad = false;
  }
}

PreparedClip ClipCaerModel::prepare(const preproc::ClipSample& s) const {
  PreparedClip p;
  if (config_.variant != Variant::context_only) {
    if (s.faces.images.empty()) throw Error(ErrorCode::config, fmt::format("clip {}: face stream missing", s.faces.clip_id));
    p.face = image_encoder_->prepare(s.faces.images);
  }
  if (config_.variant != Variant::face_only) {
    if (s.frames.images.empty()) throw Error(ErrorCode::config, fmt::format("clip {}: frame stream missing", s.frames.clip_id));
    p.frame = image_encoder_->prepare(s.frames.images);
  }
  return p;
}

Var ClipCaerModel::encode_text() const { return prompts_->encode(*text_encoder_); }

Var ClipCaerModel::encode_stream(std::span<const PreparedClip> clips, bool face) const {
  if (clips.empty()) throw Error(ErrorCode::shape, "empty batch");
  long rows = 0;
  const long width = image_encoder_->input_dim();
  for (const auto& c : clips) {
    const Mat& m = face ? c.face : c.frame;
    if (m.rows() == 0) throw Error(ErrorCode::config, fmt::format("{} stream missing", face ? "face" : "frame"));
    if (m.cols() != width) throw Error(ErrorCode::shape, "prepared rows do not match the image encoder");
    rows += m.rows();
  }
  Mat stacked(rows, width);
  long r = 0;
  for (const auto& c : clips) {
    const Mat& m = face ? c.face : c.frame;
    stacked.middleRows(r, m.rows()) = m;
    r += m.rows();
  }
  const Var features = image_encoder_->encode(stacked);
  const TemporalEncoder& enc = face ? face_encoder_ : context_encoder_;
  std::vector<Var> tokens;
  tokens.reserve(clips.size());
  r = 0;
  for (const auto& c : clips) {
    const long n = (face ? c.face : c.frame).rows();
    tokens.push_back(enc(slice_rows(features, r, n)));
    r += n;
  }
  return tokens.size() == 1 ? tokens[0] : concat_rows(tokens);
}

Var ClipCaerModel::fuse(const Var& face_tokens, const Var& context_tokens) const {
  if (face_tokens->rows() != context_tokens->rows() || face_tokens->cols() != dim() || context_tokens->cols() != dim()) {
    throw Error(ErrorCode::shape, "fuse: token shapes differ");
  }
  return fusion_(concat_cols(std::vector<Var>{face_tokens, context_tokens}));
}

Var ClipCaerModel::encode_visual(std::span<const PreparedClip> clips) const {
  switch (config_.variant) {
    case Variant::face_only: return encode_stream(clips, true);
    case Variant::context_only: return encode_stream(clips, false);
    case Variant::both: return fuse(encode_stream(clips, true), encode_stream(clips, false));
  }
  return nullptr;
}

ForwardResult ClipCaerModel::forward(std::span<const PreparedClip> clips) const {
  ForwardResult out;
  out.visual = encode_visual(clips);
  out.text = encode_text();
  out.logits = cosine_logits(out.visual, out.text, config_.temperature, &out.similarities);
  out.probabilities = softmax_rows(out.logits->value);
  return out;
}

std::map<std::string, std::vector<ParamRef>> ClipCaerModel::parameter_groups() const {
  std::map<std::string, std::vector<ParamRef>> g;
  g["image_encoder"] = config_.train_image_encoder ? image_encoder_->parameters() : std::vector<ParamRef>{};
  face_encoder_.collect(g["temporal_encoder"], "temporal.face");
  context_encoder_.collect(g["temporal_encoder"], "temporal.context");
  prompts_->collect(g["prompts"]);
  fusion_.collect(g["fusion"], "fusion");
  return g;
}

std::vector<ParamRef> ClipCaerModel::trainable_parameters() const {
  std::vector<ParamRef> all;
  for (const auto& [name, params] : parameter_groups()) all.insert(all.end(), params.begin(), params.end());
  return all;
}

std::vector<ParamRef> ClipCaerModel::frozen_parameters() const { return text_encoder_->parameters(); }

}  // namespace caer::model
