#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/labels/label_set.hpp"
#include "caer/model/descriptors.hpp"
#include "caer/model/encoders.hpp"
#include "caer/model/prompt.hpp"
#include "caer/model/temporal.hpp"
#include "caer/preproc/pipeline.hpp"

namespace caer::model {

enum class Variant { face_only, context_only, both };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct ModelConfig {
  Variant variant = Variant::both;
  PromptStrategy prompt_strategy = PromptStrategy::learnable_descriptors;
  int prompt_tokens = 8;
  int temporal_layers = 1;
  int temporal_heads = 8;
  long temporal_mlp_dim = 2048;
  int n_frames = 16;
  double temperature = 1.0;
  double init_std = 0.02;
  std::uint64_t seed = 0;
  std::string descriptor_profile = "academic";  // name or path
  nlohmann::json image_encoder = {{"kind", "standin"}, {"dim", 512}};
  nlohmann::json text_encoder = {{"kind", "standin"}, {"width", 512}, {"dim", 512}};
  bool train_image_encoder = true;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Encoder-ready rows of one clip. A stream the variant does not use stays
// empty.
struct PreparedClip {
  Mat face;   // N x input_dim
  Mat frame;  // N x input_dim
};

struct ForwardResult {
  Var visual;        // B x d
  Var text;          // K x d
  Var similarities;  // B x K cosine
  Var logits;        // similarities / temperature
  Mat probabilities;
};

// Cosine-similarity classifier: logits = cos(visual_b, text_k) / temperature.
// Zero-norm rows raise Error(degenerate_input).
Var cosine_logits(const Var& visual, const Var& text, double temperature, Var* similarities = nullptr);

class ClipCaerModel {
 public:
  static constexpr const char* kGroups[] = {"image_encoder", "temporal_encoder", "prompts", "fusion"};

  ClipCaerModel(ModelConfig config, labels::LabelSet labels, DescriptorProfile profile,
                std::shared_ptr<ImageEncoder> image_encoder, std::shared_ptr<TextEncoder> text_encoder);
  // Builds the encoders from config.image_encoder / config.text_encoder and
  // resolves config.descriptor_profile.
  ClipCaerModel(ModelConfig config, labels::LabelSet labels);

  const ModelConfig& config() const { return config_; }
  const labels::LabelSet& labels() const { return labels_; }
  const DescriptorProfile& profile() const { return profile_; }
  const ImageEncoder& image_encoder() const { return *image_encoder_; }
  const TextEncoder& text_encoder() const { return *text_encoder_; }
  const PromptLearner& prompts() const { return *prompts_; }
  long dim() const { return image_encoder_->output_dim(); }

  // Only the streams the variant uses are read.
  PreparedClip prepare(const preproc::ClipSample& sample) const;

  Var encode_text() const;                                     // K x d
  Var encode_visual(std::span<const PreparedClip> clips) const;  // B x d
  Var encode_stream(std::span<const PreparedClip> clips, bool face) const;  // B x d class tokens
  Var fuse(const Var& face_tokens, const Var& context_tokens) const;
  ForwardResult forward(std::span<const PreparedClip> clips) const;

  std::map<std::string, std::vector<ParamRef>> parameter_groups() const;
  std::vector<ParamRef> trainable_parameters() const;  // all groups, stable order
  std::vector<ParamRef> frozen_parameters() const;     // text encoder

  const TemporalEncoder& face_encoder() const { return face_encoder_; }
  const TemporalEncoder& context_encoder() const { return context_encoder_; }
  const Linear& fusion() const { return fusion_; }

 private:
  ModelConfig config_;
  labels::LabelSet labels_;
  DescriptorProfile profile_;
  std::shared_ptr<ImageEncoder> image_encoder_;
  std::shared_ptr<TextEncoder> text_encoder_;
  TemporalEncoder face_encoder_;
  TemporalEncoder context_encoder_;
  Linear fusion_;
  std::unique_ptr<PromptLearner> prompts_;
};

}  // namespace caer::model
