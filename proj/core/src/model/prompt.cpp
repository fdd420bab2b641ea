#include "caer/model/prompt.hpp"

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/model/layers.hpp"
#include "caer/model/ops.hpp"

namespace caer::model {

std::string_view to_string(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::class_name: return "class_name";
    case PromptStrategy::learnable_class_name: return "learnable_class_name";
    case PromptStrategy::descriptors: return "descriptors";
    case PromptStrategy::learnable_descriptors: return "learnable_descriptors";
  }
  return "?";
}

PromptStrategy parse_prompt_strategy(std::string_view text) {
  for (auto s : {PromptStrategy::class_name, PromptStrategy::learnable_class_name, PromptStrategy::descriptors,
                 PromptStrategy::learnable_descriptors}) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::config, fmt::format("unknown prompt strategy '{}'", text));
}

bool is_learnable(PromptStrategy s) {
  return s == PromptStrategy::learnable_class_name || s == PromptStrategy::learnable_descriptors;
}

std::string prompt_text(PromptStrategy s, const std::string& category, const Descriptor* descriptor,
                        bool facial_only) {
  switch (s) {
    case PromptStrategy::class_name: return fmt::format("an emotion of {} during studying", category);
    case PromptStrategy::learnable_class_name: return fmt::format("{} during studying", category);
    case PromptStrategy::descriptors:
    case PromptStrategy::learnable_descriptors:
      if (!descriptor) throw Error(ErrorCode::config, fmt::format("no descriptor for '{}'", category));
      return facial_only ? descriptor->facial_text() : descriptor->full_text();
  }
  return category;
}

PromptLearner::PromptLearner(const labels::LabelSet& labels, const DescriptorProfile& profile,
                             const PromptConfig& config, const TextEncoder& encoder, Rng& rng) {
  if (config.tokens < 0) throw Error(ErrorCode::config, "prompt token count must be >= 0");
  m_ = is_learnable(config.strategy) ? config.tokens : 0;
  const bool needs_descriptors =
      config.strategy == PromptStrategy::descriptors || config.strategy == PromptStrategy::learnable_descriptors;
  const auto& tok = encoder.tokenizer();
  const std::vector<int> sot{tok.sot()};

  for (const auto& category : labels.categories()) {
    const Descriptor* d = needs_descriptors ? &profile.at(category) : nullptr;
    std::string text = prompt_text(config.strategy, category, d, config.facial_only);
    auto ids = tok.encode(text);
    const long length = 2 + m_ + static_cast<long>(ids.size());
    if (length > encoder.context_length()) {
      throw Error(ErrorCode::prompt_too_long,
                  fmt::format("prompt for class '{}' needs {} tokens ({} learnable + {} text + 2), context is {}",
                              category, length, m_, ids.size(), encoder.context_length()));
    }
    ids.push_back(tok.eot());
    categories_.push_back(category);
    texts_.push_back(std::move(text));
    prefix_.push_back(encoder.embed(sot));
    suffix_.push_back(encoder.embed(ids));
    if (m_ > 0) vectors_.push_back(parameter(randn(m_, encoder.width(), config.init_std, rng)));
  }
}

long PromptLearner::sequence_length(std::size_t k) const { return 1 + m_ + suffix_[k].rows(); }

Var PromptLearner::build(std::size_t k) const {
  std::vector<Var> parts{constant(prefix_[k])};
  if (m_ > 0) parts.push_back(vectors_[k]);
  parts.push_back(constant(suffix_[k]));
  return concat_rows(parts);
}

Var PromptLearner::encode(const TextEncoder& encoder) const {
  std::vector<Var> rows;
  rows.reserve(classes());
  for (std::size_t k = 0; k < classes(); ++k) rows.push_back(encoder.encode(build(k)));
  return concat_rows(rows);
}

void PromptLearner::collect(std::vector<ParamRef>& out) const {
  for (std::size_t k = 0; k < vectors_.size(); ++k) out.push_back({"prompts." + categories_[k], vectors_[k]});
}

}  // namespace caer::model
