#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "caer/labels/label_set.hpp"
#include "caer/model/descriptors.hpp"
#include "caer/model/encoders.hpp"
#include "caer/util/rng.hpp"

namespace caer::model {

enum class PromptStrategy { class_name, learnable_class_name, descriptors, learnable_descriptors };

std::string_view to_string(PromptStrategy s);
PromptStrategy parse_prompt_strategy(std::string_view text);
bool is_learnable(PromptStrategy s);

struct PromptConfig {
  PromptStrategy strategy = PromptStrategy::learnable_descriptors;
  int tokens = 8;  // M; forced to 0 for non-learnable strategies
  double init_std = 0.02;
  bool facial_only = false;  // descriptors reduced to their facial clause
};

// Fixed text of class k's prompt under a strategy.
std::string prompt_text(PromptStrategy s, const std::string& category, const Descriptor* descriptor,
                        bool facial_only);

// Per-class prompt sequences [sot][p_1..p_M][text tokens][eot] fed to the
// frozen text encoder. Only the p vectors are trainable.
class PromptLearner {
 public:
  PromptLearner(const labels::LabelSet& labels, const DescriptorProfile& profile, const PromptConfig& config,
                const TextEncoder& encoder, Rng& rng);

  int learnable_tokens() const { return m_; }
  std::size_t classes() const { return texts_.size(); }
  const std::string& text(std::size_t k) const { return texts_[k]; }
  long sequence_length(std::size_t k) const;

  // Token-embedding sequence of class k (L x width).
  Var build(std::size_t k) const;
  // K x dim text features.
  Var encode(const TextEncoder& encoder) const;

  const std::vector<Var>& vectors() const { return vectors_; }  // one M x width tensor per class
  void collect(std::vector<ParamRef>& out) const;

 private:
  int m_ = 0;
  std::vector<std::string> categories_;
  std::vector<std::string> texts_;
  std::vector<Mat> prefix_;  // sot embedding
  std::vector<Mat> suffix_;  // text tokens + eot
  std::vector<Var> vectors_;
};

}  // namespace caer::model
