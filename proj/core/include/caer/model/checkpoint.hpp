#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "caer/model/clip_caer.hpp"

namespace caer::model {

inline constexpr int kCheckpointVersion = 1;

// Archive holding the model config, label set, descriptor profile (and its
// hash), the frozen text-encoder hash, every image-encoder, temporal,
// prompt and fusion tensor, plus caller metadata under "extra" (epoch,
// metrics, data and training config).
void save_checkpoint(const std::filesystem::path& path, const ClipCaerModel& model,
                     const nlohmann::json& extra = nlohmann::json::object());

struct LoadedCheckpoint {
  std::unique_ptr<ClipCaerModel> model;
  nlohmann::json extra;
};

// Rebuilds the model and restores its tensors. Throws Error(config) when
// the text encoder no longer hashes to the recorded value.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Copies tensors of `source` into `target` by name; both must have the same
// shapes. Used for fine-tuning from a checkpoint.
void copy_parameters(const ClipCaerModel& source, ClipCaerModel& target);

}  // namespace caer::model
