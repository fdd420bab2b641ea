#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/model/clip_caer.hpp"
#include "caer/train/data.hpp"
#include "caer/train/metrics.hpp"
#include "caer/train/optim.hpp"

namespace caer::train {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  std::map<std::string, double> learning_rates{
      {"image_encoder", 1e-5}, {"temporal_encoder", 1e-2}, {"prompts", 1e-3}, {"fusion", 1e-5}};
  StepSchedule schedule;
  double momentum = 0.0;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> init_checkpoint;
  bool balanced_sampler = false;
  ZeroSupport uar_mode = ZeroSupport::strict;
  bool checkpoint_every_epoch = true;
  bool evaluate_train = true;  // eval-mode pass over the train split each epoch

  // Error(config) unless every group rate is > 0, epochs >= 0, batch >= 1 and
  // all decay epochs lie in [1, epochs].
  void validate() const;
  std::map<std::string, double> rates_at(int epoch) const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

// Everything one training run needs; the JSON form of `caer train --config`.
//   {"model": {...}, "data": {...}, "train": {...}, "output_dir": "...",
//    "seed": N}
// A top-level seed overrides the model, training and split seeds.
struct RunConfig {
  model::ModelConfig model;
  DataConfig data;
  TrainConfig train;
  std::filesystem::path output_dir = "run";
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Relative paths resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> train_uar;
  std::optional<double> eval_uar;
  std::map<std::string, double> lr_groups;
};

void to_json(nlohmann::json& j, const EpochLog& e);

// Eval-mode inputs are fixed per clip, so they are prepared once.
class PreparedCache {
 public:
  const model::PreparedClip& get(const model::ClipCaerModel& model, const ClipProvider& provider, std::size_t index);
  void clear() { cache_.clear(); }

 private:
  std::map<std::size_t, model::PreparedClip> cache_;
};

struct EvalOptions {
  int batch_size = 8;
  ZeroSupport uar_mode = ZeroSupport::strict;
};

// Deterministic evaluation over the given clips. Error(undefined_metric)
// when `indices` is empty.
EvalResult evaluate(const model::ClipCaerModel& model, const ClipProvider& provider,
                    std::span<const std::size_t> indices, const EvalOptions& options = {},
                    PreparedCache* cache = nullptr);

// Error(label_set_mismatch) listing both class lists unless they agree in
// granularity and order.
void check_label_sets(const labels::LabelSet& model_labels, const labels::LabelSet& data_labels);

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::optional<double> best_uar;
  std::filesystem::path best_checkpoint;
  std::filesystem::path last_checkpoint;
  std::unique_ptr<model::ClipCaerModel> model;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
};

// Trains `model` in place (when given) or a fresh model built from
// run.model (initialised from run.train.init_checkpoint when set).
//
// Writes <output_dir>/train_log.jsonl, best.ckpt (highest eval UAR; train
// UAR when there is no test split), last.ckpt and, if enabled,
// epoch_NNN.ckpt. Throws Error(divergence) on a non-finite loss and
// Error(config) if the text encoder changes.
TrainResult train(const RunConfig& run, const Dataset& data, std::unique_ptr<model::ClipCaerModel> model = nullptr,
                  const TrainHooks& hooks = {});

// Starts from the checkpoint's parameters and model config.
TrainResult finetune_from(const std::filesystem::path& checkpoint, const RunConfig& run, const Dataset& data,
                          const TrainHooks& hooks = {});

}  // namespace caer::train
