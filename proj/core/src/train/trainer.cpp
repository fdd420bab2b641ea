#include "caer/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "caer/error.hpp"
#include "caer/model/checkpoint.hpp"
#include "caer/model/ops.hpp"
#include "caer/util/hash.hpp"
#include "caer/util/rng.hpp"

namespace caer::train {

namespace fs = std::filesystem;
using model::ClipCaerModel;
using model::Mat;
using model::PreparedClip;

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (epochs < 0) throw Error(ErrorCode::config, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::config, "batch_size must be >= 1");
  for (const auto& [group, rate] : learning_rates) {
    if (!(rate > 0.0)) throw Error(ErrorCode::config, fmt::format("learning rate of '{}' must be > 0", group));
  }
  for (int d : schedule.decay_epochs) {
    if (d < 1 || d > epochs) {
      throw Error(ErrorCode::config, fmt::format("decay epoch {} outside [1, {}]", d, epochs));
    }
  }
  if (!(schedule.factor > 0.0)) throw Error(ErrorCode::config, "decay factor must be > 0");
  if (momentum < 0.0 || weight_decay < 0.0) throw Error(ErrorCode::config, "momentum and weight decay must be >= 0");
}

std::map<std::string, double> TrainConfig::rates_at(int epoch) const {
  const double m = schedule.multiplier(epoch);
  std::map<std::string, double> out;
  for (const auto& [group, rate] : learning_rates) out[group] = rate * m;
  return out;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rates", c.learning_rates},
       {"decay_epochs", c.schedule.decay_epochs},
       {"decay_factor", c.schedule.factor},
       {"momentum", c.momentum},
       {"weight_decay", c.weight_decay},
       {"seed", c.seed},
       {"balanced_sampler", c.balanced_sampler},
       {"uar_mode", to_string(c.uar_mode)},
       {"checkpoint_every_epoch", c.checkpoint_every_epoch},
       {"evaluate_train", c.evaluate_train}};
  j["init_checkpoint"] = c.init_checkpoint ? nlohmann::json(c.init_checkpoint->string()) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.learning_rates = d.learning_rates;
  if (j.contains("learning_rates")) {
    for (const auto& [group, rate] : j.at("learning_rates").items()) {
      if (!c.learning_rates.contains(group)) {
        throw Error(ErrorCode::config,
                    fmt::format("unknown parameter group '{}' (image_encoder, temporal_encoder, prompts, fusion)",
                                group));
      }
      c.learning_rates[group] = rate.get<double>();
    }
  }
  c.schedule.decay_epochs = j.value("decay_epochs", d.schedule.decay_epochs);
  c.schedule.factor = j.value("decay_factor", d.schedule.factor);
  c.momentum = j.value("momentum", d.momentum);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.seed = j.value("seed", d.seed);
  c.init_checkpoint.reset();
  if (j.contains("init_checkpoint") && !j.at("init_checkpoint").is_null()) {
    c.init_checkpoint = j.at("init_checkpoint").get<std::string>();
  }
  c.balanced_sampler = j.value("balanced_sampler", d.balanced_sampler);
  c.uar_mode = parse_zero_support(j.value("uar_mode", std::string(to_string(d.uar_mode))));
  c.checkpoint_every_epoch = j.value("checkpoint_every_epoch", d.checkpoint_every_epoch);
  c.evaluate_train = j.value("evaluate_train", d.evaluate_train);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"model", c.model}, {"data", c.data}, {"train", c.train}, {"output_dir", c.output_dir.string()}};
}

RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
  try {
    RunConfig c;
    if (j.contains("model")) c.model = j.at("model").get<model::ModelConfig>();
    if (j.contains("data")) c.data = j.at("data").get<DataConfig>();
    if (j.contains("train")) c.train = j.at("train").get<TrainConfig>();
    c.output_dir = j.value("output_dir", std::string("run"));
    if (j.contains("seed")) {
      const auto seed = j.at("seed").get<std::uint64_t>();
      c.model.seed = c.train.seed = c.data.split_seed = c.data.synthetic.seed = seed;
    }
    if (!base_dir.empty()) {
      resolve_paths(c.data, base_dir);
      if (c.output_dir.is_relative()) c.output_dir = base_dir / c.output_dir;
      if (c.train.init_checkpoint && c.train.init_checkpoint->is_relative()) {
        c.train.init_checkpoint = base_dir / *c.train.init_checkpoint;
      }
    }
    c.train.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("bad run config: {}", e.what()));
  }
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_run_config(j, fs::absolute(path).parent_path());
}

void to_json(nlohmann::json& j, const EpochLog& e) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = {{"epoch", e.epoch},
       {"loss", e.loss},
       {"train_uar", opt(e.train_uar)},
       {"eval_uar", opt(e.eval_uar)},
       {"lr_groups", e.lr_groups}};
}

// ---------------------------------------------------------------- evaluation

const PreparedClip& PreparedCache::get(const ClipCaerModel& model, const ClipProvider& provider, std::size_t index) {
  auto it = cache_.find(index);
  if (it == cache_.end()) {
    it = cache_.emplace(index, model.prepare(provider.load(index, preproc::SampleMode::eval, 0))).first;
  }
  return it->second;
}

EvalResult evaluate(const ClipCaerModel& model, const ClipProvider& provider, std::span<const std::size_t> indices,
                    const EvalOptions& options, PreparedCache* cache) {
  if (indices.empty()) throw Error(ErrorCode::undefined_metric, "nothing to evaluate: the split is empty");
  check_label_sets(model.labels(), provider.labels());
  model::NoGradGuard no_grad;
  PreparedCache local;
  PreparedCache& c = cache ? *cache : local;
  const model::Var text = model.encode_text();
  const auto& items = provider.items();
  std::vector<Prediction> preds;
  preds.reserve(indices.size());
  const std::size_t bs = static_cast<std::size_t>(std::max(1, options.batch_size));
  for (std::size_t start = 0; start < indices.size(); start += bs) {
    const std::size_t end = std::min(indices.size(), start + bs);
    std::vector<PreparedClip> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) batch.push_back(c.get(model, provider, indices[i]));
    const auto logits = model::cosine_logits(model.encode_visual(batch), text, model.config().temperature);
    const Mat p = model::softmax_rows(logits->value);
    for (std::size_t i = start; i < end; ++i) {
      const long row = static_cast<long>(i - start);
      Prediction pr;
      pr.clip_id = items.at(indices[i]).clip_id;
      pr.truth = items[indices[i]].label;
      Eigen::Index arg = 0;
      p.row(row).maxCoeff(&arg);
      pr.predicted = static_cast<int>(arg);
      pr.probabilities.assign(p.row(row).data(), p.row(row).data() + p.cols());
      preds.push_back(std::move(pr));
    }
  }
  return summarize(model.labels().categories(), std::move(preds), options.uar_mode);
}

void check_label_sets(const labels::LabelSet& a, const labels::LabelSet& b) {
  if (a.granularity() == b.granularity() && a.categories() == b.categories()) return;
  throw Error(ErrorCode::label_set_mismatch,
              fmt::format("label sets differ: model has {} [{}], data has {} [{}]", labels::to_string(a.granularity()),
                          fmt::join(a.categories(), ", "), labels::to_string(b.granularity()),
                          fmt::join(b.categories(), ", ")));
}

// ---------------------------------------------------------------- training

namespace {

std::vector<std::size_t> epoch_order(const TrainConfig& cfg, const Dataset& data, int epoch) {
  std::vector<std::size_t> order;
  if (cfg.balanced_sampler) {
    Rng rng(derive_seed(cfg.seed, {10, static_cast<std::uint64_t>(epoch)}));
    std::map<int, std::size_t> freq;
    for (auto i : data.train) ++freq[data.provider->items()[i].label];
    std::vector<double> w;
    for (auto i : data.train) w.push_back(1.0 / static_cast<double>(freq[data.provider->items()[i].label]));
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    for (std::size_t k = 0; k < data.train.size(); ++k) order.push_back(data.train[pick(rng)]);
  } else {
    order = data.train;
    Rng rng(derive_seed(cfg.seed, {11, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);
  }
  return order;
}

}  // namespace

TrainResult train(const RunConfig& run, const Dataset& data, std::unique_ptr<ClipCaerModel> model,
                  const TrainHooks& hooks) {
  const TrainConfig& cfg = run.train;
  cfg.validate();
  if (!model) {
    if (cfg.init_checkpoint) {
      auto loaded = model::load_checkpoint(*cfg.init_checkpoint);
      check_label_sets(loaded.model->labels(), data.labels());
      model = std::move(loaded.model);
      spdlog::info("initialised from {}", cfg.init_checkpoint->string());
    } else {
      model = std::make_unique<ClipCaerModel>(run.model, data.labels());
    }
  }
  check_label_sets(model->labels(), data.labels());
  if (data.train.empty() && cfg.epochs > 0) throw Error(ErrorCode::config, "the train split is empty");

  for (const auto& [group, params] : model->parameter_groups()) {
    if (!cfg.learning_rates.contains(group)) {
      throw Error(ErrorCode::config, fmt::format("no learning rate for group '{}'", group));
    }
  }
  Sgd sgd(model->parameter_groups(), cfg.momentum, cfg.weight_decay);
  const std::uint64_t text_hash = model::hash_parameters(model->frozen_parameters());

  fs::create_directories(run.output_dir);
  std::ofstream log_file(run.output_dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  if (!log_file) throw Error(ErrorCode::io, fmt::format("cannot write {}", (run.output_dir / "train_log.jsonl").string()));

  const nlohmann::json base_extra = {{"train", cfg}, {"data", run.data}};
  const EvalOptions eval_opts{cfg.batch_size, cfg.uar_mode};
  PreparedCache cache;
  const auto& items = data.provider->items();

  TrainResult result;
  long steps_taken = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto rates = cfg.rates_at(epoch);
    const auto order = epoch_order(cfg, data, epoch);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<PreparedClip> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        const auto idx = order[i];
        const auto seed = derive_seed(cfg.seed, {12, static_cast<std::uint64_t>(epoch), idx});
        batch.push_back(model->prepare(data.provider->load(idx, preproc::SampleMode::train, seed)));
        labels.push_back(items[idx].label);
      }
      model::Var loss;
      try {
        loss = model::cross_entropy_logits(model->forward(batch).logits, labels);
      } catch (const Error& e) {
        // after an update, overflow shows up here as a zero-norm feature
        if (e.code() != ErrorCode::degenerate_input || steps_taken == 0) throw;
        throw Error(ErrorCode::divergence, fmt::format("forward pass failed at epoch {}, step {} after {} updates: {}; rates {}",
                                                       epoch, start / cfg.batch_size + 1, steps_taken, e.what(),
                                                       nlohmann::json(rates).dump()));
      }
      const double value = loss->value(0, 0);
      if (!std::isfinite(value)) {
        std::vector<std::string> ids;
        for (std::size_t i = start; i < end; ++i) ids.push_back(items[order[i]].clip_id);
        throw Error(ErrorCode::divergence,
                    fmt::format("non-finite loss at epoch {}, step {} (clips {}); rates {}", epoch,
                                start / cfg.batch_size + 1, fmt::join(ids, ", "), nlohmann::json(rates).dump()));
      }
      model::backward(loss);
      sgd.step(rates);
      sgd.zero_grad();
      ++steps_taken;
      for (const auto& [group, params] : sgd.groups()) {
        for (const auto& p : params) {
          if (!p.var->value.allFinite()) {
            throw Error(ErrorCode::divergence,
                        fmt::format("parameter '{}' became non-finite at epoch {}, step {} (loss {}, rate {})", p.name,
                                    epoch, start / cfg.batch_size + 1, value, rates.at(group)));
          }
        }
      }
      loss_sum += value * static_cast<double>(end - start);
    }
    if (model::hash_parameters(model->frozen_parameters()) != text_hash) {
      throw Error(ErrorCode::config, fmt::format("text encoder changed during epoch {}", epoch));
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.loss = loss_sum / static_cast<double>(order.size());
    entry.lr_groups = rates;
    if (cfg.evaluate_train) entry.train_uar = evaluate(*model, *data.provider, data.train, eval_opts, &cache).uar;
    if (!data.test.empty()) entry.eval_uar = evaluate(*model, *data.provider, data.test, eval_opts, &cache).uar;
    log_file << nlohmann::json(entry).dump() << '\n';
    log_file.flush();
    result.log.push_back(entry);
    spdlog::info("epoch {}: loss {:.5f} train_uar {} eval_uar {}", epoch, entry.loss,
                 entry.train_uar ? fmt::format("{:.4f}", *entry.train_uar) : "-",
                 entry.eval_uar ? fmt::format("{:.4f}", *entry.eval_uar) : "-");

    nlohmann::json extra = base_extra;
    extra["epoch"] = epoch;
    extra["log"] = entry;
    extra["uar_mode"] = to_string(cfg.uar_mode);
    const auto metric = entry.eval_uar ? entry.eval_uar : entry.train_uar;
    if (metric && (!result.best_uar || *metric > *result.best_uar)) {
      result.best_uar = metric;
      result.best_epoch = epoch;
      result.best_checkpoint = run.output_dir / "best.ckpt";
      extra["selected_by"] = entry.eval_uar ? "eval_uar" : "train_uar";
      model::save_checkpoint(result.best_checkpoint, *model, extra);
    }
    if (cfg.checkpoint_every_epoch) {
      model::save_checkpoint(run.output_dir / fmt::format("epoch_{:03d}.ckpt", epoch), *model, extra);
    }
    if (hooks.on_epoch) hooks.on_epoch(entry);
  }

  nlohmann::json extra = base_extra;
  extra["epoch"] = cfg.epochs;
  if (!result.log.empty()) extra["log"] = result.log.back();
  result.last_checkpoint = run.output_dir / "last.ckpt";
  model::save_checkpoint(result.last_checkpoint, *model, extra);
  result.model = std::move(model);
  return result;
}

TrainResult finetune_from(const fs::path& checkpoint, const RunConfig& run, const Dataset& data,
                          const TrainHooks& hooks) {
  RunConfig r = run;
  r.train.init_checkpoint = checkpoint;
  return train(r, data, nullptr, hooks);
}

}  // namespace caer::train
