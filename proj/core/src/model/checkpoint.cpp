#include "caer/model/checkpoint.hpp"

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/model/archive.hpp"
#include "caer/util/hash.hpp"

namespace caer::model {

namespace {

std::vector<ParamRef> stored_parameters(const ClipCaerModel& m) {
  auto all = m.image_encoder().parameters();
  for (const auto& [group, params] : m.parameter_groups()) {
    if (group == "image_encoder") continue;
    all.insert(all.end(), params.begin(), params.end());
  }
  return all;
}

void assign(const std::vector<ParamRef>& params, const std::map<std::string, const Mat*>& values) {
  for (const auto& p : params) {
    auto it = values.find(p.name);
    if (it == values.end()) throw Error(ErrorCode::config, fmt::format("checkpoint lacks tensor '{}'", p.name));
    const Mat& m = *it->second;
    if (m.rows() != p.var->rows() || m.cols() != p.var->cols()) {
      throw Error(ErrorCode::shape, fmt::format("tensor '{}' is {}x{}, model expects {}x{}", p.name, m.rows(),
                                                m.cols(), p.var->rows(), p.var->cols()));
    }
    p.var->value = m;
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ClipCaerModel& model, const nlohmann::json& extra) {
  Archive a;
  a.meta = {{"format", "caer-checkpoint"},
            {"version", kCheckpointVersion},
            {"model", model.config()},
            {"labels", {{"granularity", labels::to_string(model.labels().granularity())},
                        {"categories", model.labels().categories()}}},
            {"descriptor_profile", model.profile()},
            {"descriptor_hash", hex64(model.profile().hash())},
            {"text_encoder_hash", hex64(hash_parameters(model.frozen_parameters()))},
            {"extra", extra}};
  for (const auto& p : stored_parameters(model)) a.tensors.emplace(p.name, p.var->value);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_archive(path, a);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const Archive a = load_archive(path);
  if (a.meta.value("format", "") != "caer-checkpoint") {
    throw Error(ErrorCode::config, fmt::format("{} is not a checkpoint", path.string()));
  }
  if (a.meta.value("version", 0) != kCheckpointVersion) {
    throw Error(ErrorCode::config, fmt::format("{}: unsupported checkpoint version", path.string()));
  }
  try {
    const auto config = a.meta.at("model").get<ModelConfig>();
    const auto& l = a.meta.at("labels");
    labels::LabelSet labels(labels::parse_granularity(l.at("granularity").get<std::string>()),
                            l.at("categories").get<std::vector<std::string>>());
    auto profile = a.meta.at("descriptor_profile").get<DescriptorProfile>();
    if (hex64(profile.hash()) != a.meta.at("descriptor_hash").get<std::string>()) {
      throw Error(ErrorCode::config, fmt::format("{}: descriptor profile hash mismatch", path.string()));
    }
    LoadedCheckpoint out;
    out.model = std::make_unique<ClipCaerModel>(config, std::move(labels), std::move(profile),
                                                make_image_encoder(config.image_encoder),
                                                make_text_encoder(config.text_encoder));
    if (hex64(hash_parameters(out.model->frozen_parameters())) != a.meta.at("text_encoder_hash").get<std::string>()) {
      throw Error(ErrorCode::config,
                  fmt::format("{}: text encoder differs from the one the checkpoint was trained with", path.string()));
    }
    std::map<std::string, const Mat*> values;
    for (const auto& [name, m] : a.tensors) values.emplace(name, &m);
    assign(stored_parameters(*out.model), values);
    out.extra = a.meta.value("extra", nlohmann::json::object());
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("{}: bad checkpoint metadata: {}", path.string(), e.what()));
  }
}

void copy_parameters(const ClipCaerModel& source, ClipCaerModel& target) {
  std::map<std::string, const Mat*> values;
  const auto src = stored_parameters(source);
  for (const auto& p : src) values.emplace(p.name, &p.var->value);
  assign(stored_parameters(target), values);
}

}  // namespace caer::model
