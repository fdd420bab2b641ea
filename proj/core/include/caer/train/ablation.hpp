#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/model/clip_caer.hpp"
#include "caer/train/trainer.hpp"

namespace caer::train {

// Axes of the sweep. Strategies without learnable tokens ignore M, so they
// contribute one cell with M = 0 instead of one per token count.
struct AblationGrid {
  std::vector<model::Variant> variants{model::Variant::face_only, model::Variant::context_only,
                                       model::Variant::both};
  std::vector<model::PromptStrategy> prompt_strategies{
      model::PromptStrategy::class_name, model::PromptStrategy::learnable_class_name,
      model::PromptStrategy::descriptors, model::PromptStrategy::learnable_descriptors};
  std::vector<int> layers{1, 2, 3};
  std::vector<int> tokens{4, 8, 12, 16};
};

void to_json(nlohmann::json& j, const AblationGrid& g);
void from_json(const nlohmann::json& j, AblationGrid& g);

struct AblationCell {
  model::Variant variant = model::Variant::both;
  model::PromptStrategy prompt_strategy = model::PromptStrategy::learnable_descriptors;
  int layers = 1;
  int tokens = 8;

  std::string key() const;  // e.g. "both/learnable_descriptors/L1/M8"
  bool operator==(const AblationCell&) const = default;
};

std::vector<AblationCell> expand(const AblationGrid& grid);

struct AblationRow {
  AblationCell cell;
  std::optional<double> uar;
  std::vector<std::optional<double>> recalls;
  std::string status;  // "ok" or "failed: <code>: <message>"
};

// Published UARs (percent) for the cells the original study reported on its
// own data. Informational only; nothing here is checked against results.
struct ReferenceValue {
  std::string table;
  double uar_percent = 0.0;
};
std::vector<ReferenceValue> reference_values(const AblationCell& cell);

struct AblationHooks {
  std::function<void(const AblationRow&)> on_cell;
};

// One train + test evaluation per cell, every cell on the same seed. Each
// cell trains under <base.output_dir>/<variant>_<strategy>_L<l>_M<m>. A cell
// that throws caer::Error is recorded as failed and the sweep continues.
// Writes ablation.csv and ablation_references.json into base.output_dir.
std::vector<AblationRow> run_ablation(const AblationGrid& grid, const RunConfig& base, const Dataset& data,
                                      const AblationHooks& hooks = {});

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace caer::train
