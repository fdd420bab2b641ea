#include "caer/train/ablation.hpp"

#include <fstream>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "caer/error.hpp"

namespace caer::train {

namespace fs = std::filesystem;
using model::PromptStrategy;
using model::Variant;

void to_json(nlohmann::json& j, const AblationGrid& g) {
  std::vector<std::string> variants, strategies;
  for (auto v : g.variants) variants.emplace_back(model::to_string(v));
  for (auto s : g.prompt_strategies) strategies.emplace_back(model::to_string(s));
  j = {{"variants", variants}, {"prompt_strategies", strategies}, {"layers", g.layers}, {"tokens", g.tokens}};
}

void from_json(const nlohmann::json& j, AblationGrid& g) {
  const AblationGrid d;
  for (const auto& [key, _] : j.items()) {
    if (key != "variants" && key != "prompt_strategies" && key != "layers" && key != "tokens") {
      throw Error(ErrorCode::config, fmt::format("unknown ablation grid key '{}'", key));
    }
  }
  g = d;
  if (j.contains("variants")) {
    g.variants.clear();
    for (const auto& v : j.at("variants")) g.variants.push_back(model::parse_variant(v.get<std::string>()));
  }
  if (j.contains("prompt_strategies")) {
    g.prompt_strategies.clear();
    for (const auto& s : j.at("prompt_strategies")) {
      g.prompt_strategies.push_back(model::parse_prompt_strategy(s.get<std::string>()));
    }
  }
  if (j.contains("layers")) g.layers = j.at("layers").get<std::vector<int>>();
  if (j.contains("tokens")) g.tokens = j.at("tokens").get<std::vector<int>>();
  if (g.variants.empty() || g.prompt_strategies.empty() || g.layers.empty() || g.tokens.empty()) {
    throw Error(ErrorCode::config, "every ablation axis needs at least one value");
  }
}

std::string AblationCell::key() const {
  return fmt::format("{}/{}/L{}/M{}", model::to_string(variant), model::to_string(prompt_strategy), layers, tokens);
}

std::vector<AblationCell> expand(const AblationGrid& grid) {
  std::vector<AblationCell> cells;
  for (auto v : grid.variants) {
    for (auto s : grid.prompt_strategies) {
      for (int l : grid.layers) {
        if (!model::is_learnable(s)) {
          cells.push_back({v, s, l, 0});
          continue;
        }
        for (int m : grid.tokens) cells.push_back({v, s, l, m});
      }
    }
  }
  return cells;
}

std::vector<ReferenceValue> reference_values(const AblationCell& c) {
  std::vector<ReferenceValue> out;
  const bool default_arch = c.layers == 1 && (c.tokens == 8 || !model::is_learnable(c.prompt_strategy));
  if (c.variant == Variant::both && default_arch) {
    switch (c.prompt_strategy) {
      case PromptStrategy::class_name: out.push_back({"prompt strategies", 62.14}); break;
      case PromptStrategy::learnable_class_name: out.push_back({"prompt strategies", 64.26}); break;
      case PromptStrategy::descriptors: out.push_back({"prompt strategies", 65.43}); break;
      case PromptStrategy::learnable_descriptors: out.push_back({"prompt strategies", 68.00}); break;
    }
  }
  if (c.prompt_strategy == PromptStrategy::learnable_descriptors && c.layers == 1 && c.tokens == 8) {
    switch (c.variant) {
      case Variant::face_only: out.push_back({"input design", 61.19}); break;
      case Variant::context_only: out.push_back({"input design", 58.03}); break;
      case Variant::both: out.push_back({"input design", 68.00}); break;
    }
  }
  if (c.variant == Variant::both && c.prompt_strategy == PromptStrategy::learnable_descriptors) {
    static const std::map<std::pair<int, int>, double> layer_tokens{
        {{1, 8}, 68.00}, {{2, 8}, 64.78}, {{3, 8}, 64.29}, {{1, 4}, 65.54}, {{1, 12}, 64.15}, {{1, 16}, 64.27}};
    if (auto it = layer_tokens.find({c.layers, c.tokens}); it != layer_tokens.end()) {
      out.push_back({"layers and tokens", it->second});
    }
  }
  return out;
}

namespace {

std::string csv_recalls(const std::vector<std::optional<double>>& recalls) {
  std::vector<std::string> parts;
  for (const auto& r : recalls) parts.push_back(r ? fmt::format("{:.6f}", *r) : "");
  return fmt::format("{}", fmt::join(parts, ";"));
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace

void write_ablation_csv(const fs::path& path, const std::vector<AblationRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", path.string()));
  out << "variant,prompt_strategy,layers,M,uar,per_class_recalls,status\n";
  for (const auto& r : rows) {
    out << model::to_string(r.cell.variant) << ',' << model::to_string(r.cell.prompt_strategy) << ','
        << r.cell.layers << ',' << r.cell.tokens << ',' << (r.uar ? fmt::format("{:.6f}", *r.uar) : "") << ','
        << csv_recalls(r.recalls) << ',' << csv_field(r.status) << '\n';
  }
  if (!out) throw Error(ErrorCode::io, fmt::format("failed writing {}", path.string()));
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const RunConfig& base, const Dataset& data,
                                      const AblationHooks& hooks) {
  const auto cells = expand(grid);
  fs::create_directories(base.output_dir);
  std::vector<AblationRow> rows;
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& cell : cells) {
    RunConfig run = base;
    run.model.variant = cell.variant;
    run.model.prompt_strategy = cell.prompt_strategy;
    run.model.temporal_layers = cell.layers;
    run.model.prompt_tokens = cell.tokens;
    run.output_dir = base.output_dir / fmt::format("{}_{}_L{}_M{}", model::to_string(cell.variant),
                                                   model::to_string(cell.prompt_strategy), cell.layers, cell.tokens);
    AblationRow row{cell, std::nullopt, {}, "ok"};
    spdlog::info("ablation cell {}", cell.key());
    try {
      auto res = train(run, data);
      const auto ev = evaluate(*res.model, *data.provider, data.test, {run.train.batch_size, run.train.uar_mode});
      row.uar = ev.uar;
      row.recalls = ev.recalls;
    } catch (const Error& e) {
      row.status = fmt::format("failed: {}: {}", to_string(e.code()), e.what());
      spdlog::warn("ablation cell {} failed: {}", cell.key(), e.what());
    }
    nlohmann::json ref_list = nlohmann::json::array();
    for (const auto& r : reference_values(cell)) {
      ref_list.push_back({{"table", r.table}, {"published_uar_percent", r.uar_percent}});
    }
    if (!ref_list.empty()) refs.push_back({{"cell", cell.key()}, {"references", ref_list}});
    rows.push_back(row);
    if (hooks.on_cell) hooks.on_cell(row);
    write_ablation_csv(base.output_dir / "ablation.csv", rows);
  }
  std::ofstream ref_out(base.output_dir / "ablation_references.json", std::ios::binary | std::ios::trunc);
  ref_out << nlohmann::json{{"note", "published values on the original data; not comparable to synthetic runs"},
                            {"cells", refs}}
                 .dump(2)
          << '\n';
  return rows;
}

}  // namespace caer::train
