// caer: command line front end. Results go to stdout as JSON, logs and
// errors to stderr. Exit codes: 0 ok, 1 user error, 2 internal error.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "caer/annotation/server.hpp"
#include "caer/dataset/distribution.hpp"
#include "caer/dataset/export.hpp"
#include "caer/dataset/manifest.hpp"
#include "caer/dataset/split.hpp"
#include "caer/error.hpp"
#include "caer/labels/aggregate.hpp"
#include "caer/model/checkpoint.hpp"
#include "caer/train/ablation.hpp"
#include "caer/train/synthetic.hpp"
#include "caer/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace caer;

namespace {

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot read {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

json train_summary(const train::TrainResult& r) {
  json log = json::array();
  for (const auto& e : r.log) log.push_back(e);
  return {{"best_epoch", r.best_epoch},
          {"best_uar", r.best_uar ? json(*r.best_uar) : json(nullptr)},
          {"best_checkpoint", r.best_checkpoint.string()},
          {"last_checkpoint", r.last_checkpoint.string()},
          {"log", log}};
}

// ---------------------------------------------------------------- commands

struct ValidateArgs {
  fs::path manifest;
  fs::path media_root;
};

void cmd_validate(const ValidateArgs& a) {
  const auto clips = dataset::load_manifest(a.manifest);
  const fs::path root = a.media_root.empty() ? a.manifest.parent_path() : a.media_root;
  std::set<std::string> subjects;
  std::map<std::string, int> scenarios;
  std::vector<std::string> missing;
  int with_boxes = 0;
  for (const auto& c : clips) {
    subjects.insert(c.subject_id);
    ++scenarios[std::string(dataset::to_string(c.scenario))];
    if (!c.face_boxes.empty()) ++with_boxes;
    const fs::path p(c.media_path);
    if (!fs::is_regular_file(p.is_absolute() ? p : root / p)) missing.push_back(c.clip_id);
  }
  print({{"clips", clips.size()},
         {"subjects", subjects.size()},
         {"scenarios", scenarios},
         {"clips_with_face_boxes", with_boxes},
         {"missing_media", missing}});
  if (!missing.empty()) {
    throw Error(ErrorCode::input_integrity, fmt::format("{} clip(s) have no media file under {}", missing.size(), root.string()));
  }
}

struct AggregateArgs {
  fs::path annotations;
  fs::path out;
};

void cmd_aggregate(const AggregateArgs& a) {
  const auto records = labels::read_annotation_table(a.annotations);
  const auto result = labels::aggregate(records);
  fs::create_directories(a.out);
  {
    std::ofstream out(a.out / "aggregated.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, fmt::format("cannot write {}", (a.out / "aggregated.jsonl").string()));
    labels::write_aggregated_labels(out, result.labels);
  }
  json report = result.report;
  report["distribution"] = dataset::class_distribution(result.labels);
  write_json(a.out / "report.json", report);
  print(report);
}

struct SplitArgs {
  fs::path labels;
  fs::path manifest;
  double ratio = 0.8;
  double tolerance = 0.03;
  std::uint64_t seed = 0;
  fs::path out;
};

void cmd_split(const SplitArgs& a) {
  const auto labels = labels::read_aggregated_labels(a.labels);
  const auto manifest = dataset::load_manifest(a.manifest);
  const auto split = dataset::split_subject_disjoint(labels, manifest, {a.ratio, a.seed, a.tolerance});
  std::vector<labels::AggregatedLabel> retained;
  for (const auto& l : labels) {
    if (l.retained) retained.push_back(l);
  }
  const auto files = dataset::export_dataset(retained, split, a.out);
  print({{"train", split.count(dataset::Split::train)},
         {"test", split.count(dataset::Split::test)},
         {"train_fraction", split.train_fraction()},
         {"labels", files.labels.string()},
         {"split", files.split.string()},
         {"distribution", files.distribution.string()}});
}

struct RunArgs {
  fs::path config;
  fs::path output;
  std::optional<std::uint64_t> seed;
  fs::path media_root;
};

train::RunConfig run_config(const RunArgs& a) {
  auto j = read_json(a.config);
  if (a.seed) j["seed"] = *a.seed;
  if (!a.output.empty()) j["output_dir"] = fs::absolute(a.output).string();
  if (!a.media_root.empty()) j["data"]["media_root"] = fs::absolute(a.media_root).string();
  return train::parse_run_config(j, a.config.parent_path());
}

void cmd_train(const RunArgs& a) {
  const auto run = run_config(a);
  const auto data = train::load_dataset(run.data, run.model.n_frames);
  print(train_summary(train::train(run, data)));
}

struct FinetuneArgs {
  RunArgs run;
  fs::path from;
};

void cmd_finetune(const FinetuneArgs& a) {
  const auto run = run_config(a.run);
  const auto data = train::load_dataset(run.data, run.model.n_frames);
  print(train_summary(train::finetune_from(a.from, run, data)));
}

struct EvaluateArgs {
  fs::path checkpoint;
  std::string split = "test";
  fs::path data_config;  // optional: evaluate on other data
  fs::path media_root;
  fs::path out;
  int batch_size = 8;
};

void cmd_evaluate(const EvaluateArgs& a) {
  auto loaded = model::load_checkpoint(a.checkpoint);
  train::DataConfig data_cfg;
  train::ZeroSupport mode = train::ZeroSupport::strict;
  if (loaded.extra.contains("uar_mode")) mode = train::parse_zero_support(loaded.extra.at("uar_mode").get<std::string>());
  if (!a.data_config.empty()) {
    auto j = read_json(a.data_config);
    if (j.contains("data")) j = j.at("data");
    data_cfg = j.get<train::DataConfig>();
    train::resolve_paths(data_cfg, a.data_config.parent_path());
  } else if (loaded.extra.contains("data")) {
    data_cfg = loaded.extra.at("data").get<train::DataConfig>();
  } else {
    throw Error(ErrorCode::config, "checkpoint records no data config; pass --data");
  }
  if (!a.media_root.empty()) data_cfg.media_root = fs::absolute(a.media_root);
  const auto data = train::load_dataset(data_cfg, loaded.model->config().n_frames);
  train::check_label_sets(loaded.model->labels(), data.labels());
  const auto split = dataset::parse_split(a.split);
  const auto& indices = split == dataset::Split::train ? data.train : data.test;
  const auto result = train::evaluate(*loaded.model, *data.provider, indices, {a.batch_size, mode});
  json j = result;
  j["split"] = a.split;
  j["checkpoint"] = a.checkpoint.string();
  j["uar_mode"] = train::to_string(mode);
  if (!a.out.empty()) write_json(a.out, j);
  print(j);
}

struct AblateArgs {
  fs::path grid;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

// Grid file: the grid axes plus the base run under "run" (inline object) or
// "run_config" (path, relative to the grid file).
void cmd_ablate(const AblateArgs& a) {
  auto j = read_json(a.grid);
  json run_j;
  fs::path base = a.grid.parent_path();
  if (j.contains("run")) {
    run_j = j.at("run");
  } else if (j.contains("run_config")) {
    const fs::path p = base / j.at("run_config").get<std::string>();
    run_j = read_json(p);
    base = p.parent_path();
  }
  j.erase("run");
  j.erase("run_config");
  if (a.seed) run_j["seed"] = *a.seed;
  run_j["output_dir"] = fs::absolute(a.out).string();
  const auto run = train::parse_run_config(run_j, base);
  const auto grid = j.get<train::AblationGrid>();
  const auto data = train::load_dataset(run.data, run.model.n_frames);
  const auto rows = train::run_ablation(grid, run, data);
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"cell", r.cell.key()}, {"uar", r.uar ? json(*r.uar) : json(nullptr)}, {"status", r.status}});
  }
  print({{"csv", (a.out / "ablation.csv").string()}, {"cells", out}});
}

struct ServeArgs {
  fs::path plan;
  fs::path media;
  fs::path manifest;
  fs::path store;
  fs::path ui;
  std::string host = "127.0.0.1";
  int port = 8080;
};

annotation::AnnotationServer* g_server = nullptr;

void cmd_serve(const ServeArgs& a) {
  std::vector<std::string> clips;
  annotation::MediaIndex media(a.media);
  if (!a.manifest.empty()) {
    for (const auto& r : dataset::load_manifest(a.manifest)) clips.push_back(r.clip_id);
    media = annotation::MediaIndex::from_manifest(a.manifest, a.media.empty() ? std::nullopt : std::optional(a.media));
  }
  auto plan = annotation::load_plan(a.plan, clips);
  const fs::path store_path = a.store.empty() ? a.plan.parent_path() / "labels.db" : a.store;
  annotation::AnnotationService service(std::move(plan), std::make_shared<annotation::LabelStore>(store_path),
                                        std::move(media));
  annotation::AnnotationServer server(service, a.ui.empty() ? std::nullopt : std::optional(a.ui));
  const int port = server.bind(a.host, a.port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  print({{"listening", fmt::format("http://{}:{}", a.host, port)}, {"store", store_path.string()}});
  server.listen();
  g_server = nullptr;
}

struct SynthArgs {
  fs::path out;
  int subjects = 20;
  std::uint64_t seed = 0;
};

void cmd_synth(const SynthArgs& a) {
  train::SyntheticSpec spec;
  spec.subjects = a.subjects;
  spec.seed = a.seed;
  train::SyntheticCorpus corpus(spec);
  corpus.write(a.out);
  print({{"clips", corpus.clips().size()},
         {"manifest", (a.out / "manifest.jsonl").string()},
         {"annotations", (a.out / "annotations.jsonl").string()}});
}

void fail(std::string_view code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware academic emotion recognition toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->envname("CAER_LOG_LEVEL");

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check a clip manifest and its media files");
  validate->add_option("--manifest", va.manifest)->required();
  validate->add_option("--media-root", va.media_root)->envname("CAER_MEDIA_ROOT");

  AggregateArgs ag;
  auto* aggregate = app.add_subcommand("aggregate", "Majority vote, consistency filter and agreement report");
  aggregate->add_option("--annotations", ag.annotations)->required();
  aggregate->add_option("--out", ag.out)->required();

  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Subject-disjoint train/test split");
  split->add_option("--labels", sp.labels, "aggregated.jsonl from `aggregate`")->required();
  split->add_option("--manifest", sp.manifest)->required();
  split->add_option("--ratio", sp.ratio)->check(CLI::Range(0.0, 1.0));
  split->add_option("--tolerance", sp.tolerance);
  split->add_option("--seed", sp.seed)->envname("CAER_SEED");
  split->add_option("--out", sp.out)->required();

  RunArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
  train_cmd->add_option("--config", tr.config)->required();
  train_cmd->add_option("--output", tr.output, "overrides output_dir")->envname("CAER_OUTPUT_DIR");
  train_cmd->add_option("--seed", tr.seed)->envname("CAER_SEED");
  train_cmd->add_option("--media-root", tr.media_root)->envname("CAER_MEDIA_ROOT");

  FinetuneArgs ft;
  auto* finetune = app.add_subcommand("finetune", "Continue training from a checkpoint");
  finetune->add_option("--from", ft.from)->required();
  finetune->add_option("--config", ft.run.config)->required();
  finetune->add_option("--output", ft.run.output)->envname("CAER_OUTPUT_DIR");
  finetune->add_option("--seed", ft.run.seed)->envname("CAER_SEED");
  finetune->add_option("--media-root", ft.run.media_root)->envname("CAER_MEDIA_ROOT");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  evaluate->add_option("--checkpoint", ev.checkpoint)->required();
  evaluate->add_option("--split", ev.split)->check(CLI::IsMember({"train", "test"}));
  evaluate->add_option("--data", ev.data_config, "data config (defaults to the one stored in the checkpoint)");
  evaluate->add_option("--media-root", ev.media_root)->envname("CAER_MEDIA_ROOT");
  evaluate->add_option("--batch-size", ev.batch_size)->check(CLI::PositiveNumber);
  evaluate->add_option("--out", ev.out, "also write the result JSON here");

  AblateArgs ab;
  auto* ablate = app.add_subcommand("ablate", "Train and evaluate every cell of an ablation grid");
  ablate->add_option("--grid", ab.grid)->required();
  ablate->add_option("--out", ab.out)->required();
  ablate->add_option("--seed", ab.seed)->envname("CAER_SEED");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the annotation backend");
  serve->add_option("--plan", sv.plan, "assignment plan or plan spec")->required()->envname("CAER_PLAN");
  serve->add_option("--media", sv.media)->envname("CAER_MEDIA_ROOT");
  serve->add_option("--manifest", sv.manifest, "clip list and media paths")->envname("CAER_MANIFEST");
  serve->add_option("--store", sv.store, "SQLite label store (default: labels.db next to the plan)")->envname("CAER_STORE");
  serve->add_option("--ui", sv.ui, "directory of static UI files served at /");
  serve->add_option("--host", sv.host)->envname("CAER_HOST");
  serve->add_option("--port", sv.port)->envname("CAER_PORT")->check(CLI::Range(0, 65535));

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Write the synthetic video corpus");
  synth->add_option("--out", sy.out)->required();
  synth->add_option("--subjects", sy.subjects)->check(CLI::PositiveNumber);
  synth->add_option("--seed", sy.seed)->envname("CAER_SEED");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return 1;
  }

  spdlog::set_default_logger(spdlog::stderr_color_mt("caer"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*validate) cmd_validate(va);
    if (*aggregate) cmd_aggregate(ag);
    if (*split) cmd_split(sp);
    if (*train_cmd) cmd_train(tr);
    if (*finetune) cmd_finetune(ft);
    if (*evaluate) cmd_evaluate(ev);
    if (*ablate) cmd_ablate(ab);
    if (*serve) cmd_serve(sv);
    if (*synth) cmd_synth(sy);
  } catch (const Error& e) {
    fail(to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    fail("internal", e.what());
    return 2;
  }
  return 0;
}
