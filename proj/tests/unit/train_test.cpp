#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <fmt/format.h>

#include "caer/dataset/export.hpp"
#include "caer/error.hpp"
#include "caer/labels/aggregate.hpp"
#include "caer/model/archive.hpp"
#include "caer/model/checkpoint.hpp"
#include "caer/model/ops.hpp"
#include "caer/preproc/image_ops.hpp"
#include "caer/train/ablation.hpp"
#include "caer/train/trainer.hpp"
#include "support/mini_model.hpp"
#include "support/temp_dir.hpp"

using namespace caer;
using namespace caer::train;
using caer::testing::TempDir;
using model::Mat;

namespace {

template <class F>
ErrorCode error_of(F&& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "no caer::Error thrown";
  return ErrorCode::io;
}

// Recall per class and their mean, straight from the definition.
double uar_oracle(const ConfusionMatrix& m) {
  double s = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    long row = 0;
    for (long c : m[i]) row += c;
    if (row == 0) continue;
    s += static_cast<double>(m[i][i]) / row;
    ++n;
  }
  return s / n;
}

std::string pct2(double v) { return fmt::format("{:.2f}", v); }

SyntheticSpec tiny_spec() {
  SyntheticSpec s;
  s.subjects = 5;
  s.min_frames = 6;
  s.max_frames = 10;
  return s;
}

Dataset tiny_data() { return synthetic_dataset(std::make_shared<SyntheticCorpus>(tiny_spec()), 4); }

RunConfig tiny_run(const std::filesystem::path& out) {
  RunConfig r;
  r.model = caer::testing::mini_config(model::Variant::both, 8, 4);
  r.train.epochs = 2;
  r.train.batch_size = 4;
  r.train.schedule.decay_epochs = {2};
  r.output_dir = out;
  return r;
}

std::map<std::string, Mat> tensors_of(const model::ClipCaerModel& m) {
  std::map<std::string, Mat> out;
  for (const auto& p : m.trainable_parameters()) out.emplace(p.name, p.var->value);
  for (const auto& p : m.image_encoder().parameters()) out.emplace(p.name, p.var->value);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- metrics

TEST(CrossEntropy, ClosedForms) {
  Mat uniform = Mat::Constant(3, 5, 0.2);
  std::vector<int> y{0, 3, 4};
  EXPECT_NEAR(cross_entropy(uniform, y), std::log(5.0), 1e-15);

  Mat onehot = Mat::Zero(1, 5);
  onehot(0, 2) = 1.0;
  EXPECT_EQ(cross_entropy(onehot, std::vector<int>{2}), 0.0);

  const double e = std::exp(1.0);
  Mat p(1, 5);
  p << e / (e + 4), 1 / (e + 4), 1 / (e + 4), 1 / (e + 4), 1 / (e + 4);
  EXPECT_NEAR(cross_entropy(p, std::vector<int>{0}), std::log(e + 4) - 1.0, 1e-14);
  EXPECT_NEAR(cross_entropy(p, std::vector<int>{0}), 0.9048324, 1e-7);
}

TEST(CrossEntropy, ClampsZeroAndRejectsNonSimplex) {
  Mat p = Mat::Zero(1, 3);
  p(0, 1) = 1.0;
  EXPECT_NEAR(cross_entropy(p, std::vector<int>{0}), -std::log(1e-12), 1e-9);
  Mat bad = Mat::Constant(1, 3, 0.5);
  EXPECT_EQ(error_of([&] { cross_entropy(bad, std::vector<int>{0}); }), ErrorCode::degenerate_input);
  Mat neg(1, 2);
  neg << 1.5, -0.5;
  EXPECT_EQ(error_of([&] { cross_entropy(neg, std::vector<int>{0}); }), ErrorCode::degenerate_input);
  EXPECT_EQ(error_of([&] { cross_entropy(p, std::vector<int>{0, 1}); }), ErrorCode::shape);
}

TEST(Uar, PaperTableArithmetic) {
  // Rows a, b, c of the JuniorRAER generalisation table.
  EXPECT_EQ(pct2(uar_from_recalls(std::vector<double>{58.16, 10.00, 0.00, 75.00, 64.00})), "41.43");
  EXPECT_EQ(pct2(uar_from_recalls(std::vector<double>{100.00, 0.00, 0.00, 0.00, 0.00})), "20.00");
  EXPECT_EQ(pct2(uar_from_recalls(std::vector<double>{95.04, 80.00, 0.00, 66.67, 64.30})), "61.20");
}

TEST(Uar, StrictModeCountsEmptyClassAsZero) {
  // Row a realised as counts, with the 0.00 class having no samples.
  ConfusionMatrix m(5, std::vector<long>(5, 0));
  auto set_row = [&](int k, long hit, long total) {
    m[k][k] = hit;
    m[k][(k + 1) % 5] = total - hit;
  };
  set_row(0, 5816, 10000);
  set_row(1, 1000, 10000);
  set_row(3, 3, 4);
  set_row(4, 16, 25);
  const auto strict = uar(m, ZeroSupport::strict);
  EXPECT_EQ(pct2(100 * strict.uar), "41.43");
  ASSERT_EQ(strict.empty_classes.size(), 1u);
  EXPECT_EQ(strict.empty_classes[0], 2u);
  EXPECT_FALSE(strict.recalls[2].has_value());
  const auto excl = uar(m, ZeroSupport::exclude);
  EXPECT_NEAR(excl.uar, (0.5816 + 0.1 + 0.75 + 0.64) / 4, 1e-15);
  EXPECT_NEAR(excl.uar, uar_oracle(m), 1e-15);
}

TEST(Uar, IdentityEmptyAndErrors) {
  ConfusionMatrix id(4, std::vector<long>(4, 0));
  for (int i = 0; i < 4; ++i) id[i][i] = 3 + i;
  EXPECT_EQ(uar(id).uar, 1.0);
  ConfusionMatrix empty(3, std::vector<long>(3, 0));
  EXPECT_EQ(error_of([&] { uar(empty); }), ErrorCode::undefined_metric);
  EXPECT_EQ(error_of([&] { uar(empty, ZeroSupport::exclude); }), ErrorCode::undefined_metric);
  ConfusionMatrix ragged{{1, 0}, {0}};
  EXPECT_EQ(error_of([&] { uar(ragged); }), ErrorCode::shape);
  EXPECT_EQ(parse_zero_support("exclude"), ZeroSupport::exclude);
  EXPECT_EQ(error_of([] { parse_zero_support("paper"); }), ErrorCode::config);
}

TEST(Uar, MatchesOracleAndPermutationInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    ConfusionMatrix m(k, std::vector<long>(k));
    for (auto& row : m) {
      for (auto& c : row) c = static_cast<long>(rng() % 7);
      row[0] += 1;  // keep every row non-empty
    }
    const double u = uar(m).uar;
    EXPECT_NEAR(u, uar_oracle(m), 1e-14);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ConfusionMatrix pm(k, std::vector<long>(k));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) pm[perm[i]][perm[j]] = m[i][j];
    EXPECT_NEAR(uar(pm).uar, u, 1e-14);
  }
}

TEST(Uar, RandomPredictorNearChance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<int> t, p;
    for (int i = 0; i < 1000; ++i) {
      t.push_back(i % 5);
      p.push_back(static_cast<int>(rng() % 5));
    }
    EXPECT_NEAR(uar(confusion_matrix(5, t, p)).uar, 0.2, 0.05);
  }
}

TEST(Uar, SummarizePerfectAndMajority) {
  std::vector<std::string> cats{"a", "b", "c", "d", "e"};
  std::vector<Prediction> perfect, majority;
  for (int i = 0; i < 15; ++i) {
    std::vector<double> probs(5, 0.1);
    probs[i % 5] = 0.6;
    perfect.push_back({fmt::format("c{}", i), i % 5, i % 5, probs});
    majority.push_back({fmt::format("c{}", i), i % 5, 1, probs});
  }
  const auto a = summarize(cats, perfect);
  EXPECT_EQ(a.uar, 1.0);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_EQ(a.confusion[i][j], i == j ? 3 : 0);
  EXPECT_NEAR(a.loss, -std::log(0.6), 1e-15);
  const auto b = summarize(cats, majority);
  EXPECT_DOUBLE_EQ(b.uar, 0.2);
  for (int i = 0; i < 5; ++i) {
    long row = 0;
    for (long c : b.confusion[i]) row += c;
    EXPECT_EQ(row, 3);
  }
  EXPECT_EQ(error_of([&] { summarize(cats, {}); }), ErrorCode::undefined_metric);
}

// ---------------------------------------------------------------- schedule / optimizer

TEST(Schedule, StepDecay) {
  TrainConfig c;
  const std::map<std::string, double> base{
      {"image_encoder", 1e-5}, {"temporal_encoder", 1e-2}, {"prompts", 1e-3}, {"fusion", 1e-5}};
  EXPECT_EQ(c.learning_rates, base);
  const std::map<int, double> expected{{1, 1.0}, {9, 1.0}, {10, 0.1}, {14, 0.1}, {15, 0.01}, {20, 0.01}};
  for (const auto& [epoch, mult] : expected) {
    EXPECT_DOUBLE_EQ(c.schedule.multiplier(epoch), mult) << epoch;
    for (const auto& [g, r] : c.rates_at(epoch)) EXPECT_DOUBLE_EQ(r, base.at(g) * mult) << g << " " << epoch;
  }
}

TEST(Sgd, EachGroupUsesItsOwnRate) {
  model::ClipCaerModel m(caer::testing::mini_config(model::Variant::both), caer::testing::letter_labels(3));
  Rng rng(4);
  std::vector<model::PreparedClip> batch{caer::testing::random_clip(m, 4, rng), caer::testing::random_clip(m, 4, rng)};
  auto loss = model::cross_entropy_logits(m.forward(batch).logits, std::vector<int>{0, 2});
  model::backward(loss);
  const auto groups = m.parameter_groups();
  std::map<std::string, std::pair<Mat, Mat>> before;
  for (const auto& [g, ps] : groups)
    for (const auto& p : ps) before[p.name] = {p.var->value, p.var->grad};
  const std::map<std::string, double> rates{
      {"image_encoder", 1e-5}, {"temporal_encoder", 1e-2}, {"prompts", 1e-3}, {"fusion", 2e-5}};
  Sgd sgd(groups);
  sgd.step(rates);
  int checked = 0;
  for (const auto& [g, ps] : groups) {
    ASSERT_FALSE(ps.empty()) << g;
    for (const auto& p : ps) {
      const auto& [v, grad] = before.at(p.name);
      ASSERT_EQ(grad.size(), v.size()) << p.name;
      EXPECT_EQ((p.var->value - (v - rates.at(g) * grad)).cwiseAbs().maxCoeff(), 0.0) << p.name;
      ++checked;
    }
  }
  EXPECT_GT(checked, 10);
  sgd.zero_grad();
  for (const auto& p : m.trainable_parameters()) EXPECT_EQ(p.var->grad.size(), 0);
}

TEST(Sgd, MomentumAndWeightDecay) {
  auto w = model::parameter(Mat::Constant(1, 2, 1.0));
  Sgd sgd({{"g", {{"w", w}}}}, 0.9, 0.1);
  w->grad = Mat::Constant(1, 2, 0.5);
  sgd.step({{"g", 0.1}});
  // g' = 0.5 + 0.1*1 = 0.6 ; v = 0.6 ; w = 1 - 0.06
  EXPECT_NEAR(w->value(0, 0), 0.94, 1e-15);
  w->grad = Mat::Constant(1, 2, 0.5);
  sgd.step({{"g", 0.1}});
  // g' = 0.5 + 0.094 = 0.594 ; v = 0.54 + 0.594 = 1.134 ; w = 0.94 - 0.1134
  EXPECT_NEAR(w->value(0, 1), 0.8266, 1e-15);
  sgd.step({{"other", 1.0}});
  EXPECT_NEAR(w->value(0, 1), 0.8266, 1e-15);
}

// ---------------------------------------------------------------- config

TEST(Config, RunConfigParsesAndOverridesSeed) {
  const auto j = nlohmann::json::parse(R"({
    "seed": 42,
    "output_dir": "out",
    "model": {"variant": "c", "temporal_layers": 2},
    "data": {"kind": "media", "manifest": "m.jsonl", "labels": "l.jsonl", "split": "s.jsonl"},
    "train": {"epochs": 20, "learning_rates": {"prompts": 0.002}, "momentum": 0.5, "uar_mode": "exclude"}
  })");
  const auto c = parse_run_config(j, "/base");
  EXPECT_EQ(c.model.variant, model::Variant::both);
  EXPECT_EQ(c.model.temporal_layers, 2);
  EXPECT_EQ(c.model.seed, 42u);
  EXPECT_EQ(c.train.seed, 42u);
  EXPECT_EQ(c.data.split_seed, 42u);
  EXPECT_EQ(c.train.learning_rates.at("prompts"), 0.002);
  EXPECT_EQ(c.train.learning_rates.at("temporal_encoder"), 1e-2);
  EXPECT_EQ(c.train.uar_mode, ZeroSupport::exclude);
  EXPECT_EQ(c.data.manifest, std::filesystem::path("/base/m.jsonl"));
  EXPECT_EQ(c.output_dir, std::filesystem::path("/base/out"));
  const auto again = parse_run_config(nlohmann::json(c));
  EXPECT_EQ(nlohmann::json(again), nlohmann::json(c));
}

TEST(Config, RejectsBadTrainSettings) {
  std::string msg;
  EXPECT_EQ(error_of([] { parse_run_config(nlohmann::json::parse(R"({"train": {"epochs": 12}})")); }, &msg),
            ErrorCode::config);
  EXPECT_NE(msg.find("15"), std::string::npos);
  EXPECT_EQ(error_of([] {
              parse_run_config(nlohmann::json::parse(R"({"train": {"learning_rates": {"prompts": 0}}})"));
            }),
            ErrorCode::config);
  EXPECT_EQ(error_of([] {
              parse_run_config(nlohmann::json::parse(R"({"train": {"learning_rates": {"text_encoder": 1}}})"));
            }, &msg),
            ErrorCode::config);
  EXPECT_NE(msg.find("text_encoder"), std::string::npos);
  EXPECT_EQ(error_of([] { parse_run_config(nlohmann::json::parse(R"({"data": {"kind": "hdf5"}})")); }),
            ErrorCode::config);
}

// ---------------------------------------------------------------- synthetic corpus

TEST(Synthetic, DeterministicBalancedAndLabelled) {
  SyntheticCorpus a(tiny_spec()), b(tiny_spec());
  ASSERT_EQ(a.clips().size(), 25u);
  std::map<std::string, std::set<int>> classes_per_subject;
  for (std::size_t i = 0; i < a.clips().size(); ++i) {
    const auto& c = a.clips()[i];
    classes_per_subject[c.record.subject_id].insert(c.label);
    EXPECT_EQ(c.record.face_boxes.size(), static_cast<std::size_t>(c.record.n_frames));
    EXPECT_EQ(cv::norm(a.render(i, 3), b.render(i, 3), cv::NORM_INF), 0.0);
  }
  for (const auto& [s, ks] : classes_per_subject) EXPECT_EQ(ks.size(), 5u) << s;

  const auto agg = labels::aggregate(a.annotations());
  EXPECT_EQ(agg.report.retained, 25u);
  for (const auto& l : agg.labels) {
    auto it = std::find_if(a.clips().begin(), a.clips().end(), [&](const auto& c) { return c.record.clip_id == l.clip_id; });
    EXPECT_EQ(*l.fine_label, labels::fine_labels().categories()[it->label]);
  }
}

TEST(Synthetic, FaceTexturesShareTheirMean) {
  SyntheticSpec s = tiny_spec();
  s.noise = 0.0;
  SyntheticCorpus c(s);
  // Within one subject every class paints the face with the same average
  // colour, so only the texture tells them apart.
  std::vector<double> means;
  for (std::size_t i = 0; i < c.clips().size(); ++i) {
    if (c.clips()[i].record.subject_id != "s00") continue;
    const cv::Mat img = c.render(i, 0);
    means.push_back(cv::mean(img(c.face_rect(i, 0)))[1]);
  }
  ASSERT_EQ(means.size(), 5u);
  for (double m : means) EXPECT_NEAR(m, means[0], 1e-9);
}

TEST(Synthetic, SplitIsSubjectDisjoint) {
  const auto d = synthetic_dataset(std::make_shared<SyntheticCorpus>(tiny_spec()), 4);
  EXPECT_EQ(d.train.size(), 20u);
  EXPECT_EQ(d.test.size(), 5u);
  std::set<std::string> train_subjects;
  for (auto i : d.train) train_subjects.insert(d.provider->items()[i].subject_id);
  for (auto i : d.test) EXPECT_FALSE(train_subjects.contains(d.provider->items()[i].subject_id));
  const auto s = d.provider->load(d.test[0], preproc::SampleMode::eval, 0);
  EXPECT_EQ(s.frames.images.size(), 4u);
  EXPECT_FALSE(s.faces.full_frame_fallback);
}

TEST(Data, MediaDatasetFromDisk) {
  TempDir dir("media_data");
  SyntheticSpec spec = tiny_spec();
  spec.subjects = 2;
  SyntheticCorpus corpus(spec);
  corpus.write(dir.path());
  const auto agg = labels::aggregate(labels::read_annotation_table(dir / "annotations.jsonl"));
  std::vector<labels::AggregatedLabel> retained;
  for (const auto& l : agg.labels)
    if (l.retained) retained.push_back(l);
  const auto manifest = dataset::load_manifest(dir / "manifest.jsonl");
  const auto split = dataset::split_subject_disjoint(retained, manifest, {0.5, 0, 0.03});
  const auto files = dataset::export_dataset(retained, split, dir / "export");

  DataConfig cfg;
  cfg.manifest = dir / "manifest.jsonl";
  cfg.labels = files.labels;
  cfg.split = files.split;
  const auto d = load_dataset(cfg, 4);
  EXPECT_EQ(d.train.size() + d.test.size(), 10u);
  const auto sample = d.provider->load(0, preproc::SampleMode::eval, 0);
  ASSERT_EQ(sample.faces.images.size(), 4u);
  EXPECT_EQ(sample.faces.images[0].size(), cv::Size(224, 224));
  // Decoded video matches the rendered frames up to compression noise.
  const auto rendered = preproc::normalize(preproc::letterbox(corpus.render(0, sample.frames.indices[1])));
  EXPECT_LT(cv::norm(rendered, sample.frames.images[1], cv::NORM_L1) / rendered.total() / 3, 0.15);
}

// ---------------------------------------------------------------- training

TEST(Train, DeterministicAndWritesArtifacts) {
  TempDir a("train_a"), b("train_b");
  const auto data = tiny_data();
  const auto r1 = caer::train::train(tiny_run(a.path()), data);
  const auto r2 = caer::train::train(tiny_run(b.path()), data);
  ASSERT_EQ(r1.log.size(), 2u);
  EXPECT_EQ(r1.log[0].loss, r2.log[0].loss);
  EXPECT_EQ(r1.log[1].loss, r2.log[1].loss);
  EXPECT_EQ(r1.log[1].eval_uar, r2.log[1].eval_uar);
  EXPECT_TRUE(std::isfinite(r1.log[0].loss));

  for (const char* f : {"train_log.jsonl", "epoch_001.ckpt", "epoch_002.ckpt", "best.ckpt", "last.ckpt"}) {
    EXPECT_TRUE(std::filesystem::exists(a / f)) << f;
  }
  std::ifstream in(a / "train_log.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* k : {"epoch", "loss", "train_uar", "eval_uar", "lr_groups"}) EXPECT_TRUE(j.contains(k)) << k;
    EXPECT_EQ(j["epoch"], ++n);
  }
  EXPECT_EQ(n, 2);
  EXPECT_NEAR(r1.log[1].lr_groups.at("temporal_encoder"), 1e-3, 1e-18);
  EXPECT_NEAR(r1.log[0].lr_groups.at("prompts"), 1e-3, 1e-18);
}

TEST(Train, TextEncoderBitwiseUnchanged) {
  TempDir dir("train_text");
  const auto data = tiny_data();
  auto run = tiny_run(dir.path());
  auto m = std::make_unique<model::ClipCaerModel>(run.model, data.labels());
  std::vector<Mat> before;
  for (const auto& p : m->frozen_parameters()) before.push_back(p.var->value);
  auto res = caer::train::train(run, data, std::move(m));
  const auto after = res.model->frozen_parameters();
  ASSERT_EQ(after.size(), before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_EQ(std::memcmp(before[i].data(), after[i].var->value.data(), sizeof(double) * before[i].size()), 0);
  }
}

TEST(Train, BestCheckpointReproducesLoggedUar) {
  TempDir dir("train_best");
  const auto data = tiny_data();
  auto run = tiny_run(dir.path());
  run.train.epochs = 3;
  run.train.schedule.decay_epochs = {};
  const auto res = caer::train::train(run, data);
  ASSERT_TRUE(res.best_uar.has_value());
  const auto loaded = model::load_checkpoint(res.best_checkpoint);
  EXPECT_EQ(loaded.extra.at("epoch").get<int>(), res.best_epoch);
  const auto ev = evaluate(*loaded.model, *data.provider, data.test);
  EXPECT_EQ(ev.uar, *res.log[res.best_epoch - 1].eval_uar);
  EXPECT_EQ(ev, evaluate(*loaded.model, *data.provider, data.test));
  EXPECT_EQ(error_of([&] { evaluate(*loaded.model, *data.provider, {}); }), ErrorCode::undefined_metric);
}

TEST(Train, DivergenceAborts) {
  TempDir dir("train_div");
  const auto data = tiny_data();
  auto run = tiny_run(dir.path());
  run.train.learning_rates["temporal_encoder"] = 1e300;
  std::string msg;
  EXPECT_EQ(error_of([&] { caer::train::train(run, data); }, &msg), ErrorCode::divergence);
  EXPECT_NE(msg.find("epoch 1"), std::string::npos);
}

TEST(Train, BalancedSamplerRunsDeterministically) {
  TempDir a("bal_a"), b("bal_b");
  const auto data = tiny_data();
  auto ra = tiny_run(a.path());
  ra.train.balanced_sampler = true;
  ra.train.checkpoint_every_epoch = false;
  auto rb = ra;
  rb.output_dir = b.path();
  EXPECT_EQ(caer::train::train(ra, data).log[1].loss, caer::train::train(rb, data).log[1].loss);
}

TEST(Finetune, ZeroEpochsKeepsParameters) {
  TempDir src("ft_src"), dst("ft_dst");
  const auto data = tiny_data();
  auto run = tiny_run(src.path());
  run.train.epochs = 1;
  run.train.schedule.decay_epochs = {};
  const auto base = caer::train::train(run, data);
  auto ft = tiny_run(dst.path());
  ft.train.epochs = 0;
  ft.train.schedule.decay_epochs = {};
  const auto res = finetune_from(base.last_checkpoint, ft, data);
  EXPECT_TRUE(res.log.empty());
  const auto a = tensors_of(*model::load_checkpoint(base.last_checkpoint).model);
  const auto b = tensors_of(*model::load_checkpoint(res.last_checkpoint).model);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, m] : a) EXPECT_EQ((m - b.at(name)).cwiseAbs().maxCoeff(), 0.0) << name;
}

TEST(Finetune, ContinuesFromCheckpoint) {
  TempDir src("ft2_src"), dst("ft2_dst");
  const auto data = tiny_data();
  auto run = tiny_run(src.path());
  run.train.epochs = 1;
  run.train.schedule.decay_epochs = {};
  const auto base = caer::train::train(run, data);
  auto ft = tiny_run(dst.path());
  ft.train.epochs = 1;
  ft.train.schedule.decay_epochs = {};
  // Tiny rates: the fine-tuned model stays where the source model was.
  for (auto& [g, r] : ft.train.learning_rates) r = 1e-12;
  const auto res = finetune_from(base.last_checkpoint, ft, data);
  const auto src_eval = evaluate(*model::load_checkpoint(base.last_checkpoint).model, *data.provider, data.test);
  EXPECT_NEAR(*res.log[0].eval_uar, src_eval.uar, 1e-12);
}

TEST(Finetune, LabelSetMismatchListsClasses) {
  TempDir dir("ft_mismatch");
  model::ClipCaerModel m(caer::testing::mini_config(model::Variant::both), caer::testing::letter_labels(3));
  model::save_checkpoint(dir / "letters.ckpt", m);
  std::string msg;
  EXPECT_EQ(error_of([&] { finetune_from(dir / "letters.ckpt", tiny_run(dir / "out"), tiny_data()); }, &msg),
            ErrorCode::label_set_mismatch);
  EXPECT_NE(msg.find("a, b, c"), std::string::npos) << msg;
  EXPECT_NE(msg.find("enjoyment, neutrality, confusion, fatigue, distraction"), std::string::npos) << msg;
}

// ---------------------------------------------------------------- ablation

TEST(Ablation, GridExpansion) {
  const auto full = expand(AblationGrid{});
  // fixed-prompt strategies: one cell per layer count; learnable ones: one per M
  EXPECT_EQ(full.size(), 3u * (2u * 3u + 2u * 3u * 4u));
  std::set<std::string> keys;
  for (const auto& c : full) keys.insert(c.key());
  EXPECT_EQ(keys.size(), full.size());
  const auto g = nlohmann::json::parse(R"({"variants":["both"],"prompt_strategies":["learnable_descriptors"],
                                           "layers":[1],"tokens":[8]})")
                     .get<AblationGrid>();
  const auto one = expand(g);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].key(), "both/learnable_descriptors/L1/M8");
  EXPECT_EQ(error_of([] { nlohmann::json{{"layer", {1}}}.get<AblationGrid>(); }), ErrorCode::config);
  EXPECT_EQ(error_of([] { nlohmann::json{{"tokens", nlohmann::json::array()}}.get<AblationGrid>(); }), ErrorCode::config);
}

TEST(Ablation, ReferencesAreAnnotationsOnly) {
  AblationCell def;
  const auto refs = reference_values(def);
  ASSERT_EQ(refs.size(), 3u);
  for (const auto& r : refs) EXPECT_DOUBLE_EQ(r.uar_percent, 68.00);
  EXPECT_DOUBLE_EQ(reference_values({model::Variant::face_only, def.prompt_strategy, 1, 8}).at(0).uar_percent, 61.19);
  EXPECT_DOUBLE_EQ(reference_values({model::Variant::context_only, def.prompt_strategy, 1, 8}).at(0).uar_percent, 58.03);
  EXPECT_DOUBLE_EQ(reference_values({model::Variant::both, model::PromptStrategy::descriptors, 1, 0}).at(0).uar_percent,
                   65.43);
  EXPECT_DOUBLE_EQ(reference_values({model::Variant::both, def.prompt_strategy, 3, 8}).at(0).uar_percent, 64.29);
  EXPECT_TRUE(reference_values({model::Variant::face_only, def.prompt_strategy, 2, 4}).empty());
}

TEST(Ablation, OneCellGridGivesOneRow) {
  TempDir dir("abl_one");
  AblationGrid g;
  g.variants = {model::Variant::both};
  g.prompt_strategies = {model::PromptStrategy::learnable_descriptors};
  g.layers = {1};
  g.tokens = {4};
  auto run = tiny_run(dir.path());
  run.train.epochs = 1;
  run.train.schedule.decay_epochs = {};
  const auto rows = run_ablation(g, run, tiny_data());
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].status, "ok");
  ASSERT_TRUE(rows[0].uar.has_value());
  EXPECT_EQ(rows[0].recalls.size(), 5u);
  std::ifstream csv(dir / "ablation.csv");
  std::string header, line, extra;
  std::getline(csv, header);
  std::getline(csv, line);
  EXPECT_FALSE(std::getline(csv, extra));
  EXPECT_EQ(header, "variant,prompt_strategy,layers,M,uar,per_class_recalls,status");
  EXPECT_EQ(line.rfind("both,learnable_descriptors,1,4,", 0), 0u) << line;
  EXPECT_TRUE(line.ends_with(",ok")) << line;
  EXPECT_TRUE(std::filesystem::exists(dir / "ablation_references.json"));
}

TEST(Ablation, FailedCellIsMarkedAndSweepContinues) {
  TempDir dir("abl_fail");
  AblationGrid g;
  g.variants = {model::Variant::face_only};
  g.prompt_strategies = {model::PromptStrategy::learnable_class_name};
  g.layers = {1};
  g.tokens = {4000, 2};  // the first overflows the text context
  auto run = tiny_run(dir.path());
  run.train.epochs = 1;
  run.train.schedule.decay_epochs = {};
  const auto rows = run_ablation(g, run, tiny_data());
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status.rfind("failed: prompt_too_long", 0), 0u) << rows[0].status;
  EXPECT_FALSE(rows[0].uar.has_value());
  EXPECT_EQ(rows[1].status, "ok");
  EXPECT_TRUE(rows[1].uar.has_value());
}
