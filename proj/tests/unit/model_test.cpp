#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <opencv2/core.hpp>

#include "caer/error.hpp"
#include "caer/model/archive.hpp"
#include "caer/model/checkpoint.hpp"
#include "caer/model/clip_caer.hpp"
#include "caer/model/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/mini_model.hpp"

using namespace caer;
using namespace caer::model;
using caer::testing::letter_labels;
using caer::testing::mini_config;
using caer::testing::random_clip;

namespace {

std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(CAER_FIXTURE_DIR) / name; }

double max_abs(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Classify, UniformWhenSimilaritiesEqual) {
  Mat t = Mat::Zero(5, 4);
  for (int k = 0; k < 5; ++k) t(k, 0) = 1.0 + k;  // all parallel
  Mat v(1, 4);
  v << 3, 0, 0, 0;
  Mat p = softmax_rows(cosine_logits(constant(v), constant(t), 1.0)->value);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(p(0, k), 0.2, 1e-12);
}

TEST(Classify, ClosedFormOneAligned) {
  // f_v = f_t1, orthogonal to the other four: p1 = e / (e + 4).
  Mat t = Mat::Zero(5, 5);
  for (int k = 0; k < 5; ++k) t(k, k) = 1.0;
  Mat v = t.row(0);
  Mat p = softmax_rows(cosine_logits(constant(v), constant(t), 1.0)->value);
  EXPECT_NEAR(p(0, 0), std::exp(1.0) / (std::exp(1.0) + 4.0), 1e-12);
  EXPECT_NEAR(-std::log(p(0, 0)), std::log(std::exp(1.0) + 4.0) - 1.0, 1e-12);
  // Exact values are 0.404610 and 0.904832; the commonly quoted 0.40464 /
  // 0.90477 agree only to about 1e-4.
  EXPECT_NEAR(p(0, 0), 0.40464, 1e-4);
  EXPECT_NEAR(-std::log(p(0, 0)), 0.90477, 1e-4);
}

TEST(Classify, ZeroNormRejected) {
  Mat t = Mat::Identity(3, 3);
  try {
    cosine_logits(constant(Mat::Zero(1, 3)), constant(t), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_input);
  }
}

TEST(Model, ShapesAndSimplex) {
  Rng rng(5);
  ClipCaerModel m(mini_config(Variant::both), letter_labels(3));
  std::vector<PreparedClip> batch{random_clip(m, 4, rng), random_clip(m, 4, rng)};
  auto out = m.forward(batch);
  EXPECT_EQ(out.visual->rows(), 2);
  EXPECT_EQ(out.visual->cols(), 8);
  EXPECT_EQ(out.text->rows(), 3);
  for (long b = 0; b < 2; ++b) EXPECT_NEAR(out.probabilities.row(b).sum(), 1.0, 1e-12);
  EXPECT_LE(out.similarities->value.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
}

TEST(Model, TemporalPermutationAndStreamsDiffer) {
  Rng rng(6);
  ClipCaerModel m(mini_config(Variant::both), letter_labels(3));
  Var feats = constant(randn(4, 8, 1.0, rng));
  Mat perm = feats->value;
  perm.row(0).swap(perm.row(3));
  NoGradGuard g;
  Mat a = m.face_encoder()(feats)->value;
  Mat b = m.face_encoder()(constant(perm))->value;
  EXPECT_GT(max_abs(a, b), 1e-6);
  Mat c = m.context_encoder()(feats)->value;
  EXPECT_GT(max_abs(a, c), 1e-6);
}

TEST(Model, FusionLinearity) {
  Rng rng(7);
  ClipCaerModel m(mini_config(Variant::both), letter_labels(3));
  NoGradGuard g;
  auto v = [&] { return constant(randn(1, 8, 1.0, rng)); };
  Var a = v(), b = v(), c = v(), d = v();
  Mat bias = m.fusion().bias->value;
  Mat zero = m.fuse(constant(Mat::Zero(1, 8)), constant(Mat::Zero(1, 8)))->value;
  EXPECT_LT(max_abs(zero, bias), 1e-15);
  Mat lhs = m.fuse(add(a, b), add(c, d))->value;
  Mat rhs = m.fuse(a, c)->value + m.fuse(b, d)->value - bias;
  EXPECT_LT(max_abs(lhs, rhs), 1e-12);
  EXPECT_GT(max_abs(m.fuse(a, c)->value, m.fuse(c, a)->value), 1e-6);
}

TEST(Model, VariantsDifferAndFaceOnlyIgnoresFrames) {
  Rng rng(8);
  const auto labels = letter_labels(3);
  ClipCaerModel both(mini_config(Variant::both), labels);
  ClipCaerModel face(mini_config(Variant::face_only), labels);
  ClipCaerModel ctx(mini_config(Variant::context_only), labels);
  auto clip = random_clip(both, 4, rng);
  NoGradGuard g;
  Mat pb = both.forward(std::vector<PreparedClip>{clip}).probabilities;
  Mat pf = face.forward(std::vector<PreparedClip>{clip}).probabilities;
  Mat pc = ctx.forward(std::vector<PreparedClip>{clip}).probabilities;
  EXPECT_GT(max_abs(pb, pf), 1e-9);
  EXPECT_GT(max_abs(pb, pc), 1e-9);
  EXPECT_GT(max_abs(pf, pc), 1e-9);
  // Frame rows absent: face-only still works, the others refuse.
  PreparedClip no_frame{clip.face, Mat()};
  EXPECT_NO_THROW(face.forward(std::vector<PreparedClip>{no_frame}));
  EXPECT_THROW(both.forward(std::vector<PreparedClip>{no_frame}), Error);
}

TEST(Model, GradientCheckMiniature) {
  Rng rng(9);
  ClipCaerModel m(mini_config(Variant::both), letter_labels(3));
  std::vector<PreparedClip> batch{random_clip(m, 4, rng), random_clip(m, 4, rng)};
  std::vector<int> y{0, 2};
  auto loss = [&] { return cross_entropy_logits(m.forward(batch).logits, y); };
  auto groups = m.parameter_groups();
  std::vector<ParamRef> ps;
  for (const char* g : {"temporal_encoder", "fusion", "prompts"}) ps.insert(ps.end(), groups[g].begin(), groups[g].end());
  auto r = caer::testing::gradcheck(loss, ps);
  EXPECT_LT(r.worst_relative_error, 1e-4) << r.worst_name;
  EXPECT_GT(r.checked, 1000);

  backward(loss());
  for (const auto& p : m.frozen_parameters()) {
    EXPECT_FALSE(p.var->requires_grad) << p.name;
    EXPECT_TRUE(p.var->grad.size() == 0 || p.var->grad.isZero(0.0)) << p.name;
  }
}

TEST(Prompts, LengthsAndStrategies) {
  const auto labels = labels::fine_labels();
  auto cfg = mini_config(Variant::both, 8, 4, PromptStrategy::learnable_descriptors, 8);
  ClipCaerModel m(cfg, labels);
  const auto& tok = m.text_encoder().tokenizer();
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const auto ids = tok.encode(academic_profile().at(labels.categories()[k]).full_text());
    EXPECT_EQ(m.prompts().sequence_length(k), 8 + static_cast<long>(ids.size()) + 2);
  }
  cfg.prompt_strategy = PromptStrategy::descriptors;
  ClipCaerModel d(cfg, labels);
  EXPECT_EQ(d.prompts().learnable_tokens(), 0);
  EXPECT_EQ(d.prompts().text(0), academic_profile().at("enjoyment").full_text());
  cfg.prompt_strategy = PromptStrategy::class_name;
  ClipCaerModel c(cfg, labels);
  EXPECT_EQ(c.prompts().text(2), "an emotion of confusion during studying");
  cfg.prompt_strategy = PromptStrategy::learnable_descriptors;
  cfg.variant = Variant::face_only;
  ClipCaerModel f(cfg, labels);
  EXPECT_EQ(f.prompts().text(1), "Relaxed mouth, open eyes, neutral eyebrows, no noticeable emotional changes.");
}

TEST(Prompts, TooLongNamesClass) {
  auto cfg = mini_config(Variant::both, 8, 4, PromptStrategy::learnable_descriptors, 60);
  try {
    ClipCaerModel m(cfg, labels::fine_labels());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::prompt_too_long);
    EXPECT_NE(std::string(e.what()).find("enjoyment"), std::string::npos);
  }
}

TEST(Descriptors, VerbatimAcademicTexts) {
  const auto& p = academic_profile();
  EXPECT_EQ(p.at("neutrality").full_text(),
            "Relaxed mouth, open eyes, neutral eyebrows, no noticeable emotional changes, engaged with study "
            "materials, or natural body posture.");
  EXPECT_EQ(p.at("enjoyment").full_text(),
            "Upturned mouth corners, sparkling eyes, relaxed eyebrows, focused on course content, or occasionally "
            "nodding in agreement.");
  EXPECT_EQ(p.at("confusion").full_text(),
            "Furrowed eyebrows, slightly open mouth, wandering or puzzled gaze, chin rests on the palm, or eyes lock "
            "on learning material.");
  EXPECT_EQ(p.at("fatigue").full_text(),
            "Mouth opens in a yawn, eyelids droop, head tilts forward, eyes lock on learning material, or hand "
            "writing.");
  EXPECT_EQ(p.at("distraction").full_text(),
            "Shifting eyes, restless or fidgety posture, relaxed but unfocused expression, frequently checking "
            "phone, or averted gaze from study materials.");
  EXPECT_TRUE(p.covers(labels::fine_labels()));
}

TEST(Descriptors, VerbatimBasicTexts) {
  const auto& p = basic_emotion_profile();
  ASSERT_EQ(p.classes.size(), 7u);
  EXPECT_EQ(p.at("anger").full_text(),
            "Furrowed eyebrows, narrow eyes, tightened lips, and flared nostrils. Leaning forward, tense stance, "
            "fists clenched, or hand pointing.");
  EXPECT_EQ(p.at("surprise").facial_text(), "Widened eyes, an open mouth, raised eyebrows, and a frozen expression.");
}

TEST(Descriptors, AssetFilesMatchBuiltins) {
  const std::filesystem::path dir = std::filesystem::path(CAER_TEST_ASSET_DIR) / "descriptors";
  EXPECT_EQ(load_descriptor_profile(dir / "academic.json"), academic_profile());
  EXPECT_EQ(load_descriptor_profile(dir / "basic.json"), basic_emotion_profile());
}

TEST(Tokenizer, BpeMatchesReference) {
  BpeTokenizer tok(std::filesystem::path(CAER_TEST_ASSET_DIR) / "clip" / "bpe_simple_vocab_16e6.txt.gz");
  std::ifstream in(fixture("clip_bpe_tokens.json"));
  const auto ref = nlohmann::json::parse(in);
  EXPECT_EQ(tok.sot(), ref["sot"].get<int>());
  EXPECT_EQ(tok.eot(), ref["eot"].get<int>());
  EXPECT_EQ(tok.vocab_size(), ref["vocab_size"].get<int>());
  for (const auto& c : ref["cases"]) {
    EXPECT_EQ(tok.encode(c["text"].get<std::string>()), c["ids"].get<std::vector<int>>()) << c["text"];
  }
}

TEST(Tokenizer, HashDeterministic) {
  HashTokenizer t(512);
  EXPECT_EQ(t.encode("Hello, World"), t.encode("hello,   world"));
  for (int id : t.encode("a b c d 1 2 ! ?")) {
    EXPECT_GE(id, 1);
    EXPECT_LT(id, t.sot());
  }
}

TEST(ClipEncoders, MatchReferenceImplementation) {
  std::ifstream in(fixture("tiny_clip_reference.json"));
  const auto ref = nlohmann::json::parse(in);
  const nlohmann::json spec = {{"kind", "clip"}, {"archive", fixture("tiny_clip.caer").string()}};
  auto image = make_image_encoder(spec);
  auto text = make_text_encoder(spec);

  cv::Mat img(224, 224, CV_32FC3);
  for (int y = 0; y < 224; ++y)
    for (int x = 0; x < 224; ++x)
      for (int c = 0; c < 3; ++c)
        img.at<cv::Vec3f>(y, x)[c] = static_cast<float>(2.0 * std::sin(0.013 * x + 0.029 * y + 1.7 * c) *
                                                        std::cos(0.007 * x * (c + 1) - 0.011 * y));
  // The reference ran in double on the same formula; float storage of the
  // pixels bounds the achievable agreement.
  NoGradGuard g;
  Mat got = image->encode(image->prepare(std::vector<cv::Mat>{img}))->value;
  const auto want = ref["image_features"].get<std::vector<double>>();
  ASSERT_EQ(got.cols(), static_cast<long>(want.size()));
  for (long i = 0; i < got.cols(); ++i) EXPECT_NEAR(got(0, i), want[i], 1e-5);

  for (std::size_t s = 0; s < ref["token_sets"].size(); ++s) {
    const auto ids = ref["token_sets"][s].get<std::vector<int>>();
    Mat t = text->encode(constant(text->embed(ids)))->value;
    const auto tw = ref["text_features"][s].get<std::vector<double>>();
    for (long i = 0; i < t.cols(); ++i) EXPECT_NEAR(t(0, i), tw[i], 1e-10);
  }
}

TEST(Archive, RoundTrip) {
  Rng rng(10);
  Archive a;
  a.meta = {{"k", 1}};
  a.tensors["x"] = randn(3, 4, 1.0, rng);
  a.tensors["y"] = randn(1, 7, 1.0, rng);
  const auto path = std::filesystem::temp_directory_path() / "caer_archive_test.caer";
  save_archive(path, a);
  auto b = load_archive(path);
  EXPECT_EQ(b.meta, a.meta);
  EXPECT_EQ(b.tensors.at("x"), a.tensors.at("x"));
  save_archive(path, a, StorageType::f32);
  auto c = load_archive(path);
  EXPECT_LT(max_abs(c.tensors.at("y"), a.tensors.at("y")), 1e-6);
  std::filesystem::remove(path);
  EXPECT_THROW(load_archive(path), Error);
}

TEST(Checkpoint, RoundTripReproducesOutputs) {
  Rng rng(11);
  ClipCaerModel m(mini_config(Variant::both), letter_labels(3));
  // Move parameters off their seeded init so the round trip is meaningful.
  for (auto& p : m.trainable_parameters()) p.var->value += randn(p.var->rows(), p.var->cols(), 0.01, rng);
  const auto path = std::filesystem::temp_directory_path() / "caer_ckpt_test.caer";
  save_checkpoint(path, m, {{"epoch", 3}});
  auto loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.extra["epoch"], 3);
  std::vector<PreparedClip> batch{random_clip(m, 4, rng)};
  NoGradGuard g;
  EXPECT_EQ(m.forward(batch).probabilities, loaded.model->forward(batch).probabilities);
  std::filesystem::remove(path);
}
