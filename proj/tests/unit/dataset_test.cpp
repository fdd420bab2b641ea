#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "caer/dataset/distribution.hpp"
#include "caer/dataset/export.hpp"
#include "caer/dataset/manifest.hpp"
#include "caer/dataset/split.hpp"
#include "caer/error.hpp"
#include "caer/labels/label_set.hpp"

using namespace caer;
using namespace caer::dataset;
using caer::labels::AggregatedLabel;

namespace {

std::string fmt_clip(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "clip%04d", k);
  return buf;
}

std::string manifest_line(const std::string& clip, const std::string& subject, const std::string& extra = "") {
  return R"({"clip_id":")" + clip + R"(","subject_id":")" + subject +
         R"(","scenario":"classroom","media_path":"v/)" + clip + R"(.avi","fps":25,"n_frames":50)" + extra + "}";
}

ErrorCode manifest_error(const std::string& text, std::string* message = nullptr) {
  std::istringstream in(text);
  try {
    parse_manifest(in);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return ErrorCode::io;
}

AggregatedLabel retained(const std::string& clip, const std::string& fine) {
  AggregatedLabel a;
  a.clip_id = clip;
  a.fine_label = fine;
  a.coarse_label = labels::map_fine_to_coarse(fine);
  a.complete = a.consistent = a.retained = true;
  a.fine_vote.clip_id = a.coarse_vote.clip_id = clip;
  a.coarse_vote.granularity = labels::Granularity::coarse;
  return a;
}

struct Corpus {
  std::vector<AggregatedLabel> labels;
  std::vector<ClipRecord> manifest;
};

// subjects[i] clips for subject i, classes cycled per clip.
Corpus make_corpus(const std::vector<int>& subjects, unsigned class_seed = 0) {
  Corpus c;
  const auto& cats = labels::fine_labels().categories();
  std::mt19937 rng(class_seed);
  int k = 0;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    for (int i = 0; i < subjects[s]; ++i, ++k) {
      const std::string id = fmt_clip(k);
      c.labels.push_back(retained(id, cats[class_seed ? rng() % 5 : k % 5]));
      ClipRecord r;
      r.clip_id = id;
      r.subject_id = "s" + std::to_string(s);
      r.fps = 25;
      r.n_frames = 50;
      r.duration_s = 2;
      r.media_path = id + ".avi";
      c.manifest.push_back(r);
    }
  }
  return c;
}

}  // namespace

TEST(Manifest, ParsesAndDefaultsDuration) {
  std::istringstream in(manifest_line("a", "s1", R"(,"face_boxes":[[0,1,2,30,40],[5,1,2,30,40]])") + "\n\n" +
                        manifest_line("b", "s2"));
  auto clips = parse_manifest(in);
  ASSERT_EQ(clips.size(), 2u);
  EXPECT_DOUBLE_EQ(clips[0].duration_s, 2.0);
  EXPECT_EQ(clips[0].face_boxes.size(), 2u);
  EXPECT_EQ(clips[0].face_boxes[1], (FaceBox{5, 1, 2, 30, 40}));
  EXPECT_EQ(clips[1].scenario, Scenario::classroom);
}

TEST(Manifest, RoundTrip) {
  std::istringstream in(manifest_line("a", "s1", R"(,"face_boxes":[[3,1,2,30,40]])"));
  auto clips = parse_manifest(in);
  std::stringstream out;
  write_manifest(out, clips);
  EXPECT_EQ(parse_manifest(out), clips);
}

TEST(Manifest, Errors) {
  std::string msg;
  EXPECT_EQ(manifest_error(manifest_line("a", "s") + "\n" + manifest_line("a", "t"), &msg), ErrorCode::manifest);
  EXPECT_NE(msg.find("line 2"), std::string::npos);
  EXPECT_EQ(manifest_error(R"({"clip_id":"a"})"), ErrorCode::manifest);
  EXPECT_EQ(manifest_error("not json"), ErrorCode::manifest);
  EXPECT_EQ(manifest_error(manifest_line("a", "s", R"(,"duration_s":3.0)")), ErrorCode::manifest);
  EXPECT_EQ(manifest_error(manifest_line("a", "s", R"(,"face_boxes":[[50,0,0,1,1]])")), ErrorCode::manifest);
  EXPECT_EQ(manifest_error(manifest_line("a", "s", R"(,"face_boxes":[[0,0,0,0,1]])")), ErrorCode::manifest);
  EXPECT_EQ(manifest_error(manifest_line("a", "s", R"(,"face_boxes":[[0,0,0,1]])")), ErrorCode::manifest);
  EXPECT_EQ(manifest_error(manifest_line("a", "s", R"(,"face_boxes":[[1,0,0,1,1],[1,0,0,2,2]])")),
            ErrorCode::manifest);
  std::string bad = manifest_line("a", "s");
  bad.replace(bad.find("\"fps\":25"), 8, "\"fps\":0");
  EXPECT_EQ(manifest_error(bad), ErrorCode::manifest);
}

TEST(Distribution, CountsRetainedOnly) {
  std::vector<AggregatedLabel> labels{retained("a", "fatigue"), retained("b", "fatigue"), retained("c", "confusion")};
  AggregatedLabel dropped = retained("d", "fatigue");
  dropped.retained = false;
  labels.push_back(dropped);
  auto d = class_distribution(labels);
  EXPECT_EQ(d.total(), 3);
  EXPECT_EQ(d.count("fatigue"), 2);
  EXPECT_EQ(d.count("enjoyment"), 0);
  EXPECT_NEAR(d.percentage(*labels::fine_labels().index_of("fatigue")), 200.0 / 3.0, 1e-9);
}

TEST(Split, TenSubjectsOfTen) {
  auto c = make_corpus(std::vector<int>(10, 10));
  auto split = split_subject_disjoint(c.labels, c.manifest, {0.8, 7, 0.03});
  EXPECT_EQ(split.count(Split::train), 80u);
  EXPECT_EQ(split.count(Split::test), 20u);
}

TEST(Split, PropertiesOverSeeds) {
  for (unsigned corpus_seed = 1; corpus_seed <= 5; ++corpus_seed) {
    std::mt19937 rng(corpus_seed);
    std::vector<int> sizes;
    for (int s = 0; s < 30; ++s) sizes.push_back(1 + static_cast<int>(rng() % 8));
    auto c = make_corpus(sizes, corpus_seed);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto split = split_subject_disjoint(c.labels, c.manifest, {0.8, seed, 0.03});
      ASSERT_EQ(split.clips.size(), c.labels.size());
      EXPECT_LE(std::abs(split.train_fraction() - 0.8), 0.03 + 1e-12);
      std::map<std::string, std::set<Split>> per_subject;
      for (const auto& r : c.manifest) per_subject[r.subject_id].insert(split.clips.at(r.clip_id));
      for (const auto& [subject, sides] : per_subject) EXPECT_EQ(sides.size(), 1u) << subject;
      auto again = split_subject_disjoint(c.labels, c.manifest, {0.8, seed, 0.03});
      EXPECT_EQ(again.clips, split.clips);
    }
  }
}

TEST(Split, InfeasibleNamesSubject) {
  auto c = make_corpus({30, 2, 2, 2});
  try {
    split_subject_disjoint(c.labels, c.manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::split_infeasible);
    EXPECT_NE(std::string(e.what()).find("s0"), std::string::npos);
  }
}

TEST(Split, MissingManifestRecord) {
  auto c = make_corpus({5, 5});
  c.manifest.pop_back();
  try {
    split_subject_disjoint(c.labels, c.manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::input_integrity);
  }
}

TEST(Export, ByteIdentical) {
  auto c = make_corpus(std::vector<int>(10, 10), 9);
  auto split = split_subject_disjoint(c.labels, c.manifest, {0.8, 3, 0.03});
  const auto base = std::filesystem::temp_directory_path() / "caer_export_test";
  std::filesystem::remove_all(base);
  auto a = export_dataset(c.labels, split, base / "a");
  auto shuffled = c.labels;
  std::reverse(shuffled.begin(), shuffled.end());
  auto b = export_dataset(shuffled, split, base / "b");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(a.labels), slurp(b.labels));
  EXPECT_EQ(slurp(a.split), slurp(b.split));
  EXPECT_EQ(slurp(a.distribution), slurp(b.distribution));
  auto dist = nlohmann::json::parse(slurp(a.distribution));
  EXPECT_EQ(dist["all"]["total"], 100);
  EXPECT_EQ(dist["train"]["total"].get<int>() + dist["test"]["total"].get<int>(), 100);
  auto back = read_split(a.split);
  EXPECT_EQ(back.clips, split.clips);
  std::filesystem::remove_all(base);
}
