#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "caer/error.hpp"
#include "caer/labels/aggregate.hpp"
#include "caer/labels/kappa.hpp"
#include "caer/labels/label_set.hpp"
#include "caer/labels/vote.hpp"

using namespace caer;
using namespace caer::labels;

namespace {

AnnotationRecord rec(std::string clip, std::string annotator, Granularity g, std::string label, int second = 0) {
  return {std::move(clip), std::move(annotator), g, std::move(label),
          parse_timestamp("2024-03-01T10:00:00Z") + std::chrono::seconds(second)};
}

std::vector<AnnotationRecord> votes(const std::string& clip, Granularity g,
                                    const std::vector<std::pair<std::string, int>>& spec) {
  std::vector<AnnotationRecord> out;
  int a = 0;
  for (const auto& [label, n] : spec) {
    for (int i = 0; i < n; ++i) {
      out.push_back(rec(clip, std::string(to_string(g)) + "-a" + std::to_string(a++), g, label));
    }
  }
  return out;
}

// Independent kappa: enumerate every ordered rater pair per item.
double kappa_by_pairs(const AgreementTable& t) {
  const int n = t.raters_per_item;
  double agree_sum = 0;
  std::vector<double> marginal(t.rows[0].size(), 0);
  for (const auto& row : t.rows) {
    std::vector<int> raters;
    for (std::size_t j = 0; j < row.size(); ++j) {
      for (int r = 0; r < row[j]; ++r) raters.push_back(static_cast<int>(j));
      marginal[j] += row[j];
    }
    int agree = 0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b && raters[a] == raters[b]) ++agree;
    agree_sum += static_cast<double>(agree) / (n * (n - 1));
  }
  const double p_bar = agree_sum / t.rows.size();
  double pe = 0;
  for (double m : marginal) pe += std::pow(m / (t.rows.size() * n), 2);
  return (p_bar - pe) / (1 - pe);
}

}  // namespace

TEST(LabelSet, CanonicalOrder) {
  EXPECT_EQ(fine_labels().categories(),
            (std::vector<std::string>{"enjoyment", "neutrality", "confusion", "fatigue", "distraction"}));
  EXPECT_EQ(coarse_labels().categories(), (std::vector<std::string>{"engaged", "distracted"}));
  EXPECT_THROW(LabelSet(Granularity::fine, {"a", "a"}), Error);
}

TEST(MapFineToCoarse, PaperMapping) {
  EXPECT_EQ(map_fine_to_coarse("fatigue"), "engaged");
  EXPECT_EQ(map_fine_to_coarse("distraction"), "distracted");
  EXPECT_EQ(map_fine_to_coarse("neutrality"), "engaged");
  EXPECT_EQ(map_fine_to_coarse("enjoyment"), "engaged");
  EXPECT_EQ(map_fine_to_coarse("confusion"), "engaged");
}

TEST(MapFineToCoarse, TotalAndOnto) {
  std::set<std::string> image;
  for (const auto& c : fine_labels().categories()) image.insert(map_fine_to_coarse(c));
  EXPECT_EQ(image, (std::set<std::string>{"engaged", "distracted"}));
}

TEST(MapFineToCoarse, UnknownCategory) {
  try {
    map_fine_to_coarse("engaged");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_label);
  }
}

TEST(MajorityVote, Unanimous) {
  auto v = majority_vote(votes("c1", Granularity::fine, {{"neutrality", 5}}));
  EXPECT_EQ(v.winner, "neutrality");
  EXPECT_EQ(v.margin, 5);
  EXPECT_EQ(v.total(), 5);
}

TEST(MajorityVote, StrictMajority) {
  auto v = majority_vote(votes("c1", Granularity::fine, {{"distraction", 3}, {"fatigue", 2}}));
  EXPECT_EQ(v.winner, "distraction");
  EXPECT_EQ(v.margin, 1);
}

TEST(MajorityVote, TieIsUnresolved) {
  auto v = majority_vote(votes("c1", Granularity::fine, {{"enjoyment", 2}, {"confusion", 2}, {"neutrality", 1}}));
  EXPECT_FALSE(v.winner.has_value());
  EXPECT_EQ(v.margin, 0);
  EXPECT_EQ(v.counts.at("enjoyment"), 2);
  EXPECT_EQ(v.counts.at("fatigue"), 0);
}

TEST(MajorityVote, Errors) {
  std::vector<AnnotationRecord> none;
  try {
    majority_vote(none);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_votes);
  }
  auto mixed = votes("c1", Granularity::fine, {{"neutrality", 2}});
  mixed.push_back(rec("c2", "x", Granularity::fine, "neutrality"));
  try {
    majority_vote(mixed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::input_integrity);
  }
}

TEST(MajorityVote, ResubmissionReplaces) {
  std::vector<AnnotationRecord> r{rec("c1", "a", Granularity::fine, "confusion", 0),
                                  rec("c1", "b", Granularity::fine, "confusion", 0),
                                  rec("c1", "a", Granularity::fine, "fatigue", 10)};
  auto v = majority_vote(r);
  EXPECT_EQ(v.total(), 2);
  EXPECT_EQ(v.counts.at("fatigue"), 1);
  EXPECT_FALSE(v.winner.has_value());
}

TEST(MajorityVote, PermutationInvariant) {
  std::mt19937 rng(3);
  const auto& cats = fine_labels().categories();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<AnnotationRecord> r;
    const int n = 1 + static_cast<int>(rng() % 9);
    for (int i = 0; i < n; ++i) r.push_back(rec("c", "a" + std::to_string(i), Granularity::fine, cats[rng() % 5]));
    auto base = majority_vote(r);
    std::shuffle(r.begin(), r.end(), rng);
    EXPECT_EQ(majority_vote(r), base);
  }
}

TEST(CheckConsistency, Cases) {
  auto fatigue = majority_vote(votes("c", Granularity::fine, {{"fatigue", 3}}));
  auto distraction = majority_vote(votes("c", Granularity::fine, {{"distraction", 3}}));
  auto tie = majority_vote(votes("c", Granularity::fine, {{"fatigue", 1}, {"enjoyment", 1}}));
  auto engaged = majority_vote(votes("c", Granularity::coarse, {{"engaged", 4}, {"distracted", 1}}));
  EXPECT_TRUE(check_consistency(fatigue, engaged));
  EXPECT_FALSE(check_consistency(distraction, engaged));
  EXPECT_FALSE(check_consistency(tie, engaged));
  auto other = majority_vote(votes("d", Granularity::coarse, {{"engaged", 1}}));
  EXPECT_THROW(check_consistency(fatigue, other), Error);
}

TEST(FleissKappa, UnanimousIsExactlyOne) {
  AgreementTable t{4, {{4, 0, 0}, {0, 4, 0}, {0, 0, 4}, {4, 0, 0}}};
  EXPECT_EQ(fleiss_kappa(t), 1.0);
}

TEST(FleissKappa, HandCase) {
  // P_bar = (1 + 0) / 2 = 0.5; p = (3/4, 1/4) -> P_e = 0.625; kappa = -1/3.
  AgreementTable t{2, {{2, 0}, {1, 1}}};
  EXPECT_NEAR(fleiss_kappa(t), -1.0 / 3.0, 1e-12);
  EXPECT_NEAR(kappa_by_pairs(t), -1.0 / 3.0, 1e-12);
}

TEST(FleissKappa, MatchesPairEnumeration) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const int k = 2 + static_cast<int>(rng() % 4);
    const int items = 2 + static_cast<int>(rng() % 20);
    AgreementTable t{n, {}};
    for (int i = 0; i < items; ++i) {
      std::vector<int> row(k, 0);
      // Skewed draws so tables are rarely degenerate.
      for (int r = 0; r < n; ++r) ++row[(rng() % 3 == 0) ? rng() % k : (i % k)];
      t.rows.push_back(row);
    }
    double expected;
    try {
      expected = kappa_by_pairs(t);
    } catch (...) {
      continue;
    }
    if (!std::isfinite(expected)) continue;
    EXPECT_NEAR(fleiss_kappa(t), expected, 1e-12);
  }
}

TEST(FleissKappa, PermutationInvariance) {
  AgreementTable t{5, {{3, 1, 1, 0}, {0, 5, 0, 0}, {2, 2, 1, 0}, {1, 0, 0, 4}, {0, 1, 3, 1}}};
  const double k0 = fleiss_kappa(t);
  auto items = t;
  std::reverse(items.rows.begin(), items.rows.end());
  EXPECT_NEAR(fleiss_kappa(items), k0, 1e-12);
  auto cols = t;
  for (auto& row : cols.rows) std::rotate(row.begin(), row.begin() + 1, row.end());
  EXPECT_NEAR(fleiss_kappa(cols), k0, 1e-12);
}

TEST(FleissKappa, Errors) {
  auto code_of = [](const AgreementTable& t) {
    try {
      fleiss_kappa(t);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io;
  };
  EXPECT_EQ(code_of({3, {{2, 0}, {1, 1}}}), ErrorCode::malformed_table);
  EXPECT_EQ(code_of({2, {{2, 0}}}), ErrorCode::malformed_table);
  EXPECT_EQ(code_of({2, {{2, 0}, {1, 1, 0}}}), ErrorCode::malformed_table);
  EXPECT_EQ(code_of({1, {{1}, {1}}}), ErrorCode::malformed_table);
  EXPECT_EQ(code_of({3, {{3, 0}, {3, 0}}}), ErrorCode::degenerate_table);
}

TEST(FleissKappa, UniformRandomNearZero) {
  std::mt19937_64 rng(2024);
  AgreementTable t{5, {}};
  for (int i = 0; i < 1000; ++i) {
    std::vector<int> row(5, 0);
    for (int r = 0; r < 5; ++r) ++row[rng() % 5];
    t.rows.push_back(row);
  }
  EXPECT_LT(std::abs(fleiss_kappa(t)), 0.05);
}

// Four clips: c1 clean, c2 fine tie, c3 fine/coarse disagree, c4 clean.
std::vector<AnnotationRecord> four_clip_fixture() {
  std::vector<AnnotationRecord> r;
  auto add = [&](const std::vector<AnnotationRecord>& v) { r.insert(r.end(), v.begin(), v.end()); };
  add(votes("c1", Granularity::fine, {{"neutrality", 4}, {"fatigue", 1}}));
  add(votes("c1", Granularity::coarse, {{"engaged", 5}}));
  add(votes("c2", Granularity::fine, {{"enjoyment", 2}, {"confusion", 2}, {"neutrality", 1}}));
  add(votes("c2", Granularity::coarse, {{"engaged", 5}}));
  add(votes("c3", Granularity::fine, {{"distraction", 3}, {"neutrality", 2}}));
  add(votes("c3", Granularity::coarse, {{"engaged", 4}, {"distracted", 1}}));
  add(votes("c4", Granularity::fine, {{"distraction", 5}}));
  add(votes("c4", Granularity::coarse, {{"distracted", 3}, {"engaged", 2}}));
  return r;
}

TEST(Aggregate, FourClipFixture) {
  auto result = aggregate(four_clip_fixture());
  ASSERT_EQ(result.labels.size(), 4u);
  EXPECT_EQ(result.report.retained, 2u);
  EXPECT_TRUE(result.labels[0].retained);
  EXPECT_FALSE(result.labels[1].retained);
  EXPECT_FALSE(result.labels[2].retained);
  EXPECT_TRUE(result.labels[3].retained);
  EXPECT_EQ(result.report.tied_fine_clips, std::vector<std::string>{"c2"});
  EXPECT_DOUBLE_EQ(*result.report.consistency_rate, 0.5);
  EXPECT_EQ(result.report.retained_fine_counts.at("neutrality"), 1);
  EXPECT_EQ(result.report.retained_fine_counts.at("distraction"), 1);
  // kappa over c1 (4,1) and c4 (5): rows [0,4,0,1,0] and [0,0,0,0,5].
  AgreementTable t{5, {{0, 4, 0, 1, 0}, {0, 0, 0, 0, 5}}};
  ASSERT_TRUE(result.report.kappa.value.has_value());
  EXPECT_NEAR(*result.report.kappa.value, kappa_by_pairs(t), 1e-12);
}

TEST(Aggregate, EmptyInput) {
  auto result = aggregate({});
  EXPECT_TRUE(result.labels.empty());
  EXPECT_EQ(result.report.clips, 0u);
  EXPECT_FALSE(result.report.consistency_rate.has_value());
  EXPECT_FALSE(result.report.kappa.value.has_value());
}

TEST(Aggregate, IncompleteClipNotRetained) {
  auto r = votes("solo", Granularity::fine, {{"fatigue", 5}});
  auto result = aggregate(r);
  ASSERT_EQ(result.labels.size(), 1u);
  EXPECT_FALSE(result.labels[0].complete);
  EXPECT_FALSE(result.labels[0].retained);
  EXPECT_EQ(result.report.incomplete_clips, std::vector<std::string>{"solo"});
}

TEST(Aggregate, ModalRaterCountForKappa) {
  auto r = four_clip_fixture();
  // c5 with 4 fine raters is retained but excluded from the 5-rater table.
  auto c5 = votes("c5", Granularity::fine, {{"fatigue", 4}});
  auto c5c = votes("c5", Granularity::coarse, {{"engaged", 5}});
  r.insert(r.end(), c5.begin(), c5.end());
  r.insert(r.end(), c5c.begin(), c5c.end());
  auto result = aggregate(r);
  EXPECT_EQ(result.report.retained, 3u);
  EXPECT_EQ(result.report.kappa.raters_per_item, 5);
  EXPECT_EQ(result.report.kappa.items, 2);
  EXPECT_EQ(result.report.kappa.excluded_clips, std::vector<std::string>{"c5"});
}

TEST(Aggregate, JsonRoundTrip) {
  auto result = aggregate(four_clip_fixture());
  std::stringstream ss;
  write_aggregated_labels(ss, result.labels);
  std::vector<AggregatedLabel> back;
  std::string line;
  while (std::getline(ss, line)) back.push_back(nlohmann::json::parse(line).get<AggregatedLabel>());
  EXPECT_EQ(back, result.labels);
}

TEST(AnnotationTable, ReadRejectsBadLabelWithLine) {
  std::istringstream in(
      R"({"clip_id":"c","annotator_id":"a","granularity":"fine","label":"fatigue","timestamp":"2024-01-01T00:00:00Z"})"
      "\n"
      R"({"clip_id":"c","annotator_id":"b","granularity":"coarse","label":"fatigue","timestamp":"2024-01-01T00:00:00Z"})");
  try {
    read_annotation_table(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_label);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Timestamp, RoundTrip) {
  EXPECT_EQ(format_timestamp(parse_timestamp("2024-02-29T23:59:58Z")), "2024-02-29T23:59:58Z");
  EXPECT_EQ(format_timestamp(parse_timestamp("2024-02-29T23:59:58.250+00:00")), "2024-02-29T23:59:58.250Z");
  EXPECT_THROW(parse_timestamp("2024-02-30T00:00:00Z"), Error);
  EXPECT_THROW(parse_timestamp("2024-01-01T00:00:00+02:00"), Error);
}
