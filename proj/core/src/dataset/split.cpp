#include "caer/dataset/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "caer/error.hpp"
#include "caer/util/rng.hpp"
#include "util/jsonl.hpp"

namespace caer::dataset {

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw Error(ErrorCode::config, fmt::format("unknown split '{}'", text));
}

std::size_t SplitAssignment::count(Split s) const {
  return static_cast<std::size_t>(
      std::count_if(clips.begin(), clips.end(), [s](const auto& kv) { return kv.second == s; }));
}

double SplitAssignment::train_fraction() const {
  return clips.empty() ? 0.0 : static_cast<double>(count(Split::train)) / static_cast<double>(clips.size());
}

namespace {

struct Subject {
  std::string id;
  std::vector<std::string> clips;
  std::vector<int> class_counts;
  int size() const { return static_cast<int>(clips.size()); }
};

double total_variation(const std::vector<int>& a, const std::vector<int>& b) {
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  if (na == 0.0 || nb == 0.0) return 0.0;
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) tv += std::abs(a[i] / na - b[i] / nb);
  return 0.5 * tv;
}

}  // namespace

SplitAssignment split_subject_disjoint(std::span<const labels::AggregatedLabel> labels,
                                       std::span<const ClipRecord> manifest,
                                       const SplitOptions& options) {
  if (!(options.ratio > 0.0 && options.ratio < 1.0)) {
    throw Error(ErrorCode::config, fmt::format("split ratio must be in (0, 1), got {}", options.ratio));
  }
  std::map<std::string, const ClipRecord*> by_id;
  for (const auto& c : manifest) by_id[c.clip_id] = &c;

  const auto& fine = labels::fine_labels();
  std::map<std::string, Subject> subjects;
  int total = 0;
  for (const auto& l : labels) {
    if (!l.retained) continue;
    auto it = by_id.find(l.clip_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::input_integrity, fmt::format("labeled clip '{}' has no manifest record", l.clip_id));
    }
    auto& s = subjects[it->second->subject_id];
    if (s.id.empty()) {
      s.id = it->second->subject_id;
      s.class_counts.assign(fine.size(), 0);
    }
    s.clips.push_back(l.clip_id);
    ++s.class_counts[*fine.index_of(*l.fine_label)];
    ++total;
  }

  SplitAssignment result;
  result.seed = options.seed;
  result.ratio = options.ratio;
  if (total == 0) return result;
  if (subjects.size() < 2) {
    throw Error(ErrorCode::split_infeasible,
                fmt::format("split infeasible: only one subject ('{}'), disjointness impossible",
                            subjects.begin()->first));
  }

  const double eps = 1e-9;
  const int train_lo = static_cast<int>(std::ceil((options.ratio - options.tolerance) * total - eps));
  const int train_hi = static_cast<int>(std::floor((options.ratio + options.tolerance) * total + eps));
  const int test_hi = total - train_lo;
  if (train_lo > train_hi || train_hi < 1 || test_hi < 1) {
    throw Error(ErrorCode::split_infeasible,
                fmt::format("split infeasible: {} clips cannot meet ratio {} +/- {}", total, options.ratio,
                            options.tolerance));
  }
  for (const auto& [id, s] : subjects) {
    if (s.size() > train_hi && s.size() > test_hi) {
      throw Error(ErrorCode::split_infeasible,
                  fmt::format("split infeasible: subject '{}' owns {} of {} clips", id, s.size(), total));
    }
  }

  std::vector<const Subject*> order;
  for (const auto& [id, s] : subjects) order.push_back(&s);
  Rng rng(derive_seed(options.seed, {0x5e1170}));
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [](const Subject* a, const Subject* b) { return a->size() > b->size(); });

  const double train_target = options.ratio * total;
  const double test_target = total - train_target;
  std::vector<int> train_counts(fine.size(), 0);
  std::vector<int> test_counts(fine.size(), 0);
  int n_train = 0;
  int n_test = 0;

  for (const Subject* s : order) {
    auto cost = [&](Split where) {
      auto tr = train_counts;
      auto te = test_counts;
      auto& dst = where == Split::train ? tr : te;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s->class_counts[i];
      const double fill_train = (n_train + (where == Split::train ? s->size() : 0)) / train_target;
      const double fill_test = (n_test + (where == Split::test ? s->size() : 0)) / test_target;
      return total_variation(tr, te) + std::abs(fill_train - fill_test);
    };
    const bool can_train = n_train + s->size() <= train_hi;
    const bool can_test = n_test + s->size() <= test_hi;
    if (!can_train && !can_test) {
      throw Error(ErrorCode::split_infeasible,
                  fmt::format("split infeasible: subject '{}' ({} clips) fits neither split within tolerance",
                              s->id, s->size()));
    }
    Split where;
    if (can_train && can_test) {
      where = cost(Split::test) < cost(Split::train) ? Split::test : Split::train;
    } else {
      where = can_train ? Split::train : Split::test;
    }
    auto& counts = where == Split::train ? train_counts : test_counts;
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += s->class_counts[i];
    (where == Split::train ? n_train : n_test) += s->size();
    for (const auto& clip : s->clips) result.clips[clip] = where;
  }
  return result;
}

void write_split(std::ostream& out, const SplitAssignment& split) {
  for (const auto& [clip, s] : split.clips) {
    detail::write_json_line(out, {{"clip_id", clip}, {"split", std::string(to_string(s))}});
  }
}

SplitAssignment read_split(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  SplitAssignment split;
  detail::for_each_json_line(in, ErrorCode::input_integrity, [&](std::size_t line, const nlohmann::json& j) {
    try {
      auto clip = j.at("clip_id").get<std::string>();
      auto s = parse_split(j.at("split").get<std::string>());
      if (!split.clips.emplace(clip, s).second) {
        throw Error(ErrorCode::input_integrity, fmt::format("duplicate clip '{}'", clip));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::input_integrity, fmt::format("{} line {}: {}", path.string(), line, e.what()));
    }
  });
  return split;
}

}  // namespace caer::dataset
