#include "caer/annotation/assignment.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/util/rng.hpp"

namespace caer::annotation {

using labels::Granularity;

namespace {

void require_unique(const std::vector<std::string>& ids, const char* what) {
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw Error(ErrorCode::config, fmt::format("empty {} id", what));
    if (!seen.insert(id).second) throw Error(ErrorCode::config, fmt::format("duplicate {} id '{}'", what, id));
  }
}

}  // namespace

GranularityPlan assign_tasks(const std::vector<std::string>& clip_ids, const std::vector<std::string>& annotator_ids,
                             int replicas, std::uint64_t seed) {
  if (replicas < 1) throw Error(ErrorCode::config, "replicas must be >= 1");
  require_unique(clip_ids, "clip");
  require_unique(annotator_ids, "annotator");
  if (annotator_ids.size() < static_cast<std::size_t>(replicas)) {
    throw Error(ErrorCode::infeasible, fmt::format("{} annotators cannot give each clip {} distinct labels",
                                                   annotator_ids.size(), replicas));
  }
  GranularityPlan plan;
  plan.replicas = replicas;
  plan.clips = clip_ids;
  plan.annotators = annotator_ids;

  Rng rng(seed);
  std::vector<std::size_t> visit(clip_ids.size());
  std::iota(visit.begin(), visit.end(), 0);
  std::shuffle(visit.begin(), visit.end(), rng);

  std::vector<std::size_t> load(annotator_ids.size(), 0);
  std::vector<std::size_t> order(annotator_ids.size());
  for (auto c : visit) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return load[a] < load[b]; });
    std::vector<std::string> chosen;
    for (int r = 0; r < replicas; ++r) {
      ++load[order[r]];
      chosen.push_back(annotator_ids[order[r]]);
    }
    std::sort(chosen.begin(), chosen.end());
    plan.annotators_of.emplace(clip_ids[c], std::move(chosen));
  }
  return plan;
}

bool AssignmentPlan::knows(const std::string& annotator) const {
  for (const auto& [g, p] : by_granularity) {
    if (std::find(p.annotators.begin(), p.annotators.end(), annotator) != p.annotators.end()) return true;
  }
  return false;
}

bool AssignmentPlan::is_assigned(const std::string& clip, const std::string& annotator, Granularity g) const {
  const auto p = by_granularity.find(g);
  if (p == by_granularity.end()) return false;
  const auto it = p->second.annotators_of.find(clip);
  return it != p->second.annotators_of.end() && std::binary_search(it->second.begin(), it->second.end(), annotator);
}

std::vector<std::string> AssignmentPlan::tasks_for(const std::string& annotator, Granularity g) const {
  std::vector<std::string> out;
  const auto p = by_granularity.find(g);
  if (p == by_granularity.end()) return out;
  for (const auto& clip : p->second.clips) {
    if (is_assigned(clip, annotator, g)) out.push_back(clip);
  }
  return out;
}

std::map<std::string, std::size_t> AssignmentPlan::workloads(Granularity g) const {
  std::map<std::string, std::size_t> out;
  const auto p = by_granularity.find(g);
  if (p == by_granularity.end()) return out;
  for (const auto& a : p->second.annotators) out[a] = 0;
  for (const auto& [clip, ids] : p->second.annotators_of) {
    for (const auto& a : ids) ++out[a];
  }
  return out;
}

std::vector<std::string> AssignmentPlan::clips() const {
  std::set<std::string> all;
  for (const auto& [g, p] : by_granularity) all.insert(p.clips.begin(), p.clips.end());
  return {all.begin(), all.end()};
}

void from_json(const nlohmann::json& j, PlanSpec& s) {
  s = {};
  s.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("clips")) s.clips = j.at("clips").get<std::vector<std::string>>();
  for (auto g : {Granularity::fine, Granularity::coarse}) {
    const std::string key(labels::to_string(g));
    if (!j.contains(key)) continue;
    PoolSpec pool;
    pool.annotators = j.at(key).at("annotators").get<std::vector<std::string>>();
    pool.replicas = j.at(key).value("replicas", 5);
    s.pools.emplace(g, std::move(pool));
  }
  if (s.pools.empty()) throw Error(ErrorCode::config, "plan spec names no annotator pool");
}

AssignmentPlan make_plan(const PlanSpec& spec) {
  AssignmentPlan plan;
  for (const auto& [g, pool] : spec.pools) {
    plan.by_granularity.emplace(
        g, assign_tasks(spec.clips, pool.annotators, pool.replicas, derive_seed(spec.seed, {static_cast<std::uint64_t>(g)})));
  }
  return plan;
}

void to_json(nlohmann::json& j, const AssignmentPlan& p) {
  j = nlohmann::json::object();
  for (const auto& [g, gp] : p.by_granularity) {
    j[std::string(labels::to_string(g))] = {{"replicas", gp.replicas},
                                            {"clips", gp.clips},
                                            {"annotators", gp.annotators},
                                            {"assignments", gp.annotators_of}};
  }
}

void from_json(const nlohmann::json& j, AssignmentPlan& p) {
  p = {};
  for (const auto& [key, value] : j.items()) {
    const auto g = labels::parse_granularity(key);
    GranularityPlan gp;
    gp.replicas = value.at("replicas").get<int>();
    gp.clips = value.at("clips").get<std::vector<std::string>>();
    gp.annotators = value.at("annotators").get<std::vector<std::string>>();
    gp.annotators_of = value.at("assignments").get<std::map<std::string, std::vector<std::string>>>();
    const std::set<std::string> clip_set(gp.clips.begin(), gp.clips.end());
    const std::set<std::string> ann_set(gp.annotators.begin(), gp.annotators.end());
    for (auto& [clip, ids] : gp.annotators_of) {
      if (!clip_set.contains(clip)) throw Error(ErrorCode::config, fmt::format("plan assigns unknown clip '{}'", clip));
      for (const auto& a : ids) {
        if (!ann_set.contains(a)) throw Error(ErrorCode::config, fmt::format("plan assigns unknown annotator '{}'", a));
      }
      std::sort(ids.begin(), ids.end());
    }
    p.by_granularity.emplace(g, std::move(gp));
  }
}

AssignmentPlan load_plan(const std::filesystem::path& path, const std::vector<std::string>& default_clips) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot read plan {}", path.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("{}: {}", path.string(), e.what()));
  }
  const bool stored = std::any_of(j.begin(), j.end(), [](const auto& v) { return v.is_object() && v.contains("assignments"); });
  if (stored) return j.get<AssignmentPlan>();
  auto spec = j.get<PlanSpec>();
  if (spec.clips.empty()) spec.clips = default_clips;
  if (spec.clips.empty()) throw Error(ErrorCode::config, "plan spec has no clips");
  return make_plan(spec);
}

}  // namespace caer::annotation
