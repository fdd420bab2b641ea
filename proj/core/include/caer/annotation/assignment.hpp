#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/labels/label_set.hpp"

namespace caer::annotation {

// Who labels which clip at one granularity.
struct GranularityPlan {
  int replicas = 0;
  std::vector<std::string> clips;      // input order
  std::vector<std::string> annotators; // input order
  std::map<std::string, std::vector<std::string>> annotators_of;  // clip -> R distinct ids, sorted

  bool operator==(const GranularityPlan&) const = default;
};

// Every clip gets `replicas` distinct annotators. Clips are visited in a
// seeded random order and each takes the least-loaded annotators, ties
// broken at random, so workloads never differ by more than one.
// Error(infeasible) when there are fewer annotators than replicas,
// Error(config) for duplicate or empty ids or replicas < 1.
GranularityPlan assign_tasks(const std::vector<std::string>& clip_ids, const std::vector<std::string>& annotator_ids,
                             int replicas, std::uint64_t seed);

struct AssignmentPlan {
  std::map<labels::Granularity, GranularityPlan> by_granularity;

  bool knows(const std::string& annotator) const;
  bool is_assigned(const std::string& clip, const std::string& annotator, labels::Granularity g) const;
  // Assigned clips of one annotator in plan clip order.
  std::vector<std::string> tasks_for(const std::string& annotator, labels::Granularity g) const;
  std::map<std::string, std::size_t> workloads(labels::Granularity g) const;
  std::vector<std::string> clips() const;  // union, sorted

  bool operator==(const AssignmentPlan&) const = default;
};

// Generation input:
//   {"seed": 0, "clips": [...],
//    "fine":   {"annotators": [...], "replicas": 5},
//    "coarse": {"annotators": [...], "replicas": 5}}
// Either granularity may be absent.
struct PoolSpec {
  std::vector<std::string> annotators;
  int replicas = 5;
};
struct PlanSpec {
  std::uint64_t seed = 0;
  std::vector<std::string> clips;
  std::map<labels::Granularity, PoolSpec> pools;
};

void from_json(const nlohmann::json& j, PlanSpec& s);
AssignmentPlan make_plan(const PlanSpec& spec);

// Stored form: {"fine": {"replicas": R, "clips": [...], "annotators": [...],
// "assignments": {clip: [ids]}}, "coarse": {...}}.
void to_json(nlohmann::json& j, const AssignmentPlan& p);
void from_json(const nlohmann::json& j, AssignmentPlan& p);

// Reads either form; a file without "assignments" entries is a spec and is
// expanded with make_plan. `default_clips` fills an empty clip list.
AssignmentPlan load_plan(const std::filesystem::path& path, const std::vector<std::string>& default_clips = {});

}  // namespace caer::annotation
