#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/labels/aggregate.hpp"

namespace caer::dataset {

// Exact per-category counts over a clip set. Percentages are derived on
// demand and sum to 100 whenever total() > 0.
struct ClassDistribution {
  std::vector<std::string> categories;
  std::vector<int> counts;

  int total() const;
  double percentage(std::size_t index) const;  // 0 when total() == 0
  int count(std::string_view category) const;
  bool operator==(const ClassDistribution&) const = default;
};

// Fine-grained distribution of the retained labels (others are skipped).
ClassDistribution class_distribution(std::span<const labels::AggregatedLabel> labels);
// Distribution of explicit fine-grained category names.
ClassDistribution class_distribution(std::span<const std::string> fine_labels);

void to_json(nlohmann::json& j, const ClassDistribution& d);

}  // namespace caer::dataset
