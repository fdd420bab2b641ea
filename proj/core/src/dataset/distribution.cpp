#include "caer/dataset/distribution.hpp"

#include <numeric>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::dataset {

int ClassDistribution::total() const { return std::accumulate(counts.begin(), counts.end(), 0); }

double ClassDistribution::percentage(std::size_t index) const {
  const int t = total();
  return t == 0 ? 0.0 : 100.0 * counts.at(index) / t;
}

int ClassDistribution::count(std::string_view category) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i] == category) return counts[i];
  }
  return 0;
}

ClassDistribution class_distribution(std::span<const std::string> fine_labels) {
  const auto& set = labels::fine_labels();
  ClassDistribution d{set.categories(), std::vector<int>(set.size(), 0)};
  for (const auto& name : fine_labels) {
    auto idx = set.index_of(name);
    if (!idx) throw Error(ErrorCode::invalid_label, fmt::format("'{}' is not a fine-grained category", name));
    ++d.counts[*idx];
  }
  return d;
}

ClassDistribution class_distribution(std::span<const labels::AggregatedLabel> labels) {
  std::vector<std::string> names;
  for (const auto& l : labels) {
    if (l.retained && l.fine_label) names.push_back(*l.fine_label);
  }
  return class_distribution(names);
}

void to_json(nlohmann::json& j, const ClassDistribution& d) {
  j = nlohmann::json::object();
  j["total"] = d.total();
  auto cats = nlohmann::json::array();
  for (std::size_t i = 0; i < d.categories.size(); ++i) {
    cats.push_back({{"category", d.categories[i]}, {"count", d.counts[i]}, {"percentage", d.percentage(i)}});
  }
  j["classes"] = std::move(cats);
}

}  // namespace caer::dataset
