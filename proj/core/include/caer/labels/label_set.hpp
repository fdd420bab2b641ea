#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace caer::labels {

enum class Granularity { coarse, fine };

std::string_view to_string(Granularity g);
// Throws Error(invalid_label) for anything but "coarse" / "fine".
Granularity parse_granularity(std::string_view text);

// Ordered, duplicate-free category names for one granularity.
class LabelSet {
 public:
  LabelSet(Granularity granularity, std::vector<std::string> categories);

  Granularity granularity() const noexcept { return granularity_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }

  std::optional<std::size_t> index_of(std::string_view category) const;
  bool contains(std::string_view category) const { return index_of(category).has_value(); }

 private:
  Granularity granularity_;
  std::vector<std::string> categories_;
};

// [enjoyment, neutrality, confusion, fatigue, distraction]
const LabelSet& fine_labels();
// [engaged, distracted]
const LabelSet& coarse_labels();
const LabelSet& label_set(Granularity g);

// enjoyment/neutrality/confusion/fatigue -> engaged; distraction -> distracted.
// Throws Error(invalid_label) for names outside the fine set.
const std::string& map_fine_to_coarse(std::string_view fine);

}  // namespace caer::labels
