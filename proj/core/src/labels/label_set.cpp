#include "caer/labels/label_set.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::labels {

std::string_view to_string(Granularity g) {
  return g == Granularity::fine ? "fine" : "coarse";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "fine") return Granularity::fine;
  if (text == "coarse") return Granularity::coarse;
  throw Error(ErrorCode::invalid_label, fmt::format("unknown granularity '{}'", text));
}

LabelSet::LabelSet(Granularity granularity, std::vector<std::string> categories)
    : granularity_(granularity), categories_(std::move(categories)) {
  std::set<std::string_view> seen;
  for (const auto& c : categories_) {
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::invalid_label, fmt::format("duplicate category '{}'", c));
    }
  }
}

std::optional<std::size_t> LabelSet::index_of(std::string_view category) const {
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - categories_.begin());
}

const LabelSet& fine_labels() {
  static const LabelSet set(Granularity::fine,
                            {"enjoyment", "neutrality", "confusion", "fatigue", "distraction"});
  return set;
}

const LabelSet& coarse_labels() {
  static const LabelSet set(Granularity::coarse, {"engaged", "distracted"});
  return set;
}

const LabelSet& label_set(Granularity g) {
  return g == Granularity::fine ? fine_labels() : coarse_labels();
}

const std::string& map_fine_to_coarse(std::string_view fine) {
  const auto& coarse = coarse_labels().categories();
  if (fine == "distraction") return coarse[1];
  if (fine_labels().contains(fine)) return coarse[0];
  throw Error(ErrorCode::invalid_label, fmt::format("'{}' is not a fine-grained category", fine));
}

}  // namespace caer::labels
