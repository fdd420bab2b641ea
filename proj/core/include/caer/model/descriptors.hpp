#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "caer/labels/label_set.hpp"

namespace caer::model {

// Class description split into its facial-expression clause and its
// context clause; facial + separator + context is the full text.
struct Descriptor {
  std::string category;
  std::string facial_clause;
  std::string separator;
  std::string context_clause;

  std::string full_text() const { return facial_clause + separator + context_clause; }
  // Facial clause closed with a full stop.
  std::string facial_text() const;
  bool operator==(const Descriptor&) const = default;
};

struct DescriptorProfile {
  std::string name;
  std::vector<Descriptor> classes;

  const Descriptor& at(const std::string& category) const;  // Error(config)
  bool covers(const labels::LabelSet& labels) const;
  std::uint64_t hash() const;
  bool operator==(const DescriptorProfile&) const = default;
};

// The five academic-emotion descriptors (default).
const DescriptorProfile& academic_profile();
// The seven basic-emotion descriptors.
const DescriptorProfile& basic_emotion_profile();
// Labels of the basic-emotion profile, in profile order.
labels::LabelSet basic_emotion_labels();

// "academic", "basic", or a path to a JSON profile.
DescriptorProfile resolve_descriptor_profile(const std::string& name_or_path);
DescriptorProfile load_descriptor_profile(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Descriptor& d);
void from_json(const nlohmann::json& j, Descriptor& d);
void to_json(nlohmann::json& j, const DescriptorProfile& p);
void from_json(const nlohmann::json& j, DescriptorProfile& p);

}  // namespace caer::model
