#include "caer/model/descriptors.hpp"

#include <fstream>

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/util/hash.hpp"

namespace caer::model {

std::string Descriptor::facial_text() const {
  if (!facial_clause.empty() && facial_clause.back() == '.') return facial_clause;
  return facial_clause + ".";
}

const Descriptor& DescriptorProfile::at(const std::string& category) const {
  for (const auto& d : classes)
    if (d.category == category) return d;
  throw Error(ErrorCode::config, fmt::format("descriptor profile '{}' has no entry for '{}'", name, category));
}

bool DescriptorProfile::covers(const labels::LabelSet& labels) const {
  for (const auto& c : labels.categories()) {
    bool found = false;
    for (const auto& d : classes) found = found || d.category == c;
    if (!found) return false;
  }
  return true;
}

std::uint64_t DescriptorProfile::hash() const { return fnv1a64(nlohmann::json(*this).dump()); }

const DescriptorProfile& academic_profile() {
  static const DescriptorProfile p{
      "academic",
      {
          {"enjoyment", "Upturned mouth corners, sparkling eyes, relaxed eyebrows", ", ",
           "focused on course content, or occasionally nodding in agreement."},
          {"neutrality", "Relaxed mouth, open eyes, neutral eyebrows, no noticeable emotional changes", ", ",
           "engaged with study materials, or natural body posture."},
          {"confusion", "Furrowed eyebrows, slightly open mouth, wandering or puzzled gaze", ", ",
           "chin rests on the palm, or eyes lock on learning material."},
          {"fatigue", "Mouth opens in a yawn, eyelids droop", ", ",
           "head tilts forward, eyes lock on learning material, or hand writing."},
          {"distraction", "Shifting eyes, restless or fidgety posture, relaxed but unfocused expression", ", ",
           "frequently checking phone, or averted gaze from study materials."},
      }};
  return p;
}

const DescriptorProfile& basic_emotion_profile() {
  static const DescriptorProfile p{
      "basic",
      {
          {"surprise", "Widened eyes, an open mouth, raised eyebrows, and a frozen expression.", " ",
           "Sudden stillness, widened eyes on the other person, hands raised or paused mid-motion."},
          {"sad", "Tears, a downward-turned mouth, drooping upper eyelids, and a wrinkled forehead.", " ",
           "Head down, avoiding eye contact, slow, withdrawn movements."},
          {"neutral", "Relaxed facial muscles, a straight mouth, a smooth forehead, and unremarkable eyebrows.", " ",
           "Relaxed posture, open stance, steady, calm eye contact."},
          {"happy", "A smiling mouth, raised cheeks, wrinkled eyes, and arched eyebrows.", " ",
           "Leaning in toward the other person, quick, cheerful movements."},
          {"fear", "Raised eyebrows, parted lips, a furrowed brow, and a retracted chin.", " ",
           "Hands close to chest or tightly together, small, cautious steps backward."},
          {"disgust", "A wrinkled nose, lowered eyebrows, a tightened mouth, and narrow eyes.", " ",
           "Slight step back, body angled away, hand raised or shielding face."},
          {"anger", "Furrowed eyebrows, narrow eyes, tightened lips, and flared nostrils.", " ",
           "Leaning forward, tense stance, fists clenched, or hand pointing."},
      }};
  return p;
}

labels::LabelSet basic_emotion_labels() {
  std::vector<std::string> cats;
  for (const auto& d : basic_emotion_profile().classes) cats.push_back(d.category);
  return labels::LabelSet(labels::Granularity::fine, cats);
}

DescriptorProfile load_descriptor_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, fmt::format("cannot open descriptor profile {}", path.string()));
  try {
    return nlohmann::json::parse(in).get<DescriptorProfile>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, fmt::format("{}: {}", path.string(), e.what()));
  }
}

DescriptorProfile resolve_descriptor_profile(const std::string& name_or_path) {
  if (name_or_path.empty() || name_or_path == "academic") return academic_profile();
  if (name_or_path == "basic") return basic_emotion_profile();
  return load_descriptor_profile(name_or_path);
}

void to_json(nlohmann::json& j, const Descriptor& d) {
  j = {{"category", d.category},
       {"facial_clause", d.facial_clause},
       {"separator", d.separator},
       {"context_clause", d.context_clause}};
}

void from_json(const nlohmann::json& j, Descriptor& d) {
  d.category = j.at("category").get<std::string>();
  d.facial_clause = j.at("facial_clause").get<std::string>();
  d.separator = j.value("separator", std::string(" "));
  d.context_clause = j.value("context_clause", std::string());
  if (d.context_clause.empty()) d.separator.clear();
}

void to_json(nlohmann::json& j, const DescriptorProfile& p) { j = {{"name", p.name}, {"classes", p.classes}}; }

void from_json(const nlohmann::json& j, DescriptorProfile& p) {
  p.name = j.value("name", std::string("custom"));
  p.classes = j.at("classes").get<std::vector<Descriptor>>();
}

}  // namespace caer::model
