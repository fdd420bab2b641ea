#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace caer::dataset {

enum class Scenario { classroom, library, laboratory, dormitory, other };

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view text);

// Face rectangle for one frame, in pixel coordinates of that frame.
struct FaceBox {
  int frame_index = 0;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const FaceBox&) const = default;
};

struct ClipRecord {
  std::string clip_id;
  std::string subject_id;
  Scenario scenario = Scenario::other;
  std::string media_path;
  double fps = 0.0;
  int n_frames = 0;
  double duration_s = 0.0;
  std::vector<FaceBox> face_boxes;  // sorted by frame_index, may be empty

  bool operator==(const ClipRecord&) const = default;
};

// Line-delimited JSON. Required keys: clip_id, subject_id, scenario,
// media_path, fps, n_frames. Optional: duration_s (defaults to
// n_frames / fps, otherwise must agree within 5%), face_boxes as a list of
// [frame_index, x, y, w, h]. Any problem, including a duplicate clip_id,
// raises Error(manifest) naming the 1-based line.
std::vector<ClipRecord> parse_manifest(std::istream& in);
std::vector<ClipRecord> load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, std::span<const ClipRecord> clips);

void to_json(nlohmann::json& j, const ClipRecord& c);

}  // namespace caer::dataset
