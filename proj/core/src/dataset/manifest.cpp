#include "caer/dataset/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "caer/error.hpp"
#include "util/jsonl.hpp"

namespace caer::dataset {

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::classroom: return "classroom";
    case Scenario::library: return "library";
    case Scenario::laboratory: return "laboratory";
    case Scenario::dormitory: return "dormitory";
    case Scenario::other: return "other";
  }
  return "other";
}

std::optional<Scenario> parse_scenario(std::string_view text) {
  for (auto s : {Scenario::classroom, Scenario::library, Scenario::laboratory, Scenario::dormitory,
                 Scenario::other}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

namespace {

ClipRecord parse_record(const nlohmann::json& j) {
  ClipRecord c;
  c.clip_id = j.at("clip_id").get<std::string>();
  c.subject_id = j.at("subject_id").get<std::string>();
  const auto scenario_name = j.at("scenario").get<std::string>();
  auto scenario = parse_scenario(scenario_name);
  if (!scenario) throw std::invalid_argument(fmt::format("unknown scenario '{}'", scenario_name));
  c.scenario = *scenario;
  c.media_path = j.at("media_path").get<std::string>();
  c.fps = j.at("fps").get<double>();
  c.n_frames = j.at("n_frames").get<int>();
  if (c.clip_id.empty()) throw std::invalid_argument("empty clip_id");
  if (c.subject_id.empty()) throw std::invalid_argument("empty subject_id");
  if (!(c.fps > 0.0) || !std::isfinite(c.fps)) throw std::invalid_argument(fmt::format("fps must be > 0 (got {})", c.fps));
  if (c.n_frames < 1) throw std::invalid_argument(fmt::format("n_frames must be >= 1 (got {})", c.n_frames));
  const double expected = c.n_frames / c.fps;
  if (j.contains("duration_s")) {
    c.duration_s = j.at("duration_s").get<double>();
    if (std::abs(c.duration_s - expected) > 0.05 * expected) {
      throw std::invalid_argument(
          fmt::format("duration_s {} disagrees with n_frames/fps = {}", c.duration_s, expected));
    }
  } else {
    c.duration_s = expected;
  }
  if (j.contains("face_boxes")) {
    std::set<int> frames;
    for (const auto& b : j.at("face_boxes")) {
      if (!b.is_array() || b.size() != 5) throw std::invalid_argument("face box must be [frame_index, x, y, w, h]");
      FaceBox box{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>(), b[4].get<int>()};
      if (box.frame_index < 0 || box.frame_index >= c.n_frames) {
        throw std::invalid_argument(fmt::format("face box frame_index {} outside [0, {})", box.frame_index, c.n_frames));
      }
      if (box.width <= 0 || box.height <= 0 || box.x < 0 || box.y < 0) {
        throw std::invalid_argument(fmt::format("face box for frame {} has invalid geometry", box.frame_index));
      }
      if (!frames.insert(box.frame_index).second) {
        throw std::invalid_argument(fmt::format("duplicate face box for frame {}", box.frame_index));
      }
      c.face_boxes.push_back(box);
    }
    std::sort(c.face_boxes.begin(), c.face_boxes.end(),
              [](const FaceBox& a, const FaceBox& b) { return a.frame_index < b.frame_index; });
  }
  return c;
}

}  // namespace

std::vector<ClipRecord> parse_manifest(std::istream& in) {
  std::vector<ClipRecord> out;
  std::set<std::string> ids;
  detail::for_each_json_line(in, ErrorCode::manifest, [&](std::size_t line, const nlohmann::json& j) {
    ClipRecord record;
    try {
      record = parse_record(j);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::manifest, fmt::format("line {}: {}", line, e.what()));
    }
    if (!ids.insert(record.clip_id).second) {
      throw Error(ErrorCode::manifest, fmt::format("line {}: duplicate clip_id '{}'", line, record.clip_id));
    }
    out.push_back(std::move(record));
  });
  return out;
}

std::vector<ClipRecord> load_manifest(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_manifest(in);
}

void to_json(nlohmann::json& j, const ClipRecord& c) {
  j = nlohmann::json{{"clip_id", c.clip_id},
                     {"subject_id", c.subject_id},
                     {"scenario", std::string(to_string(c.scenario))},
                     {"media_path", c.media_path},
                     {"fps", c.fps},
                     {"n_frames", c.n_frames},
                     {"duration_s", c.duration_s}};
  if (!c.face_boxes.empty()) {
    auto boxes = nlohmann::json::array();
    for (const auto& b : c.face_boxes) boxes.push_back({b.frame_index, b.x, b.y, b.width, b.height});
    j["face_boxes"] = std::move(boxes);
  }
}

void write_manifest(std::ostream& out, std::span<const ClipRecord> clips) {
  for (const auto& c : clips) detail::write_json_line(out, nlohmann::json(c));
}

}  // namespace caer::dataset
