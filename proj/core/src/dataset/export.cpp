#include "caer/dataset/export.hpp"

#include <algorithm>

#include "caer/dataset/distribution.hpp"
#include "caer/error.hpp"
#include "util/jsonl.hpp"

namespace caer::dataset {

ExportedFiles export_dataset(std::span<const labels::AggregatedLabel> labels, const SplitAssignment& split,
                             const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io, fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));

  std::vector<labels::AggregatedLabel> retained;
  for (const auto& l : labels) {
    if (l.retained) retained.push_back(l);
  }
  std::sort(retained.begin(), retained.end(),
            [](const auto& a, const auto& b) { return a.clip_id < b.clip_id; });

  std::vector<std::string> train_names;
  std::vector<std::string> test_names;
  std::vector<std::string> all_names;
  for (const auto& l : retained) {
    auto it = split.clips.find(l.clip_id);
    if (it == split.clips.end()) {
      throw Error(ErrorCode::input_integrity, fmt::format("clip '{}' has no split assignment", l.clip_id));
    }
    all_names.push_back(*l.fine_label);
    (it->second == Split::train ? train_names : test_names).push_back(*l.fine_label);
  }

  ExportedFiles files{out_dir / "labels.jsonl", out_dir / "split.jsonl", out_dir / "distribution.json"};
  {
    auto out = detail::open_output(files.labels);
    labels::write_aggregated_labels(out, retained);
  }
  {
    SplitAssignment restricted;
    restricted.seed = split.seed;
    restricted.ratio = split.ratio;
    for (const auto& l : retained) restricted.clips[l.clip_id] = split.clips.at(l.clip_id);
    auto out = detail::open_output(files.split);
    write_split(out, restricted);
  }
  {
    nlohmann::json report{{"all", class_distribution(std::span<const std::string>(all_names))},
                          {"train", class_distribution(std::span<const std::string>(train_names))},
                          {"test", class_distribution(std::span<const std::string>(test_names))},
                          {"seed", split.seed},
                          {"ratio", split.ratio}};
    auto out = detail::open_output(files.distribution);
    out << report.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::io, fmt::format("write failed for '{}'", files.distribution.string()));
  }
  return files;
}

}  // namespace caer::dataset
