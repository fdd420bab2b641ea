#include "caer/preproc/face_detector.hpp"

#include <algorithm>

namespace caer::preproc {

ResolvedBoxes resolve_boxes(std::span<const dataset::FaceBox> known, std::span<const int> indices) {
  ResolvedBoxes out;
  out.boxes.resize(indices.size());
  if (known.empty()) {
    out.full_frame_fallback = true;
    return out;
  }
  std::vector<dataset::FaceBox> sorted(known.begin(), known.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });

  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int f = indices[i];
    auto it = std::lower_bound(sorted.begin(), sorted.end(), f,
                               [](const dataset::FaceBox& b, int v) { return b.frame_index < v; });
    if (it == sorted.end()) {
      out.boxes[i] = sorted.back();
    } else if (it->frame_index == f || it == sorted.begin()) {
      out.boxes[i] = *it;
    } else {
      const auto prev = std::prev(it);
      out.boxes[i] = (f - prev->frame_index <= it->frame_index - f) ? *prev : *it;
    }
  }
  return out;
}

}  // namespace caer::preproc
