#include "caer/preproc/sampling.hpp"

#include <fmt/format.h>

#include "caer/error.hpp"
#include "caer/util/rng.hpp"

namespace caer::preproc {

std::string_view to_string(SampleMode m) { return m == SampleMode::train ? "train" : "eval"; }

std::vector<int> sample_frames(int available, int n, SampleMode mode, std::uint64_t seed) {
  if (n <= 0) throw Error(ErrorCode::config, fmt::format("sample count must be positive, got {}", n));
  if (available < 1) throw Error(ErrorCode::degenerate_input, "clip has no frames");

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  if (available < n) {
    for (int i = 0; i < available; ++i) out.push_back(i);
    out.resize(static_cast<std::size_t>(n), available - 1);
    return out;
  }

  Rng rng(seed);
  const auto a = static_cast<std::int64_t>(available);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto start = static_cast<int>(i * a / n);
    const auto end = static_cast<int>((i + 1) * a / n);
    if (mode == SampleMode::eval) {
      out.push_back(start + (end - start) / 2);
    } else {
      out.push_back(std::uniform_int_distribution<int>(start, end - 1)(rng));
    }
  }
  return out;
}

}  // namespace caer::preproc
