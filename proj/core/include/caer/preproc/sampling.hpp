#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace caer::preproc {

enum class SampleMode { train, eval };

std::string_view to_string(SampleMode m);

// Splits [0, available) into n equal bins (bin i = [floor(i*a/n), floor((i+1)*a/n))).
// eval: centre of each bin, start + (end - start) / 2. train: one uniform
// draw per bin from a generator seeded with `seed`. With fewer than n frames
// every frame is taken once and the last index repeats up to length n.
// Throws Error(config) for n <= 0 and Error(degenerate_input) for available < 1.
std::vector<int> sample_frames(int available, int n, SampleMode mode, std::uint64_t seed = 0);

}  // namespace caer::preproc
