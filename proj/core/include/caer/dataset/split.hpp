#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "caer/dataset/manifest.hpp"
#include "caer/labels/aggregate.hpp"

namespace caer::dataset {

enum class Split { train, test };

std::string_view to_string(Split s);
Split parse_split(std::string_view text);

struct SplitAssignment {
  std::map<std::string, Split> clips;
  std::uint64_t seed = 0;
  double ratio = 0.8;

  std::size_t count(Split s) const;
  double train_fraction() const;
};

struct SplitOptions {
  double ratio = 0.8;
  std::uint64_t seed = 0;
  // Allowed deviation of the train fraction from `ratio` (fraction, 0.03 = 3pp).
  double tolerance = 0.03;
};

// Subject-disjoint train/test split of the retained labels.
//
// Whole subjects are placed greedily, largest first (ties ordered by the
// seed), each into the split that minimises the total-variation distance
// between the two class distributions plus the imbalance of the two splits'
// fill levels, subject to hard caps that keep the train fraction within
// ratio +/- tolerance. Throws Error(split_infeasible) naming the offending
// subject when the caps cannot be met, and Error(input_integrity) when a
// labeled clip has no manifest record.
SplitAssignment split_subject_disjoint(std::span<const labels::AggregatedLabel> labels,
                                       std::span<const ClipRecord> manifest,
                                       const SplitOptions& options = {});

// Line-delimited {"clip_id": ..., "split": "train"|"test"}, sorted by clip_id.
void write_split(std::ostream& out, const SplitAssignment& split);
SplitAssignment read_split(const std::filesystem::path& path);

}  // namespace caer::dataset
