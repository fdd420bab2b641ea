#pragma once

#include <filesystem>
#include <span>

#include "caer/dataset/split.hpp"
#include "caer/labels/aggregate.hpp"

namespace caer::dataset {

struct ExportedFiles {
  std::filesystem::path labels;        // labels.jsonl: retained AggregatedLabels
  std::filesystem::path split;         // split.jsonl
  std::filesystem::path distribution;  // distribution.json: all / train / test
};

// Writes the retained labels, the split and the class-distribution report
// into out_dir (created if missing). Output is byte-identical for identical
// inputs. Throws Error(input_integrity) if a retained clip is missing from
// the split, Error(io) if the directory cannot be written.
ExportedFiles export_dataset(std::span<const labels::AggregatedLabel> labels, const SplitAssignment& split,
                             const std::filesystem::path& out_dir);

}  // namespace caer::dataset
