#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "caer/model/tensor.hpp"

namespace caer::model {

// Binary tensor archive:
//   "CAERARCH" | u32 version | u64 header bytes | JSON header | raw data
// The header holds {"meta": {...}, "tensors": [{"name", "shape": [r, c],
// "dtype": "f32"|"f64", "offset"}]} with byte offsets relative to the start
// of the data block. Little-endian. Tensors are loaded as doubles.
struct Archive {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, Mat> tensors;

  const Mat& at(const std::string& name) const;  // Error(not_found)
};

enum class StorageType { f32, f64 };

void save_archive(const std::filesystem::path& path, const Archive& archive, StorageType dtype = StorageType::f64);
Archive load_archive(const std::filesystem::path& path);

}  // namespace caer::model
