#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "caer/labels/annotation.hpp"

struct sqlite3;

namespace caer::annotation {

// Durable label store, one row per (clip, annotator, granularity). Every
// call holds one mutex, so writes to a key are serialized and reads see a
// committed snapshot.
class LabelStore {
 public:
  // ":memory:" gives a private in-memory database.
  explicit LabelStore(const std::filesystem::path& path);
  ~LabelStore();
  LabelStore(const LabelStore&) = delete;
  LabelStore& operator=(const LabelStore&) = delete;

  // Inserts or replaces; returns true when a row was replaced.
  bool put(const labels::AnnotationRecord& record);
  // Sorted by (clip_id, granularity, annotator_id), like latest_records().
  std::vector<labels::AnnotationRecord> all() const;
  std::size_t size() const;

 private:
  void exec(const char* sql) const;

  sqlite3* db_ = nullptr;
  mutable std::mutex mutex_;
};

}  // namespace caer::annotation
