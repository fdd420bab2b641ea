#include "caer/annotation/store.hpp"

#include <sqlite3.h>

#include <algorithm>

#include <fmt/format.h>

#include "caer/error.hpp"

namespace caer::annotation {

namespace {

struct Statement {
  sqlite3_stmt* stmt = nullptr;
  Statement(sqlite3* db, const char* sql) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::io, fmt::format("sqlite prepare failed: {}", sqlite3_errmsg(db)));
    }
  }
  ~Statement() { sqlite3_finalize(stmt); }
  void bind(int i, const std::string& s) { sqlite3_bind_text(stmt, i, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT); }
  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
    return p ? std::string(p) : std::string();
  }
};

}  // namespace

LabelStore::LabelStore(const std::filesystem::path& path) {
  if (path != ":memory:" && path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error(ErrorCode::io, fmt::format("cannot open label store {}: {}", path.string(), msg));
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA journal_mode=WAL");
  exec("PRAGMA synchronous=FULL");
  exec(
      "CREATE TABLE IF NOT EXISTS labels ("
      " clip_id TEXT NOT NULL, annotator_id TEXT NOT NULL, granularity TEXT NOT NULL,"
      " label TEXT NOT NULL, timestamp TEXT NOT NULL,"
      " PRIMARY KEY (clip_id, annotator_id, granularity))");
}

LabelStore::~LabelStore() { sqlite3_close(db_); }

void LabelStore::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    const std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::io, fmt::format("sqlite: {}", msg));
  }
}

bool LabelStore::put(const labels::AnnotationRecord& r) {
  std::lock_guard lock(mutex_);
  const std::string g(labels::to_string(r.granularity));
  exec("BEGIN IMMEDIATE");
  try {
    bool existed = false;
    {
      Statement q(db_, "SELECT 1 FROM labels WHERE clip_id=?1 AND annotator_id=?2 AND granularity=?3");
      q.bind(1, r.clip_id);
      q.bind(2, r.annotator_id);
      q.bind(3, g);
      existed = sqlite3_step(q.stmt) == SQLITE_ROW;
    }
    Statement w(db_, "INSERT OR REPLACE INTO labels VALUES (?1, ?2, ?3, ?4, ?5)");
    w.bind(1, r.clip_id);
    w.bind(2, r.annotator_id);
    w.bind(3, g);
    w.bind(4, r.label);
    w.bind(5, format_timestamp(r.timestamp));
    if (sqlite3_step(w.stmt) != SQLITE_DONE) {
      throw Error(ErrorCode::io, fmt::format("sqlite write failed: {}", sqlite3_errmsg(db_)));
    }
    exec("COMMIT");
    return existed;
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
}

std::vector<labels::AnnotationRecord> LabelStore::all() const {
  std::lock_guard lock(mutex_);
  Statement q(db_, "SELECT clip_id, annotator_id, granularity, label, timestamp FROM labels");
  std::vector<labels::AnnotationRecord> out;
  int rc;
  while ((rc = sqlite3_step(q.stmt)) == SQLITE_ROW) {
    labels::AnnotationRecord r;
    r.clip_id = q.text(0);
    r.annotator_id = q.text(1);
    r.granularity = labels::parse_granularity(q.text(2));
    r.label = q.text(3);
    r.timestamp = parse_timestamp(q.text(4));
    out.push_back(std::move(r));
  }
  if (rc != SQLITE_DONE) throw Error(ErrorCode::io, fmt::format("sqlite read failed: {}", sqlite3_errmsg(db_)));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.clip_id, a.granularity, a.annotator_id) < std::tie(b.clip_id, b.granularity, b.annotator_id);
  });
  return out;
}

std::size_t LabelStore::size() const {
  std::lock_guard lock(mutex_);
  Statement q(db_, "SELECT COUNT(*) FROM labels");
  sqlite3_step(q.stmt);
  return static_cast<std::size_t>(sqlite3_column_int64(q.stmt, 0));
}

}  // namespace caer::annotation
