#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "caer/annotation/service.hpp"

namespace caer::annotation {

// HTTP front end of AnnotationService.
//   GET  /api/tasks/next?annotator=<id>&granularity=fine|coarse
//   POST /api/labels            {clip_id, annotator_id, granularity, label[, timestamp]}
//   GET  /api/stats
//   GET  /api/export            line-delimited JSON annotation table
//   GET  /api/clips/<id>/video  honours Range headers
// Errors come back as {"error": <code>, "message": ...} with 400, 404, 422
// or 500.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service, std::optional<std::filesystem::path> static_dir = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; Error(io) on failure.
  int bind(const std::string& host, int port);
  // Serves until stop(); call bind() first.
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace caer::annotation
