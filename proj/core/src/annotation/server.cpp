#include "caer/annotation/server.hpp"

#include <httplib.h>

#include <fstream>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "caer/error.hpp"

namespace caer::annotation {

namespace fs = std::filesystem;
using labels::Granularity;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::rejected:
    case ErrorCode::invalid_label: return 422;
    case ErrorCode::config:
    case ErrorCode::input_integrity: return 400;
    default: return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const nlohmann::json& body) { res.set_content(body.dump(), "application/json"); }

const char* media_type(const fs::path& p) {
  static const std::map<std::string, const char*> types{
      {".mp4", "video/mp4"}, {".webm", "video/webm"}, {".avi", "video/x-msvideo"},
      {".mkv", "video/x-matroska"}, {".mov", "video/quicktime"}};
  const auto it = types.find(p.extension().string());
  return it == types.end() ? "application/octet-stream" : it->second;
}

template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), to_string(e.code()), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct AnnotationServer::Impl {
  AnnotationService& service;
  httplib::Server server;
  bool bound = false;

  explicit Impl(AnnotationService& s) : service(s) {}
};

AnnotationServer::AnnotationServer(AnnotationService& service, std::optional<fs::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  auto& svc = impl_->service;
  auto& srv = impl_->server;

  srv.Get("/api/tasks/next", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            if (!req.has_param("annotator") || !req.has_param("granularity")) {
              return send_error(res, 400, "bad_request", "annotator and granularity are required");
            }
            const auto annotator = req.get_param_value("annotator");
            Granularity g;
            try {
              g = labels::parse_granularity(req.get_param_value("granularity"));
            } catch (const Error& e) {
              return send_error(res, 400, "bad_request", e.what());
            }
            const auto task = svc.next_task(annotator, g);
            if (!task) {
              const auto n = svc.plan().tasks_for(annotator, g).size();
              return send_json(res, {{"task", nullptr}, {"assigned", n}, {"submitted", n}});
            }
            send_json(res, {{"task",
                             {{"clip_id", task->clip_id},
                              {"granularity", labels::to_string(task->granularity)},
                              {"options", task->options},
                              {"video_url", fmt::format("/api/clips/{}/video", task->clip_id)}}},
                            {"assigned", task->assigned},
                            {"submitted", task->submitted}});
          }));

  srv.Post("/api/labels", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto body = nlohmann::json::parse(req.body);
             labels::AnnotationRecord r;
             r.clip_id = body.at("clip_id").get<std::string>();
             r.annotator_id = body.at("annotator_id").get<std::string>();
             try {
               r.granularity = labels::parse_granularity(body.at("granularity").get<std::string>());
             } catch (const Error& e) {
               throw Error(ErrorCode::rejected, e.what());
             }
             r.label = body.at("label").get<std::string>();
             r.timestamp = body.contains("timestamp") ? parse_timestamp(body.at("timestamp").get<std::string>()) : now_utc();
             const auto ack = svc.submit(r);
             send_json(res, {{"stored", ack.record},
                             {"replaced", ack.replaced},
                             {"assigned", ack.assigned},
                             {"submitted", ack.submitted}});
           }));

  srv.Get("/api/stats", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, svc.stats());
          }));

  srv.Get("/api/export", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            res.set_content(svc.export_table(), "application/x-ndjson");
          }));

  srv.Get(R"(/api/clips/([^/]+)/video)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const std::string clip = req.matches[1];
            const auto path = svc.media_path(clip);
            if (!path) return send_error(res, 404, "not_found", fmt::format("no video for clip '{}'", clip));
            const auto size = static_cast<std::size_t>(fs::file_size(*path));
            auto file = std::make_shared<std::ifstream>(*path, std::ios::binary);
            res.set_header("Accept-Ranges", "bytes");
            res.set_content_provider(size, media_type(*path),
                                     [file](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
                                       std::vector<char> buf(std::min<std::size_t>(length, 1 << 16));
                                       file->clear();
                                       file->seekg(static_cast<std::streamoff>(offset));
                                       file->read(buf.data(), static_cast<std::streamsize>(buf.size()));
                                       const auto got = file->gcount();
                                       if (got <= 0) return false;
                                       sink.write(buf.data(), static_cast<std::size_t>(got));
                                       return true;
                                     });
          }));

  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      throw Error(ErrorCode::io, fmt::format("cannot serve static files from {}", static_dir->string()));
    }
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::io, fmt::format("cannot bind {}:{}", host, port));
  impl_->bound = true;
  return bound;
}

void AnnotationServer::listen() {
  if (!impl_->bound) throw Error(ErrorCode::config, "bind() before listen()");
  impl_->server.listen_after_bind();
}

void AnnotationServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool AnnotationServer::running() const { return impl_->server.is_running(); }

}  // namespace caer::annotation
