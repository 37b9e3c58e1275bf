#pragma once

// HTTP review API over an AnnotationStore.
//
//   GET /api/images              ids, status, dimensions, version
//   GET /api/images/{id}/file    original image bytes
//   GET /api/annotations/{id}    one record
//   PUT /api/annotations/{id}    {"decision","box"?,"reviewer","version"?}
//   GET /api/progress            per-status counts
//
// Reads share a lock; writes are serialised and reach the log before the
// response is sent.

#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "odtk/annotation.hpp"

namespace odtk {

class ReviewService {
 public:
  ReviewService(AnnotationStore store, DatasetManifest manifest, Clock clock = utc_now)
      : store_(std::move(store)), manifest_(std::move(manifest)), clock_(std::move(clock)) {}

  json list_images() const {
    std::shared_lock lock(mu_);
    json out = json::array();
    for (const auto& r : store_.records())
      out.push_back({{"image_id", r.image_id},
                     {"status", to_string(r.status)},
                     {"width", r.width},
                     {"height", r.height},
                     {"version", r.version}});
    return out;
  }

  json annotation(const std::string& id) const {
    std::shared_lock lock(mu_);
    return record_to_json(store_.get(id));
  }

  json progress() const {
    std::shared_lock lock(mu_);
    return progress_to_json(store_.progress());
  }

  /// Parses and applies a PUT body. Validation failures surface as Error.
  json submit(const std::string& id, const json& body) {
    if (!body.is_object()) fail(ErrorCode::InvalidArgument, "body must be a JSON object");
    Decision d;
    auto dec = body.find("decision");
    if (dec == body.end() || !dec->is_string()) fail(ErrorCode::InvalidArgument, "'decision' must be a string");
    d.kind = parse_decision_kind(dec->get<std::string>());
    auto rev = body.find("reviewer");
    if (rev == body.end() || !rev->is_string() || rev->get<std::string>().empty())
      fail(ErrorCode::InvalidArgument, "'reviewer' must be a non-empty string");
    d.reviewer = rev->get<std::string>();
    if (auto b = body.find("box"); b != body.end() && !b->is_null()) d.box = parse_box(*b);
    std::optional<std::uint64_t> version;
    if (auto v = body.find("version"); v != body.end() && !v->is_null()) {
      if (!v->is_number_unsigned()) fail(ErrorCode::InvalidArgument, "'version' must be a non-negative integer");
      version = v->get<std::uint64_t>();
    }
    std::unique_lock lock(mu_);
    return record_to_json(store_.apply_review(id, d, version, clock_).record);
  }

  /// Image file bytes and MIME type.
  std::pair<std::string, std::string> image_file(const std::string& id) const {
    const auto* e = manifest_.find(id);
    if (!e) fail(ErrorCode::NotFound, "no image '" + id + "'");
    const auto bytes = read_file_bytes(manifest_.resolve(*e));
    const auto fmt = sniff_format(bytes);
    const std::string mime = fmt == ImageFormat::png    ? "image/png"
                             : fmt == ImageFormat::jpeg ? "image/jpeg"
                                                        : "application/octet-stream";
    return {std::string(bytes.begin(), bytes.end()), mime};
  }

  GroundTruthExport export_ground_truth() const {
    std::shared_lock lock(mu_);
    return store_.export_ground_truth();
  }

 private:
  mutable std::shared_mutex mu_;
  AnnotationStore store_;
  DatasetManifest manifest_;
  Clock clock_;
};

inline int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::VersionConflict: return 409;
    case ErrorCode::InvalidBox:
    case ErrorCode::InvalidArgument: return 422;
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

class ReviewServer {
 public:
  explicit ReviewServer(ReviewService& service) : service_(service) { install_routes(); }
  ~ReviewServer() { stop(); }

  /// Binds without serving; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      const int p = server_.bind_to_any_port(host);
      if (p < 0) fail(ErrorCode::IoError, "cannot bind " + host);
      return p;
    }
    if (!server_.bind_to_port(host, port))
      fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port) + " (address in use?)");
    return port;
  }

  /// Serves on the calling thread until stop().
  void serve() { server_.listen_after_bind(); }

  /// Serves on a background thread.
  void start() {
    worker_ = std::thread([this] { serve(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (worker_.joinable()) worker_.join();
  }

 private:
  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      send_json(res, http_status_for(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
    }
  }

  void install_routes() {
    server_.Get("/api/images", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service_.list_images()); });
    });
    server_.Get(R"(/api/images/([^/]+)/file)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto [bytes, mime] = service_.image_file(req.matches[1]);
        res.status = 200;
        res.set_content(std::move(bytes), mime);
      });
    });
    server_.Get(R"(/api/annotations/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service_.annotation(req.matches[1])); });
    });
    server_.Put(R"(/api/annotations/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::exception& e) {
          send_json(res, 422, {{"error", "InvalidArgument"}, {"message", e.what()}});
          return;
        }
        send_json(res, 200, service_.submit(req.matches[1], body));
      });
    });
    server_.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, service_.progress()); });
    });
  }

  ReviewService& service_;
  httplib::Server server_;
  std::thread worker_;
};

}  // namespace odtk
