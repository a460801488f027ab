#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "qcqc/completer.hpp"
#include "qcqc/embedder.hpp"
#include "qcqc/endpoint.hpp"
#include "qcqc/error.hpp"
#include "qcqc/gallery.hpp"
#include "qcqc/parallel.hpp"

namespace qcqc {

/// Error payload of every failed API call.
struct ApiError {
  std::string code;
  std::string message;
  int http_status = 500;
};

void to_json(nlohmann::json& j, const ApiError& e);

/// 400 for validation, 502 for external endpoint failures, 500 otherwise.
int http_status_for(ErrorCode code);
ApiError to_api_error(const std::exception& e);

/// Settings shared by the CLI and the HTTP service.
struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8787;
  std::filesystem::path gallery_dir;
  std::filesystem::path static_dir;  // explorer assets mounted at "/"
  std::string embedder = "mock";     // mock | external
  std::uint64_t embed_seed = 0;
  EndpointConfig completion_endpoint;
  EndpointConfig embedding_endpoint;
  std::size_t eval_workers = default_workers();
  bool admin_reload = false;
};

/// Reads --config style key=value settings plus the QCQC_PORT,
/// QCQC_ENDPOINT_URL, QCQC_API_KEY and QCQC_EMBEDDING_URL overrides.
ServiceOptions options_from_config(const KeyValueConfig& config);

/// Embedder named by the options, sized to the gallery.
std::shared_ptr<const TextEmbedder> make_embedder(const ServiceOptions& options, std::size_t dim);

/// One immutable view of the service state. Requests hold a shared_ptr
/// for their whole lifetime, so a swap never tears a request.
struct Snapshot {
  std::shared_ptr<const Gallery> gallery;
  std::shared_ptr<const TextEmbedder> embedder;
  std::shared_ptr<const Completer> corpus;  // null when the gallery has no levels
  std::shared_ptr<const Completer> external;  // null without a completion endpoint
  std::shared_ptr<const CaptionIndex> captions;
};

std::shared_ptr<const Snapshot> make_snapshot(Gallery gallery, const ServiceOptions& options);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// JSON API over a swappable snapshot. Handlers are plain functions of the
/// request body so they can be exercised without a socket.
class Service {
 public:
  Service(std::shared_ptr<const Snapshot> snapshot, ServiceOptions options);

  std::shared_ptr<const Snapshot> snapshot() const;
  void swap(std::shared_ptr<const Snapshot> next);
  const ServiceOptions& options() const noexcept { return options_; }

  /// Routes method + path (query string allowed) to a handler; unknown
  /// routes give 404, wrong methods 405, handler errors an ApiError.
  ApiResponse handle(std::string_view method, std::string_view target, std::string_view body);

  nlohmann::json health() const;
  nlohmann::json scheme() const;
  nlohmann::json complete(const nlohmann::json& request) const;
  nlohmann::json retrieve(const nlohmann::json& request) const;
  nlohmann::json pipeline(const nlohmann::json& request) const;
  nlohmann::json eval_grid(const nlohmann::json& request) const;
  nlohmann::json gallery_stats(std::size_t bins) const;
  /// Loads {gallery_dir} (default: the configured one) and swaps it in.
  nlohmann::json reload(const nlohmann::json& request);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  ServiceOptions options_;
};

/// Blocking HTTP front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// CLI entry point. Returns 0 on success, 1 on validation or usage errors,
/// 2 on I/O or external endpoint failures.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qcqc
