#include <algorithm>
#include <cstdlib>

#include <httplib.h>

#include "qcqc/error.hpp"
#include "qcqc/evalharness.hpp"
#include "qcqc/gateway.hpp"
#include "qcqc/quantile.hpp"
#include "qcqc/search.hpp"
#include "qcqc/text.hpp"

namespace qcqc {

using nlohmann::json;

void to_json(json& j, const ApiError& e) {
  j = json{{"code", e.code}, {"message", e.message}, {"http_status", e.http_status}};
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Timeout:
    case ErrorCode::HttpError:
    case ErrorCode::MalformedResponse:
    case ErrorCode::EmbedderFailure:
      return 502;
    case ErrorCode::Io:
    case ErrorCode::FormatError:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::MalformedLine:
    case ErrorCode::RowCountMismatch:
      return 500;
    default:
      return 400;
  }
}

ApiError to_api_error(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return {std::string(error_code_name(err->code())), err->what(), http_status_for(err->code())};
  }
  if (dynamic_cast<const json::exception*>(&e) != nullptr) {
    return {"MalformedRequest", e.what(), 400};
  }
  return {"Internal", e.what(), 500};
}

namespace {

std::optional<std::string> env(const char* name) {
  if (const char* v = std::getenv(name); v && *v) return std::string(v);
  return std::nullopt;
}

template <class T>
T parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    T value{};
    if constexpr (std::is_same_v<T, int>) {
      value = std::stoi(text, &used);
    } else {
      value = static_cast<T>(std::stoull(text, &used));
    }
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad value for ") + what + ": " + text);
  }
}

// ---- request field helpers -------------------------------------------------

const json& require_object(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be an object");
  return j;
}

std::string req_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::string opt_string(const json& j, const char* key, std::string fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) {
    throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::size_t opt_count(const json& j, const char* key, std::size_t fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 1) {
    throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be an integer >= 1");
  }
  return it->get<std::size_t>();
}

std::uint64_t opt_seed(const json& j, std::uint64_t fallback) {
  const auto it = j.find("seed");
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw Error(ErrorCode::InvalidArgument, "'seed' must be a non-negative integer");
  }
  return it->get<std::uint64_t>();
}

// ---- completers --------------------------------------------------------------

// Random completion over the snapshot's shared caption index.
class IndexedRandomCompleter final : public Completer {
 public:
  IndexedRandomCompleter(std::shared_ptr<const Snapshot> snap, std::uint64_t seed)
      : snap_(std::move(snap)), seed_(seed) {}
  std::vector<CompletionCandidate> complete(std::string_view prefix,
                                            const QualityCondition& condition,
                                            std::size_t k) const override {
    std::vector<CompletionCandidate> out;
    for (std::size_t i = 0; i < k; ++i) {
      auto c = complete_random(*snap_->gallery, *snap_->captions, prefix, condition, seed_ + i);
      const bool dup = std::any_of(out.begin(), out.end(),
                                   [&](const CompletionCandidate& o) { return o.text == c.text; });
      if (!dup) out.push_back(std::move(c));
    }
    return out;
  }
  std::string name() const override { return "random"; }
  bool condition_blind() const override { return true; }

 private:
  std::shared_ptr<const Snapshot> snap_;
  std::uint64_t seed_;
};

std::shared_ptr<const Completer> completer_for(const std::shared_ptr<const Snapshot>& snap,
                                               const std::string& method, std::uint64_t seed) {
  if (method == "corpus") {
    if (!snap->corpus) {
      throw Error(ErrorCode::LevelsNotAssigned, "corpus completion needs a levelled gallery");
    }
    return snap->corpus;
  }
  if (method == "prefix" || method == "identity") return std::make_shared<IdentityCompleter>();
  if (method == "random") return std::make_shared<IndexedRandomCompleter>(snap, seed);
  if (method == "external") {
    if (!snap->external) {
      throw Error(ErrorCode::InvalidArgument, "no completion endpoint is configured");
    }
    return snap->external;
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown method '" + method + "' (corpus, prefix, random, external)");
}

QualityCondition read_condition(const json& j, const Gallery& g) {
  QualityCondition c{req_string(j, "rel"), req_string(j, "aes")};
  if (g.has_levels()) {
    if (g.rel_scheme()->index_of(c.rel) == g.rel_scheme()->size()) {
      throw Error(ErrorCode::UnknownLevelLabel, "unknown relevance level '" + c.rel + "'");
    }
    if (g.aes_scheme()->index_of(c.aes) == g.aes_scheme()->size()) {
      throw Error(ErrorCode::UnknownLevelLabel, "unknown aesthetic level '" + c.aes + "'");
    }
  }
  return c;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json level_label(const std::optional<LevelScheme>& scheme, const std::optional<std::size_t>& lvl) {
  if (!scheme || !lvl || *lvl >= scheme->size()) return nullptr;
  return scheme->names[*lvl];
}

json hits_json(const Gallery& g, const std::vector<Hit>& hits) {
  json out = json::array();
  for (const auto& h : hits) {
    const auto& r = g[h.index];
    out.push_back({{"id", r.id},
                   {"score", h.score},
                   {"caption", r.caption},
                   {"aes", optional_number(r.aes_score)},
                   {"rel", optional_number(r.rel_score)},
                   {"rel_level", level_label(g.rel_scheme(), r.rel_level)},
                   {"aes_level", level_label(g.aes_scheme(), r.aes_level)}});
  }
  return out;
}

std::vector<Hit> search_text(const Snapshot& snap, const std::string& text, std::size_t eta) {
  if (split_words(text).empty()) throw Error(ErrorCode::EmptyText, "query text is empty");
  std::vector<float> q;
  try {
    q = snap.embedder->embed(text);
  } catch (const std::exception& e) {
    throw EmbedderFailureError(text, e.what());
  }
  return search_one(q, *snap.gallery, eta);
}

json histogram_or_null(const Gallery& g, bool rel_axis, std::size_t bins) {
  for (const auto& r : g.records()) {
    if (rel_axis ? r.rel_score.has_value() : r.aes_score.has_value()) {
      return json(score_histogram(g, rel_axis, bins));
    }
  }
  return nullptr;
}

json level_counts_json(const Gallery& g, bool rel_axis) {
  const auto& scheme = rel_axis ? g.rel_scheme() : g.aes_scheme();
  if (!scheme) return nullptr;
  const auto counts = level_counts(g, rel_axis);
  json out = json::array();
  for (std::size_t i = 0; i < scheme->size(); ++i) {
    out.push_back({{"label", scheme->names[i]}, {"count", i < counts.size() ? counts[i] : 0}});
  }
  return out;
}

std::pair<std::string, std::string> split_target(std::string_view target) {
  const auto q = target.find('?');
  if (q == std::string_view::npos) return {std::string(target), {}};
  return {std::string(target.substr(0, q)), std::string(target.substr(q + 1))};
}

std::optional<std::string> query_param(const std::string& query, std::string_view key) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    const auto amp = query.find('&', pos);
    const auto part = query.substr(pos, amp == std::string::npos ? std::string::npos : amp - pos);
    const auto eq = part.find('=');
    if (part.substr(0, eq) == key) {
      return eq == std::string::npos ? std::string() : part.substr(eq + 1);
    }
    if (amp == std::string::npos) break;
    pos = amp + 1;
  }
  return std::nullopt;
}

}  // namespace

ServiceOptions options_from_config(const KeyValueConfig& config) {
  ServiceOptions o;
  auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = config.find(key);
    if (it == config.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("host")) o.host = *v;
  if (auto v = get("port")) o.port = parse_number<int>(*v, "port");
  if (auto v = get("gallery")) o.gallery_dir = *v;
  if (auto v = get("static_dir")) o.static_dir = *v;
  if (auto v = get("embedder")) o.embedder = *v;
  if (auto v = get("embed_seed")) o.embed_seed = parse_number<std::uint64_t>(*v, "embed_seed");
  if (auto v = get("eval_workers")) {
    o.eval_workers = std::max<std::size_t>(1, parse_number<std::size_t>(*v, "eval_workers"));
  }
  if (auto v = get("admin_reload")) o.admin_reload = *v == "1" || *v == "true";
  if (auto v = env("QCQC_PORT")) o.port = parse_number<int>(*v, "QCQC_PORT");
  o.completion_endpoint =
      endpoint_from_config(config, "completion", "QCQC_ENDPOINT_URL", "QCQC_API_KEY");
  o.embedding_endpoint =
      endpoint_from_config(config, "embedding", "QCQC_EMBEDDING_URL", "QCQC_API_KEY");
  if (o.port < 0 || o.port > 65535) {
    throw Error(ErrorCode::InvalidArgument, "port must lie in [0, 65535]");
  }
  return o;
}

std::shared_ptr<const TextEmbedder> make_embedder(const ServiceOptions& options, std::size_t dim) {
  if (options.embedder == "mock") return std::make_shared<MockEmbedder>(dim, options.embed_seed);
  if (options.embedder == "external") {
    return std::make_shared<HttpEmbedder>(options.embedding_endpoint, dim);
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown embedder '" + options.embedder + "' (mock, external)");
}

std::shared_ptr<const Snapshot> make_snapshot(Gallery gallery, const ServiceOptions& options) {
  auto snap = std::make_shared<Snapshot>();
  snap->gallery = std::make_shared<const Gallery>(std::move(gallery));
  if (snap->gallery->empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no records");
  snap->embedder = make_embedder(options, snap->gallery->dim());
  snap->captions = std::make_shared<const CaptionIndex>(*snap->gallery);
  if (snap->gallery->has_levels()) {
    snap->corpus = std::make_shared<CorpusCompleter>(snap->gallery);
  }
  if (!options.completion_endpoint.url.empty()) {
    const auto& g = *snap->gallery;
    snap->external = std::make_shared<ExternalCompleter>(
        options.completion_endpoint,
        g.rel_scheme() ? g.rel_scheme()->names : three_level_names(),
        g.aes_scheme() ? g.aes_scheme()->names : three_level_names());
  }
  return snap;
}

Service::Service(std::shared_ptr<const Snapshot> snapshot, ServiceOptions options)
    : snapshot_(std::move(snapshot)), options_(std::move(options)) {
  if (!snapshot_) throw Error(ErrorCode::InvalidArgument, "service needs a snapshot");
}

std::shared_ptr<const Snapshot> Service::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

void Service::swap(std::shared_ptr<const Snapshot> next) {
  if (!next) throw Error(ErrorCode::InvalidArgument, "cannot swap in an empty snapshot");
  std::lock_guard lock(mu_);
  snapshot_ = std::move(next);
}

json Service::health() const {
  const auto snap = snapshot();
  const auto& g = *snap->gallery;
  return {{"status", "ok"},
          {"gallery_n", g.size()},
          {"dim", g.dim()},
          {"levels", g.has_levels() ? g.rel_scheme()->size() : 0},
          {"embedder", snap->embedder->name()}};
}

json Service::scheme() const {
  const auto snap = snapshot();
  const auto& g = *snap->gallery;
  return {{"rel", g.rel_scheme() ? json(*g.rel_scheme()) : json(nullptr)},
          {"aes", g.aes_scheme() ? json(*g.aes_scheme()) : json(nullptr)}};
}

json Service::complete(const json& request) const {
  require_object(request);
  const auto snap = snapshot();
  const auto prefix = req_string(request, "prefix");
  const auto cond = read_condition(request, *snap->gallery);
  const auto method = opt_string(request, "method", "corpus");
  const auto k = opt_count(request, "k", 5);
  const auto completer = completer_for(snap, method, opt_seed(request, 0));
  return {{"candidates", completer->complete(prefix, cond, k)}};
}

json Service::retrieve(const json& request) const {
  require_object(request);
  const auto snap = snapshot();
  const auto text = req_string(request, "query_text");
  const auto eta = opt_count(request, "eta", 1);
  return {{"hits", hits_json(*snap->gallery, search_text(*snap, text, eta))}};
}

json Service::pipeline(const json& request) const {
  require_object(request);
  const auto snap = snapshot();
  const auto prefix = req_string(request, "prefix");
  const auto cond = read_condition(request, *snap->gallery);
  const auto method = opt_string(request, "method", "corpus");
  const auto eta = opt_count(request, "eta", 1);
  const auto k = opt_count(request, "k", 3);
  const auto completer = completer_for(snap, method, opt_seed(request, 0));
  const auto candidates = completer->complete(prefix, cond, k);
  json per = json::array();
  for (const auto& c : candidates) per.push_back(hits_json(*snap->gallery, search_text(*snap, c.text, eta)));
  return {{"candidates", candidates}, {"hits_per_candidate", std::move(per)}};
}

json Service::eval_grid(const json& request) const {
  require_object(request);
  const auto snap = snapshot();
  const json& cfg = request.contains("config") ? require_object(request.at("config")) : request;

  EvalConfig ec;
  ec.eta = opt_count(cfg, "eta", 1);
  ec.seed = opt_seed(cfg, 0);
  ec.workers = options_.eval_workers;
  if (auto it = cfg.find("prefixes"); it != cfg.end() && !it->is_null()) {
    ec.prefixes = it->get<std::vector<std::string>>();
    if (ec.prefixes.empty()) throw Error(ErrorCode::InvalidArgument, "'prefixes' is empty");
  }
  if (auto it = cfg.find("conditions"); it != cfg.end() && !it->is_null()) {
    for (const auto& c : *it) ec.conditions.push_back(read_condition(c, *snap->gallery));
  }
  const auto method = opt_string(cfg, "method", "corpus");
  const auto completer = completer_for(snap, method, ec.seed);
  return json(run_grid(ec, *snap->gallery, *completer, *snap->embedder));
}

json Service::gallery_stats(std::size_t bins) const {
  if (bins == 0 || bins > 1000) throw Error(ErrorCode::InvalidArgument, "bins must lie in [1, 1000]");
  const auto snap = snapshot();
  const auto& g = *snap->gallery;
  std::size_t scored = 0;
  for (const auto& r : g.records()) scored += r.has_scores() ? 1 : 0;
  return {{"gallery_n", g.size()},
          {"scored", scored},
          {"bins", bins},
          {"rel", histogram_or_null(g, true, bins)},
          {"aes", histogram_or_null(g, false, bins)},
          {"level_counts", {{"rel", level_counts_json(g, true)}, {"aes", level_counts_json(g, false)}}}};
}

json Service::reload(const json& request) {
  require_object(request);
  std::filesystem::path dir = opt_string(request, "gallery_dir", options_.gallery_dir.string());
  if (dir.empty()) throw Error(ErrorCode::InvalidArgument, "no gallery directory to load");
  swap(make_snapshot(load(dir), options_));
  return health();
}

ApiResponse Service::handle(std::string_view method, std::string_view target,
                            std::string_view body) {
  const auto [path, query] = split_target(target);
  const bool get = method == "GET";
  const bool post = method == "POST";
  try {
    auto parsed = [&]() -> json {
      if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return json::object();
      return json::parse(body);
    };
    auto expect = [&](bool want_post) {
      if (want_post ? !post : !get) {
        throw ApiError{"MethodNotAllowed", std::string(method) + " not allowed on " + path, 405};
      }
    };
    if (path == "/api/health") return expect(false), ApiResponse{200, health()};
    if (path == "/api/scheme") return expect(false), ApiResponse{200, scheme()};
    if (path == "/api/gallery/stats") {
      expect(false);
      std::size_t bins = 20;
      if (auto b = query_param(query, "bins")) bins = parse_number<std::size_t>(*b, "bins");
      return {200, gallery_stats(bins)};
    }
    if (path == "/api/complete") return expect(true), ApiResponse{200, complete(parsed())};
    if (path == "/api/retrieve") return expect(true), ApiResponse{200, retrieve(parsed())};
    if (path == "/api/pipeline") return expect(true), ApiResponse{200, pipeline(parsed())};
    if (path == "/api/eval/grid") return expect(true), ApiResponse{200, eval_grid(parsed())};
    if (path == "/api/admin/reload" && options_.admin_reload) {
      expect(true);
      return {200, reload(parsed())};
    }
    const ApiError nf{"NotFound", "no route for " + path, 404};
    return {404, nf};
  } catch (const ApiError& e) {
    return {e.http_status, e};
  } catch (const std::exception& e) {
    const auto err = to_api_error(e);
    return {err.http_status, err};
  }
}

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    auto target = req.path;
    if (!req.params.empty()) {
      target += '?';
      bool first = true;
      for (const auto& [k, v] : req.params) {
        if (!first) target += '&';
        first = false;
        target += k + "=" + v;
      }
    }
    const auto out = impl_->service.handle(req.method, target, req.body);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  };
  srv.Get(R"(/api/.*)", dispatch);
  srv.Post(R"(/api/.*)", dispatch);
  srv.Put(R"(/api/.*)", dispatch);
  srv.Delete(R"(/api/.*)", dispatch);
  const auto& static_dir = service.options().static_dir;
  if (!static_dir.empty() && std::filesystem::is_directory(static_dir)) {
    srv.set_mount_point("/", static_dir.string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace qcqc
