#include "qcqc/endpoint.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "qcqc/error.hpp"

namespace qcqc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

const std::string* lookup(const KeyValueConfig& config, const std::string& key) {
  auto it = config.find(key);
  return it == config.end() ? nullptr : &it->second;
}

}  // namespace

SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "URL without scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidArgument, "unsupported URL scheme: " + std::string(url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

KeyValueConfig read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  KeyValueConfig config;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto key = trim(std::string_view(line).substr(0, eq));
    if (key.empty()) continue;
    config[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return config;
}

EndpointConfig endpoint_from_config(const KeyValueConfig& config, std::string_view prefix,
                                    const char* url_env, const char* key_env) {
  EndpointConfig endpoint;
  const std::string p(prefix);
  if (auto v = lookup(config, p + "_url")) endpoint.url = *v;
  if (auto v = lookup(config, p + "_api_key")) endpoint.api_key = *v;
  if (auto v = lookup(config, p + "_api_key_header")) endpoint.api_key_header = *v;
  try {
    if (auto v = lookup(config, p + "_timeout")) endpoint.timeout_seconds = std::stod(*v);
    if (auto v = lookup(config, p + "_max_in_flight")) {
      endpoint.max_in_flight = std::stoul(*v);
    }
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad numeric value for " + p + " settings");
  }
  if (url_env) {
    if (const char* v = std::getenv(url_env); v && *v) endpoint.url = v;
  }
  if (key_env) {
    if (const char* v = std::getenv(key_env); v && *v) endpoint.api_key = v;
  }
  if (endpoint.max_in_flight == 0) endpoint.max_in_flight = 1;
  return endpoint;
}

nlohmann::json post_json(const EndpointConfig& endpoint, const nlohmann::json& body) {
  const auto [origin, path] = split_url(endpoint.url);
  httplib::Client client(origin);

  const double seconds = std::max(endpoint.timeout_seconds, 0.001);
  const auto whole = static_cast<time_t>(std::floor(seconds));
  const auto usec = static_cast<time_t>((seconds - std::floor(seconds)) * 1e6);
  client.set_connection_timeout(whole, usec);
  client.set_read_timeout(whole, usec);
  client.set_write_timeout(whole, usec);

  httplib::Headers headers;
  if (!endpoint.api_key.empty()) headers.emplace(endpoint.api_key_header, endpoint.api_key);

  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= 0.9 * seconds)) {
      throw Error(ErrorCode::Timeout, "request to " + endpoint.url + " timed out");
    }
    throw HttpStatusError(0, "request to " + endpoint.url +
                                 " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw HttpStatusError(res->status, "endpoint " + endpoint.url + " returned HTTP " +
                                           std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::MalformedResponse,
                "endpoint " + endpoint.url + " returned invalid JSON: " + e.what());
  }
}

}  // namespace qcqc
