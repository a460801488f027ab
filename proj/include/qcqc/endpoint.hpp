#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace qcqc {

/// Connection settings for an external JSON-over-HTTP service.
struct EndpointConfig {
  std::string url;  // http://host:port/path
  std::string api_key_header = "Authorization";
  std::string api_key;
  double timeout_seconds = 30.0;
  std::size_t max_in_flight = 4;
};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always starts with '/'
};

/// Splits an http(s) URL into origin and path. Throws InvalidArgument.
SplitUrl split_url(std::string_view url);

using KeyValueConfig = std::map<std::string, std::string, std::less<>>;

/// Parses `key = value` lines; '#' starts a comment. Throws Io.
KeyValueConfig read_config_file(const std::filesystem::path& path);

/// Builds an endpoint from config keys `<prefix>_url`, `<prefix>_api_key`,
/// `<prefix>_api_key_header`, `<prefix>_timeout`, `<prefix>_max_in_flight`,
/// then applies the environment overrides named by url_env / key_env when
/// set.
EndpointConfig endpoint_from_config(const KeyValueConfig& config, std::string_view prefix,
                                    const char* url_env, const char* key_env);

/// POSTs `body` and returns the parsed JSON reply. Throws Timeout,
/// HttpStatusError (status 0 when the connection failed), or
/// MalformedResponse.
nlohmann::json post_json(const EndpointConfig& endpoint, const nlohmann::json& body);

}  // namespace qcqc
