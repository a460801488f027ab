#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qcqc::testing {

/// Loads api/shapes.json from the source tree.
const nlohmann::json& api_shapes();

/// Validates `value` against the response shape registered for `endpoint`
/// (e.g. "GET /api/health", or "error"). Returns one message per mismatch.
std::vector<std::string> validate_response(const std::string& endpoint,
                                           const nlohmann::json& value);

/// Validates against an inline schema; `$ref` resolves into `definitions`.
std::vector<std::string> validate(const nlohmann::json& value, const nlohmann::json& schema,
                                  const nlohmann::json& definitions,
                                  const std::string& path = "$");

}  // namespace qcqc::testing
