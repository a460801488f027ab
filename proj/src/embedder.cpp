#include "qcqc/embedder.hpp"

#include <cmath>

#include "qcqc/error.hpp"
#include "qcqc/gallery.hpp"
#include "qcqc/text.hpp"

namespace qcqc {

namespace {

constexpr double kLengthWeight = 0.1;
constexpr std::uint64_t kLengthSalt = 0x6c656e677468ULL;  // "length"

}  // namespace

std::vector<float> mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "mock embedding needs dim >= 2");
  const auto tokens = split_words(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");

  std::vector<double> acc(dim, 0.0);
  const std::uint64_t salt = mix64(seed);
  for (const auto& token : tokens) {
    const std::uint64_t h = mix64(fnv1a64(to_lower_ascii(token)) ^ salt);
    const double sign = (h >> 63) ? 1.0 : -1.0;
    acc[h % dim] += sign;
  }
  const std::uint64_t length_bin = mix64(kLengthSalt ^ salt) % dim;
  acc[length_bin] += kLengthWeight * std::log1p(static_cast<double>(tokens.size()));

  double norm = 0.0;
  for (double x : acc) norm += x * x;
  norm = std::sqrt(norm);
  std::vector<float> out(dim, 0.0f);
  if (norm == 0.0) {
    out[length_bin] = 1.0f;
    return out;
  }
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "mock embedding needs dim >= 2");
}

HttpEmbedder::HttpEmbedder(EndpointConfig config, std::size_t dim)
    : config_(std::move(config)), dim_(dim) {
  if (config_.url.empty()) {
    throw Error(ErrorCode::InvalidArgument, "external embedder needs an endpoint URL");
  }
}

std::vector<float> HttpEmbedder::embed(std::string_view text) const {
  if (split_words(text).empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
  const auto reply = post_json(config_, {{"text", std::string(text)}});
  auto it = reply.find("embedding");
  if (it == reply.end() || !it->is_array()) {
    throw Error(ErrorCode::MalformedResponse, "embedder reply lacks an 'embedding' array");
  }
  std::vector<float> v;
  v.reserve(it->size());
  for (const auto& x : *it) {
    if (!x.is_number()) throw Error(ErrorCode::MalformedResponse, "non-numeric embedding value");
    v.push_back(x.get<float>());
  }
  if (v.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch,
                "embedder returned dimension " + std::to_string(v.size()) + ", expected " +
                    std::to_string(dim_));
  }
  normalize_embedding(v, "<query>");
  return v;
}

}  // namespace qcqc
