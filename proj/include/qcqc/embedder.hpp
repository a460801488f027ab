#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qcqc/endpoint.hpp"

namespace qcqc {

/// Text encoder producing unit vectors in the gallery's embedding space.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::vector<float> embed(std::string_view text) const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
};

/// Deterministic offline embedder: hashed bag of lowercase whitespace tokens
/// with +-1 signs, plus a small token-count component, L2-normalized.
/// Throws EmptyText when `text` has no tokens; requires dim >= 2.
std::vector<float> mock_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class MockEmbedder final : public TextEmbedder {
 public:
  MockEmbedder(std::size_t dim, std::uint64_t seed);

  std::vector<float> embed(std::string_view text) const override {
    return mock_embed(text, dim_, seed_);
  }
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "mock"; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Embedder backed by an HTTP endpoint: POST {"text": ...} returning
/// {"embedding": [...]}. The result is checked for dimension and
/// renormalized under the gallery ingestion tolerance.
class HttpEmbedder final : public TextEmbedder {
 public:
  HttpEmbedder(EndpointConfig config, std::size_t dim);

  std::vector<float> embed(std::string_view text) const override;
  std::size_t dim() const override { return dim_; }
  std::string name() const override { return "external"; }

 private:
  EndpointConfig config_;
  std::size_t dim_;
};

}  // namespace qcqc
