#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcqc/endpoint.hpp"
#include "qcqc/gallery.hpp"

namespace qcqc {

/// A (relevance level, aesthetic level) pair, by label.
struct QualityCondition {
  std::string rel;
  std::string aes;

  bool operator==(const QualityCondition&) const = default;
};

enum class CompletionSource { Corpus, Identity, Random, External };

std::string_view to_string(CompletionSource source);

struct CompletionCandidate {
  std::string text;    // prefix + suffix
  std::string suffix;  // empty for identity
  CompletionSource source = CompletionSource::Identity;
  std::optional<std::string> matched_record_id;
  QualityCondition condition;
  bool exact_condition_match = false;

  bool operator==(const CompletionCandidate&) const = default;
};

void to_json(nlohmann::json& j, const QualityCondition& c);
void from_json(const nlohmann::json& j, QualityCondition& c);
void to_json(nlohmann::json& j, const CompletionCandidate& c);

/// "Relevance: <rel>, Aesthetic: <aes>, Query: <prefix>". Labels must be in
/// the given name lists (UnknownLevelLabel); prefix must be non-blank.
std::string build_instruction(const QualityCondition& condition, std::string_view prefix,
                              std::span<const std::string> rel_names,
                              std::span<const std::string> aes_names);

/// Suffix left after `prefix` in `caption` under article-insensitive,
/// token-boundary matching, or nullopt when the caption does not start
/// with the prefix. The suffix is empty or begins with a space.
std::optional<std::string> match_prefix(std::string_view caption, std::string_view prefix);

/// Captions tokenized once for repeated prefix matching. Bound to the
/// gallery it was built from.
class CaptionIndex {
 public:
  explicit CaptionIndex(const Gallery& gallery);

  /// (record index, suffix) for every caption match_prefix accepts, in
  /// gallery order.
  std::vector<std::pair<std::size_t, std::string>> matches(std::string_view prefix) const;

 private:
  struct Tokens {
    std::vector<std::string> words;
    std::vector<std::string> keys;  // first match key per word, empty if none
    std::vector<bool> article;
  };
  std::vector<Tokens> captions_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_first_key_;
};

/// Conditioned caption lookup over a levelled gallery: captions starting
/// with `prefix` whose levels equal `condition`, ordered by rel score desc
/// then id asc, at most k. With no exact match, falls back to the nearest
/// populated condition (L1 over level indices; ties prefer the higher rel
/// level) and flags exact_condition_match = false.
std::vector<CompletionCandidate> complete_corpus(const Gallery& gallery, std::string_view prefix,
                                                 const QualityCondition& condition,
                                                 std::size_t k);
std::vector<CompletionCandidate> complete_corpus(const Gallery& gallery, const CaptionIndex& index,
                                                 std::string_view prefix,
                                                 const QualityCondition& condition,
                                                 std::size_t k);

/// The prefix itself, suffix empty. Throws EmptyPrefix.
CompletionCandidate complete_identity(std::string_view prefix, const QualityCondition& condition);

/// Appends the suffix of a caption drawn uniformly from the prefix-matching
/// captions, ignoring the condition. Deterministic in (seed, prefix).
CompletionCandidate complete_random(const Gallery& gallery, std::string_view prefix,
                                    const QualityCondition& condition, std::uint64_t seed);
CompletionCandidate complete_random(const Gallery& gallery, const CaptionIndex& index,
                                    std::string_view prefix, const QualityCondition& condition,
                                    std::uint64_t seed);

/// Requests k completions from an external endpoint:
/// POST {instruction, prefix, rel, aes, n} -> {completions: [string]}.
/// Replies lacking the prefix get it prepended.
std::vector<CompletionCandidate> complete_external(const EndpointConfig& endpoint,
                                                   std::string_view prefix,
                                                   const QualityCondition& condition,
                                                   std::size_t k,
                                                   std::span<const std::string> rel_names,
                                                   std::span<const std::string> aes_names);

/// Common interface for the harness and the gateway.
class Completer {
 public:
  virtual ~Completer() = default;
  virtual std::vector<CompletionCandidate> complete(std::string_view prefix,
                                                    const QualityCondition& condition,
                                                    std::size_t k) const = 0;
  virtual std::string name() const = 0;
  /// True when output does not depend on the condition.
  virtual bool condition_blind() const = 0;
};

class CorpusCompleter final : public Completer {
 public:
  explicit CorpusCompleter(std::shared_ptr<const Gallery> gallery);
  std::vector<CompletionCandidate> complete(std::string_view prefix,
                                            const QualityCondition& condition,
                                            std::size_t k) const override {
    return complete_corpus(*gallery_, index_, prefix, condition, k);
  }
  std::string name() const override { return "corpus"; }
  bool condition_blind() const override { return false; }

 private:
  std::shared_ptr<const Gallery> gallery_;
  CaptionIndex index_;
};

class IdentityCompleter final : public Completer {
 public:
  std::vector<CompletionCandidate> complete(std::string_view prefix,
                                            const QualityCondition& condition,
                                            std::size_t) const override {
    return {complete_identity(prefix, condition)};
  }
  std::string name() const override { return "prefix"; }
  bool condition_blind() const override { return true; }
};

class RandomCompleter final : public Completer {
 public:
  RandomCompleter(std::shared_ptr<const Gallery> gallery, std::uint64_t seed);
  std::vector<CompletionCandidate> complete(std::string_view prefix,
                                            const QualityCondition& condition,
                                            std::size_t k) const override;
  std::string name() const override { return "random"; }
  bool condition_blind() const override { return true; }

 private:
  std::shared_ptr<const Gallery> gallery_;
  CaptionIndex index_;
  std::uint64_t seed_;
};

/// Thread-safe; at most endpoint.max_in_flight requests run concurrently.
class ExternalCompleter final : public Completer {
 public:
  ExternalCompleter(EndpointConfig endpoint, std::vector<std::string> rel_names,
                    std::vector<std::string> aes_names);
  ~ExternalCompleter() override;
  std::vector<CompletionCandidate> complete(std::string_view prefix,
                                            const QualityCondition& condition,
                                            std::size_t k) const override;
  std::string name() const override { return "external"; }
  bool condition_blind() const override { return false; }

 private:
  struct Limiter;
  EndpointConfig endpoint_;
  std::vector<std::string> rel_names_;
  std::vector<std::string> aes_names_;
  std::unique_ptr<Limiter> limiter_;
};

}  // namespace qcqc
