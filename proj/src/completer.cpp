#include "qcqc/completer.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <random>
#include <set>

#include "qcqc/error.hpp"
#include "qcqc/text.hpp"

namespace qcqc {

using nlohmann::json;

namespace {

std::string canonical_prefix(std::string_view prefix) {
  auto canonical = collapse_whitespace(prefix);
  if (canonical.empty()) throw Error(ErrorCode::EmptyPrefix, "query prefix is empty");
  return canonical;
}

std::size_t label_index(std::span<const std::string> names, const std::string& label,
                        const char* axis) {
  auto it = std::find(names.begin(), names.end(), label);
  if (it == names.end()) {
    throw Error(ErrorCode::UnknownLevelLabel,
                std::string("unknown ") + axis + " level '" + label + "'");
  }
  return static_cast<std::size_t>(it - names.begin());
}

std::size_t level_distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// Joins the caption's remaining words; empty or starting with a space.
std::string suffix_from(std::span<const std::string> words, std::size_t first) {
  std::string out;
  for (std::size_t i = first; i < words.size(); ++i) {
    out += ' ';
    out += words[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string_view to_string(CompletionSource source) {
  switch (source) {
    case CompletionSource::Corpus: return "corpus";
    case CompletionSource::Identity: return "identity";
    case CompletionSource::Random: return "random";
    case CompletionSource::External: return "external";
  }
  return "unknown";
}

void to_json(json& j, const QualityCondition& c) { j = json{{"rel", c.rel}, {"aes", c.aes}}; }

void from_json(const json& j, QualityCondition& c) {
  j.at("rel").get_to(c.rel);
  j.at("aes").get_to(c.aes);
}

void to_json(json& j, const CompletionCandidate& c) {
  j = json{{"text", c.text},
           {"suffix", c.suffix},
           {"source", std::string(to_string(c.source))},
           {"matched_record_id", c.matched_record_id ? json(*c.matched_record_id) : json()},
           {"condition", c.condition},
           {"exact_condition_match", c.exact_condition_match}};
}

std::string build_instruction(const QualityCondition& condition, std::string_view prefix,
                              std::span<const std::string> rel_names,
                              std::span<const std::string> aes_names) {
  label_index(rel_names, condition.rel, "relevance");
  label_index(aes_names, condition.aes, "aesthetic");
  const auto query = canonical_prefix(prefix);
  return "Relevance: " + condition.rel + ", Aesthetic: " + condition.aes + ", Query: " + query;
}

namespace {

struct Tokenized {
  std::vector<std::string> words;
  std::vector<std::string> keys;
  std::vector<bool> article;
};

Tokenized tokenize(std::string_view caption) {
  Tokenized t;
  t.words = split_words(caption);
  for (const auto& w : t.words) {
    const auto keys = match_keys(w);
    const auto raw = to_lower_ascii(w);
    t.keys.push_back(keys.empty() ? std::string() : keys.front());
    t.article.push_back(keys.empty() && (raw == "a" || raw == "an"));
  }
  return t;
}

// Walks caption words, skipping punctuation-only ones and one leading
// article, comparing keys against the prefix keys in order. Returns the
// index of the first word after the match.
std::optional<std::size_t> match_tokens(const std::vector<std::string>& keys,
                                        const std::vector<bool>& article,
                                        const std::vector<std::string>& wanted) {
  if (wanted.empty()) return std::nullopt;
  std::size_t matched = 0;
  bool article_skipped = false;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (keys[i].empty()) {
      if (article[i] && matched == 0 && !article_skipped) {
        article_skipped = true;
        continue;
      }
      if (!article[i]) continue;
      return std::nullopt;
    }
    if (keys[i] != wanted[matched]) return std::nullopt;
    article_skipped = true;
    if (++matched == wanted.size()) return i + 1;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> match_prefix(std::string_view caption, std::string_view prefix) {
  const auto wanted = match_keys(prefix);
  if (wanted.empty()) return std::nullopt;
  const auto t = tokenize(caption);
  if (auto end = match_tokens(t.keys, t.article, wanted)) return suffix_from(t.words, *end);
  return std::nullopt;
}

CaptionIndex::CaptionIndex(const Gallery& gallery) {
  captions_.reserve(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    auto t = tokenize(gallery[i].caption);
    for (const auto& k : t.keys) {
      if (k.empty()) continue;
      by_first_key_[k].push_back(i);
      break;
    }
    captions_.push_back({std::move(t.words), std::move(t.keys), std::move(t.article)});
  }
}

std::vector<std::pair<std::size_t, std::string>> CaptionIndex::matches(
    std::string_view prefix) const {
  std::vector<std::pair<std::size_t, std::string>> out;
  const auto wanted = match_keys(prefix);
  if (wanted.empty()) return out;
  const auto it = by_first_key_.find(wanted.front());
  if (it == by_first_key_.end()) return out;
  for (std::size_t i : it->second) {
    const auto& c = captions_[i];
    if (auto end = match_tokens(c.keys, c.article, wanted)) {
      out.emplace_back(i, suffix_from(c.words, *end));
    }
  }
  return out;
}

std::vector<CompletionCandidate> complete_corpus(const Gallery& gallery, std::string_view prefix,
                                                 const QualityCondition& condition,
                                                 std::size_t k) {
  return complete_corpus(gallery, CaptionIndex(gallery), prefix, condition, k);
}

std::vector<CompletionCandidate> complete_corpus(const Gallery& gallery, const CaptionIndex& index,
                                                 std::string_view prefix,
                                                 const QualityCondition& condition,
                                                 std::size_t k) {
  if (!gallery.has_levels()) {
    throw Error(ErrorCode::LevelsNotAssigned, "corpus completion needs assigned levels");
  }
  const auto query = canonical_prefix(prefix);
  const std::size_t want_rel = label_index(gallery.rel_scheme()->names, condition.rel, "relevance");
  const std::size_t want_aes = label_index(gallery.aes_scheme()->names, condition.aes, "aesthetic");
  if (k == 0) return {};

  struct Match {
    std::size_t index;
    std::string suffix;
  };
  std::vector<Match> matches;
  for (auto& [i, suffix] : index.matches(query)) {
    const auto& r = gallery[i];
    if (!r.has_levels() || !r.has_scores()) continue;
    matches.push_back({i, std::move(suffix)});
  }
  if (matches.empty()) return {};

  auto at_cell = [&](std::size_t rel, std::size_t aes) {
    std::vector<Match> cell;
    for (const auto& m : matches) {
      const auto& r = gallery[m.index];
      if (*r.rel_level == rel && *r.aes_level == aes) cell.push_back(m);
    }
    return cell;
  };

  bool exact = true;
  auto selected = at_cell(want_rel, want_aes);
  if (selected.empty()) {
    exact = false;
    // Nearest populated cell: L1 distance, then higher rel, then higher aes.
    const auto& first = gallery[matches.front().index];
    std::size_t best_rel = *first.rel_level;
    std::size_t best_aes = *first.aes_level;
    auto better = [&](std::size_t rel, std::size_t aes) {
      const auto d = level_distance(rel, want_rel) + level_distance(aes, want_aes);
      const auto best_d = level_distance(best_rel, want_rel) + level_distance(best_aes, want_aes);
      if (d != best_d) return d < best_d;
      if (rel != best_rel) return rel > best_rel;
      return aes > best_aes;
    };
    for (const auto& m : matches) {
      const auto& r = gallery[m.index];
      if (better(*r.rel_level, *r.aes_level)) {
        best_rel = *r.rel_level;
        best_aes = *r.aes_level;
      }
    }
    selected = at_cell(best_rel, best_aes);
  }

  std::sort(selected.begin(), selected.end(), [&](const Match& a, const Match& b) {
    const auto& ra = gallery[a.index];
    const auto& rb = gallery[b.index];
    if (*ra.rel_score != *rb.rel_score) return *ra.rel_score > *rb.rel_score;
    return ra.id < rb.id;
  });

  std::vector<CompletionCandidate> out;
  std::set<std::string> seen;
  for (const auto& m : selected) {
    if (out.size() == k) break;
    auto text = query + m.suffix;
    if (!seen.insert(text).second) continue;
    out.push_back({std::move(text), m.suffix, CompletionSource::Corpus, gallery[m.index].id,
                   condition, exact});
  }
  return out;
}

CompletionCandidate complete_identity(std::string_view prefix, const QualityCondition& condition) {
  return {canonical_prefix(prefix), "", CompletionSource::Identity, std::nullopt, condition, false};
}

CompletionCandidate complete_random(const Gallery& gallery, std::string_view prefix,
                                    const QualityCondition& condition, std::uint64_t seed) {
  return complete_random(gallery, CaptionIndex(gallery), prefix, condition, seed);
}

CompletionCandidate complete_random(const Gallery& gallery, const CaptionIndex& index,
                                    std::string_view prefix, const QualityCondition& condition,
                                    std::uint64_t seed) {
  if (gallery.empty()) throw Error(ErrorCode::EmptyGallery, "random completion over empty gallery");
  const auto query = canonical_prefix(prefix);
  const auto pool = index.matches(query);

  CompletionCandidate c{query, "", CompletionSource::Random, std::nullopt, condition, false};
  if (pool.empty()) return c;
  std::mt19937_64 rng(mix64(seed ^ fnv1a64(to_lower_ascii(query))));
  const auto& [record, suffix] = pool[rng() % pool.size()];
  c.text = query + suffix;
  c.suffix = suffix;
  c.matched_record_id = gallery[record].id;
  return c;
}

std::vector<CompletionCandidate> complete_external(const EndpointConfig& endpoint,
                                                   std::string_view prefix,
                                                   const QualityCondition& condition,
                                                   std::size_t k,
                                                   std::span<const std::string> rel_names,
                                                   std::span<const std::string> aes_names) {
  const auto instruction = build_instruction(condition, prefix, rel_names, aes_names);
  const auto query = canonical_prefix(prefix);
  if (k == 0) return {};

  const json request{{"instruction", instruction},
                     {"prefix", query},
                     {"rel", condition.rel},
                     {"aes", condition.aes},
                     {"n", k}};
  const json reply = post_json(endpoint, request);
  auto it = reply.find("completions");
  if (!reply.is_object() || it == reply.end() || !it->is_array()) {
    throw Error(ErrorCode::MalformedResponse, "reply lacks a 'completions' array");
  }

  std::vector<CompletionCandidate> out;
  std::set<std::string> seen;
  for (const auto& item : *it) {
    if (!item.is_string()) {
      throw Error(ErrorCode::MalformedResponse, "completion entries must be strings");
    }
    const auto raw = item.get<std::string>();
    const auto body = trim(raw);
    if (body.empty()) continue;

    CompletionCandidate c{"", "", CompletionSource::External, std::nullopt, condition, false};
    if (auto suffix = match_prefix(body, query)) {
      c.text = body;
      c.suffix = *suffix;
    } else {
      c.suffix = " " + body;
      c.text = query + c.suffix;
    }
    if (!seen.insert(c.text).second) continue;
    out.push_back(std::move(c));
    if (out.size() == k) break;
  }
  return out;
}

CorpusCompleter::CorpusCompleter(std::shared_ptr<const Gallery> gallery)
    : gallery_(gallery ? std::move(gallery)
                       : throw Error(ErrorCode::InvalidArgument, "corpus completer needs a gallery")),
      index_(*gallery_) {
  if (!gallery_->has_levels()) {
    throw Error(ErrorCode::LevelsNotAssigned, "corpus completer needs a levelled gallery");
  }
}

RandomCompleter::RandomCompleter(std::shared_ptr<const Gallery> gallery, std::uint64_t seed)
    : gallery_(gallery ? std::move(gallery)
                       : throw Error(ErrorCode::InvalidArgument, "random completer needs a gallery")),
      index_(*gallery_),
      seed_(seed) {}

std::vector<CompletionCandidate> RandomCompleter::complete(std::string_view prefix,
                                                           const QualityCondition& condition,
                                                           std::size_t k) const {
  std::vector<CompletionCandidate> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < k; ++i) {
    auto c = complete_random(*gallery_, index_, prefix, condition, seed_ + i);
    if (seen.insert(c.text).second) out.push_back(std::move(c));
  }
  return out;
}

struct ExternalCompleter::Limiter {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t in_flight = 0;
  std::size_t limit = 1;
};

ExternalCompleter::ExternalCompleter(EndpointConfig endpoint, std::vector<std::string> rel_names,
                                     std::vector<std::string> aes_names)
    : endpoint_(std::move(endpoint)),
      rel_names_(std::move(rel_names)),
      aes_names_(std::move(aes_names)),
      limiter_(std::make_unique<Limiter>()) {
  if (endpoint_.url.empty()) {
    throw Error(ErrorCode::InvalidArgument, "external completer needs an endpoint URL");
  }
  limiter_->limit = std::max<std::size_t>(1, endpoint_.max_in_flight);
}

ExternalCompleter::~ExternalCompleter() = default;

std::vector<CompletionCandidate> ExternalCompleter::complete(std::string_view prefix,
                                                             const QualityCondition& condition,
                                                             std::size_t k) const {
  {
    std::unique_lock lock(limiter_->mu);
    limiter_->cv.wait(lock, [&] { return limiter_->in_flight < limiter_->limit; });
    ++limiter_->in_flight;
  }
  struct Release {
    Limiter& l;
    ~Release() {
      {
        std::lock_guard lock(l.mu);
        --l.in_flight;
      }
      l.cv.notify_one();
    }
  } release{*limiter_};
  return complete_external(endpoint_, prefix, condition, k, rel_names_, aes_names_);
}

}  // namespace qcqc
