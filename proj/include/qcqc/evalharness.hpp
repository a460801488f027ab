#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qcqc/completer.hpp"
#include "qcqc/embedder.hpp"
#include "qcqc/gallery.hpp"
#include "qcqc/parallel.hpp"

namespace qcqc {

struct EvalConfig {
  std::vector<std::string> prefixes;         // empty: the 80 COCO queries
  std::vector<QualityCondition> conditions;  // empty: full grid of the gallery's schemes
  std::size_t eta = 1;
  std::uint64_t seed = 0;
  std::size_t workers = default_workers();
};

/// Every (rel, aes) pair, aesthetic level outermost as in the result tables.
std::vector<QualityCondition> full_grid(std::span<const std::string> rel_names,
                                        std::span<const std::string> aes_names);

struct PrefixOutcome {
  std::string prefix;
  std::string query_text;  // completion actually retrieved with
  std::vector<std::string> retrieved_ids;
  double ave_aes = 0.0;
  double ave_rel = 0.0;
  bool skipped = false;
  bool fallback = false;  // completer produced nothing; bare prefix used
  std::string error;

  bool operator==(const PrefixOutcome&) const = default;
};

struct CellResult {
  QualityCondition condition;
  double ave_aes = 0.0;
  double ave_rel = 0.0;
  std::size_t items = 0;
  std::size_t skipped = 0;
  std::size_t fallbacks = 0;
  std::vector<PrefixOutcome> per_prefix;

  bool operator==(const CellResult&) const = default;
};

struct ReportMetadata {
  std::string gallery_hash;
  std::size_t gallery_n = 0;
  std::size_t eta = 1;
  std::uint64_t seed = 0;
  std::string pooling = "items";
  std::optional<LevelScheme> rel_scheme;
  std::optional<LevelScheme> aes_scheme;
  std::optional<std::size_t> rerank_k;
  std::vector<std::string> warnings;

  bool operator==(const ReportMetadata&) const = default;
};

struct EvalReport {
  std::string method;
  std::vector<CellResult> cells;
  ReportMetadata metadata;

  const CellResult* find(const QualityCondition& condition) const;
  bool operator==(const EvalReport&) const = default;
};

/// complete -> embed -> top-eta for every (condition, prefix); cell means
/// pool the true scores of all retrieved records. Completer or embedder
/// failures are counted as skips and never abort the grid. Retrieval runs
/// over the scored records only.
EvalReport run_grid(const EvalConfig& config, const Gallery& gallery, const Completer& completer,
                    const TextEmbedder& embedder);

/// Post-retrieval filter: per prefix, the top-k records by cosine are
/// re-ordered by aes_score and the best one kept. One cell, condition "*".
EvalReport rerank_baseline(const Gallery& gallery, std::span<const std::string> prefixes,
                           const TextEmbedder& embedder, std::size_t k,
                           std::size_t workers = default_workers());

struct Violation {
  QualityCondition lower;
  QualityCondition higher;
  double margin = 0.0;  // metric(higher) - metric(lower)
};

struct AxisVerdict {
  bool pass = true;
  double min_margin = 0.0;
  std::vector<Violation> violations;
};

struct MonotonicityVerdict {
  AxisVerdict rel;  // ave_rel along the relevance condition
  AxisVerdict aes;  // ave_aes along the aesthetic condition
  bool pass() const { return rel.pass && aes.pass; }
};

/// Holding one axis fixed, the other axis' metric must rise by at least
/// `required_margin` between adjacent levels (0 = non-decreasing). Needs
/// schemes in the metadata and every grid cell (IncompleteGrid).
MonotonicityVerdict monotonicity_check(const EvalReport& report, double required_margin = 0.0);

/// Same test along the diagonal conditions (l, l) -> (l+1, l+1).
MonotonicityVerdict diagonal_monotonicity(const EvalReport& report, double required_margin = 0.0);

enum class ReportFormat { Json, Csv, Markdown };

ReportFormat parse_report_format(std::string_view name);
std::string render_report(const EvalReport& report, ReportFormat format);
void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path);

void to_json(nlohmann::json& j, const EvalReport& report);
void from_json(const nlohmann::json& j, EvalReport& report);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;

  bool operator==(const Histogram&) const = default;
};

/// Equal-width bins over [min, max] of the scored records' scores on one
/// axis; the last bin is closed.
Histogram score_histogram(const Gallery& gallery, bool relevance_axis, std::size_t bins);
std::string histogram_csv(const Histogram& histogram);
void to_json(nlohmann::json& j, const Histogram& histogram);

}  // namespace qcqc
