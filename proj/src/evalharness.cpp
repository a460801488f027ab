#include "qcqc/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "qcqc/error.hpp"
#include "qcqc/prefixes.hpp"
#include "qcqc/quantile.hpp"
#include "qcqc/search.hpp"
#include "qcqc/text.hpp"

namespace qcqc {

namespace {

std::vector<std::string> resolve_prefixes(const std::vector<std::string>& prefixes) {
  return prefixes.empty() ? default_prefixes() : prefixes;
}

// Fills ave_aes/ave_rel of a prefix outcome from its retrieved records.
void score_outcome(PrefixOutcome& out, const Gallery& gallery, const std::vector<Hit>& hits) {
  double aes = 0.0;
  double rel = 0.0;
  for (const auto& h : hits) {
    out.retrieved_ids.push_back(h.id);
    aes += *gallery[h.index].aes_score;
    rel += *gallery[h.index].rel_score;
  }
  if (!hits.empty()) {
    out.ave_aes = aes / static_cast<double>(hits.size());
    out.ave_rel = rel / static_cast<double>(hits.size());
  }
}

// Pools item-level scores over all non-skipped prefixes of a cell.
void pool_cell(CellResult& cell) {
  double aes = 0.0;
  double rel = 0.0;
  for (const auto& p : cell.per_prefix) {
    if (p.skipped) {
      ++cell.skipped;
      continue;
    }
    if (p.fallback) ++cell.fallbacks;
    const auto n = static_cast<double>(p.retrieved_ids.size());
    aes += p.ave_aes * n;
    rel += p.ave_rel * n;
    cell.items += p.retrieved_ids.size();
  }
  if (cell.items > 0) {
    cell.ave_aes = aes / static_cast<double>(cell.items);
    cell.ave_rel = rel / static_cast<double>(cell.items);
  } else {
    cell.ave_aes = std::numeric_limits<double>::quiet_NaN();
    cell.ave_rel = std::numeric_limits<double>::quiet_NaN();
  }
}

ReportMetadata base_metadata(const Gallery& scored, std::size_t eta, std::uint64_t seed) {
  ReportMetadata m;
  m.gallery_hash = scored.content_hash();
  m.gallery_n = scored.size();
  m.eta = eta;
  m.seed = seed;
  m.rel_scheme = scored.rel_scheme();
  m.aes_scheme = scored.aes_scheme();
  if (scored.has_levels()) m.warnings = empty_level_warnings(scored);
  return m;
}

}  // namespace

std::vector<QualityCondition> full_grid(std::span<const std::string> rel_names,
                                        std::span<const std::string> aes_names) {
  std::vector<QualityCondition> grid;
  grid.reserve(rel_names.size() * aes_names.size());
  for (const auto& a : aes_names) {
    for (const auto& r : rel_names) grid.push_back({r, a});
  }
  return grid;
}

const CellResult* EvalReport::find(const QualityCondition& condition) const {
  for (const auto& c : cells) {
    if (c.condition == condition) return &c;
  }
  return nullptr;
}

EvalReport run_grid(const EvalConfig& config, const Gallery& gallery, const Completer& completer,
                    const TextEmbedder& embedder) {
  if (config.eta == 0) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1");
  const Gallery scored = gallery.scored_subset();
  if (scored.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no scored records");

  std::vector<QualityCondition> conditions = config.conditions;
  if (conditions.empty()) {
    if (!scored.has_levels()) {
      throw Error(ErrorCode::LevelsNotAssigned,
                  "full-grid evaluation needs level schemes; run levels first");
    }
    conditions = full_grid(scored.rel_scheme()->names, scored.aes_scheme()->names);
  }
  const auto prefixes = resolve_prefixes(config.prefixes);

  EvalReport report;
  report.method = completer.name();
  report.metadata = base_metadata(scored, config.eta, config.seed);
  report.cells.resize(conditions.size());
  for (std::size_t c = 0; c < conditions.size(); ++c) {
    report.cells[c].condition = conditions[c];
    report.cells[c].per_prefix.resize(prefixes.size());
  }

  const std::size_t tasks = conditions.size() * prefixes.size();
  parallel_for(
      tasks,
      [&](std::size_t t) {
        const std::size_t c = t / prefixes.size();
        const std::size_t p = t % prefixes.size();
        PrefixOutcome& out = report.cells[c].per_prefix[p];
        out.prefix = prefixes[p];
        try {
          auto candidates = completer.complete(prefixes[p], conditions[c], 1);
          if (candidates.empty()) {
            out.query_text = collapse_whitespace(prefixes[p]);
            out.fallback = true;
            if (out.query_text.empty()) throw Error(ErrorCode::EmptyPrefix, "query prefix is empty");
          } else {
            out.query_text = candidates.front().text;
          }
          const auto embedding = embedder.embed(out.query_text);
          score_outcome(out, scored, search_one(embedding, scored, config.eta));
        } catch (const std::exception& e) {
          out.retrieved_ids.clear();
          out.ave_aes = 0.0;
          out.ave_rel = 0.0;
          out.skipped = true;
          out.error = e.what();
        }
      },
      config.workers);

  for (auto& cell : report.cells) pool_cell(cell);
  return report;
}

EvalReport rerank_baseline(const Gallery& gallery, std::span<const std::string> prefixes_in,
                           const TextEmbedder& embedder, std::size_t k, std::size_t workers) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "rerank k must be >= 1");
  const Gallery scored = gallery.scored_subset();
  if (scored.empty()) throw Error(ErrorCode::EmptyGallery, "gallery has no scored records");
  const auto prefixes =
      resolve_prefixes(std::vector<std::string>(prefixes_in.begin(), prefixes_in.end()));

  EvalReport report;
  report.method = "rerank";
  report.metadata = base_metadata(scored, 1, 0);
  report.metadata.rerank_k = k;
  CellResult cell;
  cell.condition = {"*", "*"};
  cell.per_prefix.resize(prefixes.size());

  parallel_for(
      prefixes.size(),
      [&](std::size_t p) {
        PrefixOutcome& out = cell.per_prefix[p];
        out.prefix = prefixes[p];
        out.query_text = collapse_whitespace(prefixes[p]);
        try {
          if (out.query_text.empty()) throw Error(ErrorCode::EmptyPrefix, "query prefix is empty");
          const auto hits = search_one(embedder.embed(out.query_text), scored, k);
          // First maximum keeps cosine order among equal aesthetic scores.
          std::size_t best = 0;
          for (std::size_t i = 1; i < hits.size(); ++i) {
            if (*scored[hits[i].index].aes_score > *scored[hits[best].index].aes_score) best = i;
          }
          score_outcome(out, scored, {hits[best]});
        } catch (const std::exception& e) {
          out.retrieved_ids.clear();
          out.skipped = true;
          out.error = e.what();
        }
      },
      workers);

  pool_cell(cell);
  report.cells.push_back(std::move(cell));
  return report;
}

namespace {

struct Axes {
  const LevelScheme* rel;
  const LevelScheme* aes;
};

Axes require_schemes(const EvalReport& report) {
  if (!report.metadata.rel_scheme || !report.metadata.aes_scheme) {
    throw Error(ErrorCode::LevelsNotAssigned, "report carries no level schemes");
  }
  return {&*report.metadata.rel_scheme, &*report.metadata.aes_scheme};
}

const CellResult& require_cell(const EvalReport& report, const QualityCondition& c) {
  const auto* cell = report.find(c);
  if (cell == nullptr) {
    throw Error(ErrorCode::IncompleteGrid,
                "grid lacks condition (" + c.rel + ", " + c.aes + ")");
  }
  return *cell;
}

void record(AxisVerdict& axis, const QualityCondition& lower, const QualityCondition& higher,
            double margin, double required, bool& first) {
  if (first || margin < axis.min_margin) axis.min_margin = margin;
  first = false;
  if (!(margin >= required)) {
    axis.pass = false;
    axis.violations.push_back({lower, higher, margin});
  }
}

}  // namespace

MonotonicityVerdict monotonicity_check(const EvalReport& report, double required_margin) {
  const auto axes = require_schemes(report);
  const auto& rn = axes.rel->names;
  const auto& an = axes.aes->names;
  MonotonicityVerdict v;
  bool first_rel = true;
  bool first_aes = true;
  for (const auto& a : an) {
    for (std::size_t r = 0; r + 1 < rn.size(); ++r) {
      const QualityCondition lo{rn[r], a};
      const QualityCondition hi{rn[r + 1], a};
      const double m = require_cell(report, hi).ave_rel - require_cell(report, lo).ave_rel;
      record(v.rel, lo, hi, m, required_margin, first_rel);
    }
  }
  for (const auto& r : rn) {
    for (std::size_t a = 0; a + 1 < an.size(); ++a) {
      const QualityCondition lo{r, an[a]};
      const QualityCondition hi{r, an[a + 1]};
      const double m = require_cell(report, hi).ave_aes - require_cell(report, lo).ave_aes;
      record(v.aes, lo, hi, m, required_margin, first_aes);
    }
  }
  return v;
}

MonotonicityVerdict diagonal_monotonicity(const EvalReport& report, double required_margin) {
  const auto axes = require_schemes(report);
  const auto& rn = axes.rel->names;
  const auto& an = axes.aes->names;
  if (rn.size() != an.size()) {
    throw Error(ErrorCode::InvalidArgument, "diagonal needs equally many levels on both axes");
  }
  MonotonicityVerdict v;
  bool first_rel = true;
  bool first_aes = true;
  for (std::size_t l = 0; l + 1 < rn.size(); ++l) {
    const QualityCondition lo{rn[l], an[l]};
    const QualityCondition hi{rn[l + 1], an[l + 1]};
    const auto& clo = require_cell(report, lo);
    const auto& chi = require_cell(report, hi);
    record(v.rel, lo, hi, chi.ave_rel - clo.ave_rel, required_margin, first_rel);
    record(v.aes, lo, hi, chi.ave_aes - clo.ave_aes, required_margin, first_aes);
  }
  return v;
}

ReportFormat parse_report_format(std::string_view name) {
  const auto lower = to_lower_ascii(name);
  if (lower == "json") return ReportFormat::Json;
  if (lower == "csv") return ReportFormat::Csv;
  if (lower == "md" || lower == "markdown") return ReportFormat::Markdown;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

namespace {

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

double number_or_nan(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string fixed3(double x) {
  if (!std::isfinite(x)) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << x;
  return os.str();
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "method,rel,aes,ave_aes,ave_rel,items,skipped,fallbacks\n";
  os << std::setprecision(17);
  for (const auto& c : report.cells) {
    os << csv_field(report.method) << ',' << csv_field(c.condition.rel) << ','
       << csv_field(c.condition.aes) << ',' << c.ave_aes << ',' << c.ave_rel << ',' << c.items
       << ',' << c.skipped << ',' << c.fallbacks << '\n';
  }
  return os.str();
}

std::string render_markdown(const EvalReport& report) {
  std::ostringstream os;
  os << "# " << report.method << "\n\n";
  os << "| Aesthetic | Relevance | Ave Aes | Ave Rel | Items | Skipped |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& c : report.cells) {
    os << "| " << c.condition.aes << " | " << c.condition.rel << " | " << fixed3(c.ave_aes)
       << " | " << fixed3(c.ave_rel) << " | " << c.items << " | " << c.skipped << " |\n";
  }
  const auto& m = report.metadata;
  os << "\ngallery " << m.gallery_hash << " (n=" << m.gallery_n << "), eta=" << m.eta
     << ", seed=" << m.seed << ", pooling=" << m.pooling;
  if (m.rerank_k) os << ", k=" << *m.rerank_k;
  os << "\n";
  for (const auto& w : m.warnings) os << "\n> warning: " << w << "\n";
  return os.str();
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return nlohmann::json(report).dump(2) + "\n";
    case ReportFormat::Csv:
      return render_csv(report);
    case ReportFormat::Markdown:
      return render_markdown(report);
  }
  return {};
}

void emit_report(const EvalReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << render_report(report, format);
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void to_json(nlohmann::json& j, const EvalReport& report) {
  const auto& m = report.metadata;
  nlohmann::json meta{{"gallery_hash", m.gallery_hash},
                      {"gallery_n", m.gallery_n},
                      {"eta", m.eta},
                      {"seed", m.seed},
                      {"pooling", m.pooling},
                      {"warnings", m.warnings}};
  meta["rel_scheme"] = m.rel_scheme ? nlohmann::json(*m.rel_scheme) : nlohmann::json(nullptr);
  meta["aes_scheme"] = m.aes_scheme ? nlohmann::json(*m.aes_scheme) : nlohmann::json(nullptr);
  meta["rerank_k"] = m.rerank_k ? nlohmann::json(*m.rerank_k) : nlohmann::json(nullptr);

  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& p : c.per_prefix) {
      per.push_back({{"prefix", p.prefix},
                     {"query_text", p.query_text},
                     {"retrieved_ids", p.retrieved_ids},
                     {"ave_aes", number_or_null(p.ave_aes)},
                     {"ave_rel", number_or_null(p.ave_rel)},
                     {"skipped", p.skipped},
                     {"fallback", p.fallback},
                     {"error", p.error}});
    }
    cells.push_back({{"condition", c.condition},
                     {"ave_aes", number_or_null(c.ave_aes)},
                     {"ave_rel", number_or_null(c.ave_rel)},
                     {"items", c.items},
                     {"skipped", c.skipped},
                     {"fallbacks", c.fallbacks},
                     {"per_prefix", std::move(per)}});
  }
  j = {{"method", report.method}, {"cells", std::move(cells)}, {"metadata", std::move(meta)}};
}

void from_json(const nlohmann::json& j, EvalReport& report) {
  report = EvalReport{};
  report.method = j.at("method").get<std::string>();
  const auto& meta = j.at("metadata");
  auto& m = report.metadata;
  m.gallery_hash = meta.at("gallery_hash").get<std::string>();
  m.gallery_n = meta.at("gallery_n").get<std::size_t>();
  m.eta = meta.at("eta").get<std::size_t>();
  m.seed = meta.at("seed").get<std::uint64_t>();
  m.pooling = meta.value("pooling", std::string("items"));
  m.warnings = meta.value("warnings", std::vector<std::string>{});
  if (meta.contains("rel_scheme") && !meta["rel_scheme"].is_null()) {
    m.rel_scheme = meta["rel_scheme"].get<LevelScheme>();
  }
  if (meta.contains("aes_scheme") && !meta["aes_scheme"].is_null()) {
    m.aes_scheme = meta["aes_scheme"].get<LevelScheme>();
  }
  if (meta.contains("rerank_k") && !meta["rerank_k"].is_null()) {
    m.rerank_k = meta["rerank_k"].get<std::size_t>();
  }
  for (const auto& jc : j.at("cells")) {
    CellResult c;
    c.condition = jc.at("condition").get<QualityCondition>();
    c.ave_aes = number_or_nan(jc.at("ave_aes"));
    c.ave_rel = number_or_nan(jc.at("ave_rel"));
    c.items = jc.at("items").get<std::size_t>();
    c.skipped = jc.at("skipped").get<std::size_t>();
    c.fallbacks = jc.at("fallbacks").get<std::size_t>();
    for (const auto& jp : jc.value("per_prefix", nlohmann::json::array())) {
      PrefixOutcome p;
      p.prefix = jp.at("prefix").get<std::string>();
      p.query_text = jp.at("query_text").get<std::string>();
      p.retrieved_ids = jp.at("retrieved_ids").get<std::vector<std::string>>();
      p.ave_aes = number_or_nan(jp.at("ave_aes"));
      p.ave_rel = number_or_nan(jp.at("ave_rel"));
      p.skipped = jp.at("skipped").get<bool>();
      p.fallback = jp.at("fallback").get<bool>();
      p.error = jp.at("error").get<std::string>();
      c.per_prefix.push_back(std::move(p));
    }
    report.cells.push_back(std::move(c));
  }
}

Histogram score_histogram(const Gallery& gallery, bool relevance_axis, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  std::vector<double> xs;
  for (const auto& r : gallery.records()) {
    const auto& s = relevance_axis ? r.rel_score : r.aes_score;
    if (s) xs.push_back(*s);
  }
  if (xs.empty()) throw Error(ErrorCode::EmptyVector, "no scores to bin");
  const auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(b == bins ? hi : lo + (hi - lo) * static_cast<double>(b) / bins);
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  for (double x : xs) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((x - lo) / width) : 0;
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

std::string histogram_csv(const Histogram& histogram) {
  std::ostringstream os;
  os << std::setprecision(17) << "lower,upper,count\n";
  for (std::size_t b = 0; b < histogram.counts.size(); ++b) {
    os << histogram.edges[b] << ',' << histogram.edges[b + 1] << ',' << histogram.counts[b]
       << '\n';
  }
  return os.str();
}

void to_json(nlohmann::json& j, const Histogram& histogram) {
  j = {{"edges", histogram.edges}, {"counts", histogram.counts}};
}

}  // namespace qcqc
