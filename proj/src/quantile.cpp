#include "qcqc/quantile.hpp"

#include <algorithm>
#include <cmath>

#include "qcqc/error.hpp"

namespace qcqc {

namespace {

void check_percentile(double p) {
  if (!(p >= 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::InvalidPercentile,
                "percentile " + std::to_string(p) + " outside [0, 100]");
  }
}

std::vector<double> sorted_copy(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::EmptyVector, "percentile of an empty vector");
  std::vector<double> sorted(scores.begin(), scores.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) {
      throw Error(ErrorCode::NonFiniteScore, "scores contain a non-finite value");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

}  // namespace

double perc_sorted(std::span<const double> sorted, double p) {
  check_percentile(p);
  if (sorted.empty()) throw Error(ErrorCode::EmptyVector, "percentile of an empty vector");
  const double xi = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const double lower = std::floor(xi);
  const auto lo = static_cast<std::size_t>(lower);
  const double frac = xi - lower;
  // Integral xi (including p = 100) never touches lo + 1.
  if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double perc(std::span<const double> scores, double p) {
  check_percentile(p);
  const auto sorted = sorted_copy(scores);
  return perc_sorted(sorted, p);
}

LevelScheme fit_scheme(std::span<const double> scores, std::vector<std::string> names,
                       std::vector<double> percentiles) {
  if (names.size() != percentiles.size() + 1) {
    throw Error(ErrorCode::InvalidArgument,
                "a scheme with " + std::to_string(percentiles.size()) +
                    " percentiles needs " + std::to_string(percentiles.size() + 1) +
                    " names");
  }
  for (std::size_t j = 0; j < percentiles.size(); ++j) {
    if (!(percentiles[j] > 0.0 && percentiles[j] < 100.0)) {
      throw Error(ErrorCode::InvalidPercentile, "cut percentiles must lie in (0, 100)");
    }
    if (j > 0 && !(percentiles[j] > percentiles[j - 1])) {
      throw Error(ErrorCode::NonMonotonePercentiles,
                  "percentiles must be strictly increasing");
    }
  }

  const auto sorted = sorted_copy(scores);
  LevelScheme scheme{std::move(names), std::move(percentiles), {}};
  scheme.cuts.reserve(scheme.percentiles.size());
  for (double p : scheme.percentiles) scheme.cuts.push_back(perc_sorted(sorted, p));
  return scheme;
}

std::size_t level_of(const LevelScheme& scheme, double x) {
  auto it = std::lower_bound(scheme.cuts.begin(), scheme.cuts.end(), x);
  return static_cast<std::size_t>(it - scheme.cuts.begin());
}

Gallery assign_levels(const Gallery& gallery, const LevelScheme& rel_scheme,
                      const LevelScheme& aes_scheme, MissingScorePolicy policy) {
  std::vector<GalleryRecord> records(gallery.records().begin(), gallery.records().end());
  for (auto& r : records) {
    if (!r.has_scores()) {
      if (policy == MissingScorePolicy::Reject) {
        throw Error(ErrorCode::MissingScore, "record '" + r.id + "' lacks a score");
      }
      r.rel_level.reset();
      r.aes_level.reset();
      continue;
    }
    r.rel_level = level_of(rel_scheme, *r.rel_score);
    r.aes_level = level_of(aes_scheme, *r.aes_score);
  }
  return Gallery(std::move(records), rel_scheme, aes_scheme);
}

Gallery fit_and_assign(const Gallery& gallery, const std::vector<std::string>& names,
                       const std::vector<double>& percentiles) {
  std::vector<double> rel;
  std::vector<double> aes;
  for (const auto& r : gallery.records()) {
    if (!r.has_scores()) continue;
    rel.push_back(*r.rel_score);
    aes.push_back(*r.aes_score);
  }
  if (rel.empty()) throw Error(ErrorCode::MissingScore, "no record carries both scores");
  auto rel_scheme = fit_scheme(rel, names, percentiles);
  auto aes_scheme = fit_scheme(aes, names, percentiles);
  return assign_levels(gallery, rel_scheme, aes_scheme, MissingScorePolicy::Skip);
}

std::vector<std::size_t> level_counts(const Gallery& gallery, bool relevance_axis) {
  const auto& scheme = relevance_axis ? gallery.rel_scheme() : gallery.aes_scheme();
  if (!scheme) throw Error(ErrorCode::LevelsNotAssigned, "gallery has no level scheme");
  std::vector<std::size_t> counts(scheme->size(), 0);
  for (const auto& r : gallery.records()) {
    const auto& level = relevance_axis ? r.rel_level : r.aes_level;
    if (level) ++counts[*level];
  }
  return counts;
}

std::vector<std::string> empty_level_warnings(const Gallery& gallery) {
  std::vector<std::string> warnings;
  if (!gallery.has_levels()) return warnings;
  for (bool rel_axis : {true, false}) {
    const auto counts = level_counts(gallery, rel_axis);
    const auto& names = (rel_axis ? gallery.rel_scheme() : gallery.aes_scheme())->names;
    for (std::size_t j = 0; j < counts.size(); ++j) {
      if (counts[j] == 0) {
        warnings.push_back(std::string(rel_axis ? "relevance" : "aesthetic") +
                           " level '" + names[j] + "' is empty");
      }
    }
  }
  return warnings;
}

}  // namespace qcqc
