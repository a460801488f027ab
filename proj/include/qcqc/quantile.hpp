#pragma once

#include <span>
#include <string>
#include <vector>

#include "qcqc/gallery.hpp"
#include "qcqc/level_scheme.hpp"

namespace qcqc {

/// Linear-interpolation percentile over the sorted scores:
///   xi = p/100 * (n-1);  r[floor(xi)] + frac(xi) * (r[floor(xi)+1] - r[floor(xi)])
/// Throws EmptyVector, NonFiniteScore, or InvalidPercentile for p outside
/// [0, 100].
double perc(std::span<const double> scores, double p);

/// Same as perc() over scores that are already sorted ascending and finite.
double perc_sorted(std::span<const double> sorted, double p);

/// Fits cut points cuts[j] = perc(scores, percentiles[j]). Percentiles must
/// be strictly increasing inside (0, 100) and |names| = |percentiles| + 1.
LevelScheme fit_scheme(std::span<const double> scores, std::vector<std::string> names,
                       std::vector<double> percentiles);

/// Smallest j with x <= cuts[j], else the top level. For three levels this
/// is Low: x <= c1, High: x > c2, Medium otherwise.
std::size_t level_of(const LevelScheme& scheme, double x);

enum class MissingScorePolicy {
  Reject,  // throw MissingScore naming the record
  Skip,    // leave the record unlevelled
};

/// Returns a copy of `gallery` with rel_level/aes_level set on every record
/// and both schemes attached.
Gallery assign_levels(const Gallery& gallery, const LevelScheme& rel_scheme,
                      const LevelScheme& aes_scheme,
                      MissingScorePolicy policy = MissingScorePolicy::Reject);

/// Fits one scheme per axis over the scored records and assigns levels
/// (records without scores are skipped).
Gallery fit_and_assign(const Gallery& gallery, const std::vector<std::string>& names,
                       const std::vector<double>& percentiles);

/// Per-level record counts along one axis; index = level.
std::vector<std::size_t> level_counts(const Gallery& gallery, bool relevance_axis);

/// Human-readable warnings for levels holding no records.
std::vector<std::string> empty_level_warnings(const Gallery& gallery);

}  // namespace qcqc
