#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qcqc {

/// Ordered level labels plus the percentile cut points that separate them.
/// names.size() == percentiles.size() + 1 == cuts.size() + 1.
struct LevelScheme {
  std::vector<std::string> names;
  std::vector<double> percentiles;
  std::vector<double> cuts;

  std::size_t size() const noexcept { return names.size(); }

  /// Index of `label` in names, or names.size() when absent.
  std::size_t index_of(const std::string& label) const;

  bool operator==(const LevelScheme&) const = default;
};

inline const std::vector<std::string>& three_level_names() {
  static const std::vector<std::string> names{"Low", "Medium", "High"};
  return names;
}

inline const std::vector<std::string>& five_level_names() {
  static const std::vector<std::string> names{"VL", "L", "M", "H", "VH"};
  return names;
}

inline const std::vector<double>& three_level_percentiles() {
  static const std::vector<double> p{33.0, 66.0};
  return p;
}

inline const std::vector<double>& five_level_percentiles() {
  static const std::vector<double> p{20.0, 40.0, 60.0, 80.0};
  return p;
}

void to_json(nlohmann::json& j, const LevelScheme& scheme);
void from_json(const nlohmann::json& j, LevelScheme& scheme);

}  // namespace qcqc
