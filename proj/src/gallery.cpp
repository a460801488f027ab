#include "qcqc/gallery.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qcqc/error.hpp"

namespace qcqc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T byteswap_if_big_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  value = byteswap_if_big_endian(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) return false;
  value = byteswap_if_big_endian(value);
  return true;
}

double norm2(std::span<const float> v) {
  double acc = 0.0;
  for (float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(acc);
}

std::optional<double> optional_number(const json& obj, const char* key,
                                      std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw MalformedLineError(line, std::string("'") + key + "' must be a number");
  }
  return it->get<double>();
}

std::optional<std::size_t> optional_level(const json& obj, const char* key,
                                          std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_unsigned()) {
    throw MalformedLineError(line, std::string("'") + key +
                                       "' must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

struct ManifestEntry {
  std::string id;
  std::string caption;
  std::optional<double> aes;
  std::optional<double> rel;
  std::optional<std::size_t> rel_level;
  std::optional<std::size_t> aes_level;
};

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());

  std::vector<ManifestEntry> entries;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;

    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw MalformedLineError(line_no, e.what());
    }
    if (!obj.is_object()) throw MalformedLineError(line_no, "expected a JSON object");

    auto id = obj.find("id");
    if (id == obj.end() || !id->is_string()) {
      throw MalformedLineError(line_no, "'id' must be a string");
    }
    auto caption = obj.find("caption");
    if (caption == obj.end() || !caption->is_string()) {
      throw MalformedLineError(line_no, "'caption' must be a string");
    }

    ManifestEntry e;
    e.id = id->get<std::string>();
    e.caption = caption->get<std::string>();
    e.aes = optional_number(obj, "aes", line_no);
    e.rel = optional_number(obj, "rel", line_no);
    e.rel_level = optional_level(obj, "rel_level", line_no);
    e.aes_level = optional_level(obj, "aes_level", line_no);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::size_t LevelScheme::index_of(const std::string& label) const {
  auto it = std::find(names.begin(), names.end(), label);
  return static_cast<std::size_t>(it - names.begin());
}

void to_json(json& j, const LevelScheme& scheme) {
  j = json{{"names", scheme.names},
           {"percentiles", scheme.percentiles},
           {"cuts", scheme.cuts}};
}

void from_json(const json& j, LevelScheme& scheme) {
  j.at("names").get_to(scheme.names);
  j.at("percentiles").get_to(scheme.percentiles);
  j.at("cuts").get_to(scheme.cuts);
}

Gallery::Gallery(std::vector<GalleryRecord> records,
                 std::optional<LevelScheme> rel_scheme,
                 std::optional<LevelScheme> aes_scheme)
    : records_(std::move(records)),
      rel_scheme_(std::move(rel_scheme)),
      aes_scheme_(std::move(aes_scheme)) {
  if (!records_.empty()) dim_ = records_.front().embedding.size();
  by_id_.reserve(records_.size());

  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.embedding.size() != dim_ || dim_ == 0) {
      throw Error(ErrorCode::DimensionMismatch,
                  "record '" + r.id + "' has dimension " +
                      std::to_string(r.embedding.size()) + ", gallery has " +
                      std::to_string(dim_));
    }
    if (!by_id_.emplace(r.id, i).second) {
      throw Error(ErrorCode::DuplicateId, "duplicate id '" + r.id + "'");
    }
    const double n = norm2(r.embedding);
    if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance) {
      throw Error(ErrorCode::NormError,
                  "record '" + r.id + "' embedding is not unit norm");
    }
    if (r.aes_score && !std::isfinite(*r.aes_score)) {
      throw Error(ErrorCode::InvalidScore, "record '" + r.id + "' aes is not finite");
    }
    if (r.rel_score && !(*r.rel_score >= -1.0 && *r.rel_score <= 1.0)) {
      throw Error(ErrorCode::InvalidScore,
                  "record '" + r.id + "' rel must lie in [-1, 1]");
    }
    auto check_level = [&](const std::optional<std::size_t>& level,
                           const std::optional<LevelScheme>& scheme, const char* axis) {
      if (!level) return;
      if (!scheme || *level >= scheme->size()) {
        throw Error(ErrorCode::InvalidArgument, "record '" + r.id + "' has " + axis +
                                                    " level outside the scheme");
      }
    };
    check_level(r.rel_level, rel_scheme_, "rel");
    check_level(r.aes_level, aes_scheme_, "aes");
  }
}

std::optional<std::size_t> Gallery::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Gallery Gallery::scored_subset() const {
  std::vector<GalleryRecord> kept;
  kept.reserve(records_.size());
  for (const auto& r : records_) {
    if (r.has_scores()) kept.push_back(r);
  }
  return Gallery(std::move(kept), rel_scheme_, aes_scheme_);
}

std::string Gallery::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : records_) {
    h = fnv1a(h, r.id.data(), r.id.size());
    h = fnv1a(h, "\0", 1);
    h = fnv1a(h, r.caption.data(), r.caption.size());
    h = fnv1a(h, r.embedding.data(), r.embedding.size() * sizeof(float));
    const double aes = r.aes_score.value_or(std::nan(""));
    const double rel = r.rel_score.value_or(std::nan(""));
    h = fnv1a(h, &aes, sizeof aes);
    h = fnv1a(h, &rel, sizeof rel);
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

EmbeddingFile read_embedding_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open embeddings " + path.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw Error(ErrorCode::FormatError, "bad magic in " + path.string());
  }
  std::uint32_t version = 0;
  if (!read_le(in, version)) throw Error(ErrorCode::FormatError, "truncated header");
  if (version != kEmbeddingVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "embedding file version " + std::to_string(version));
  }

  EmbeddingFile file;
  if (!read_le(in, file.rows) || !read_le(in, file.cols)) {
    throw Error(ErrorCode::FormatError, "truncated header");
  }

  in.seekg(0, std::ios::end);
  const auto end = static_cast<std::uint64_t>(in.tellg());
  constexpr std::uint64_t header = 4 + 4 + 8 + 4;
  in.seekg(static_cast<std::streamoff>(header));
  const std::uint64_t expected = file.rows * file.cols * sizeof(float);
  if (file.cols != 0 && file.rows > (end - header) / (file.cols * sizeof(float))) {
    throw Error(ErrorCode::FormatError, "embedding payload shorter than header claims");
  }
  if (end - header != expected) {
    throw Error(ErrorCode::FormatError, "embedding payload size does not match header");
  }

  file.values.resize(static_cast<std::size_t>(file.rows * file.cols));
  for (float& v : file.values) {
    std::uint32_t bits;
    if (!read_le(in, bits)) throw Error(ErrorCode::FormatError, "truncated payload");
    v = std::bit_cast<float>(bits);
  }
  return file;
}

void write_embedding_file(const fs::path& path, const EmbeddingFile& file) {
  if (file.values.size() != file.rows * file.cols) {
    throw Error(ErrorCode::DimensionMismatch, "value count does not equal rows*cols");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(kEmbeddingMagic, 4);
  write_le(out, kEmbeddingVersion);
  write_le(out, file.rows);
  write_le(out, file.cols);
  for (float v : file.values) write_le(out, std::bit_cast<std::uint32_t>(v));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void normalize_embedding(std::vector<float>& v, std::string_view id) {
  const double n = norm2(v);
  if (!std::isfinite(n)) {
    throw Error(ErrorCode::NormError, "record '" + std::string(id) + "' has non-finite values");
  }
  if (n < kZeroNorm) {
    throw Error(ErrorCode::ZeroVector, "record '" + std::string(id) + "' has a zero embedding");
  }
  const double deviation = std::abs(n - 1.0);
  if (deviation <= kUnitNormTolerance) return;
  if (deviation > kRenormalizeTolerance) {
    throw Error(ErrorCode::NormError, "record '" + std::string(id) +
                                          "' embedding norm deviates from 1 by " +
                                          std::to_string(deviation));
  }
  for (float& x : v) x = static_cast<float>(static_cast<double>(x) / n);
}

Gallery ingest(const fs::path& manifest_path, const fs::path& embeddings_path) {
  auto entries = read_manifest(manifest_path);
  auto file = read_embedding_file(embeddings_path);
  if (file.rows != entries.size()) {
    throw Error(ErrorCode::RowCountMismatch,
                "manifest has " + std::to_string(entries.size()) +
                    " records, embedding file has " + std::to_string(file.rows) + " rows");
  }

  std::vector<GalleryRecord> records;
  records.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    GalleryRecord r;
    r.id = std::move(e.id);
    r.caption = std::move(e.caption);
    r.aes_score = e.aes;
    r.rel_score = e.rel;
    r.rel_level = e.rel_level;
    r.aes_level = e.aes_level;
    const auto first = file.values.begin() + static_cast<std::ptrdiff_t>(i * file.cols);
    r.embedding.assign(first, first + file.cols);
    normalize_embedding(r.embedding, r.id);
    records.push_back(std::move(r));
  }
  // Levels in a plain manifest are meaningless without schemes.
  for (auto& r : records) {
    r.rel_level.reset();
    r.aes_level.reset();
  }
  return Gallery(std::move(records));
}

double compute_relevance(std::span<const float> image_embedding,
                         std::span<const float> text_embedding) {
  if (image_embedding.size() != text_embedding.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "relevance between vectors of dimension " +
                    std::to_string(image_embedding.size()) + " and " +
                    std::to_string(text_embedding.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < image_embedding.size(); ++i) {
    acc += static_cast<double>(image_embedding[i]) * static_cast<double>(text_embedding[i]);
  }
  return std::clamp(acc, -1.0, 1.0);
}

void save(const Gallery& gallery, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  {
    std::ofstream out(dir / "manifest.jsonl", std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest in " + dir.string());
    for (const auto& r : gallery.records()) {
      json line{{"id", r.id}, {"caption", r.caption}};
      if (r.aes_score) line["aes"] = *r.aes_score;
      if (r.rel_score) line["rel"] = *r.rel_score;
      if (r.rel_level) line["rel_level"] = *r.rel_level;
      if (r.aes_level) line["aes_level"] = *r.aes_level;
      out << line.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "manifest write failed in " + dir.string());
  }

  EmbeddingFile file;
  file.rows = gallery.size();
  file.cols = static_cast<std::uint32_t>(gallery.dim());
  file.values.reserve(gallery.size() * gallery.dim());
  for (const auto& r : gallery.records()) {
    file.values.insert(file.values.end(), r.embedding.begin(), r.embedding.end());
  }
  write_embedding_file(dir / "embeddings.bin", file);

  const auto levels_path = dir / "levels.json";
  if (gallery.has_levels()) {
    std::ofstream out(levels_path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + levels_path.string());
    out << json{{"rel", *gallery.rel_scheme()}, {"aes", *gallery.aes_scheme()}}.dump(2)
        << '\n';
  } else {
    fs::remove(levels_path, ec);
  }
}

Gallery load(const fs::path& dir) {
  auto entries = read_manifest(dir / "manifest.jsonl");
  auto file = read_embedding_file(dir / "embeddings.bin");
  if (file.rows != entries.size()) {
    throw Error(ErrorCode::RowCountMismatch, "manifest and embeddings disagree in " +
                                                 dir.string());
  }

  std::optional<LevelScheme> rel_scheme;
  std::optional<LevelScheme> aes_scheme;
  const auto levels_path = dir / "levels.json";
  if (fs::exists(levels_path)) {
    std::ifstream in(levels_path);
    try {
      const json j = json::parse(in);
      rel_scheme = j.at("rel").get<LevelScheme>();
      aes_scheme = j.at("aes").get<LevelScheme>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::FormatError, "bad levels.json: " + std::string(e.what()));
    }
  }

  std::vector<GalleryRecord> records;
  records.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    GalleryRecord r{std::move(e.id), std::move(e.caption), {}, e.aes, e.rel,
                    e.rel_level, e.aes_level};
    const auto first = file.values.begin() + static_cast<std::ptrdiff_t>(i * file.cols);
    r.embedding.assign(first, first + file.cols);
    if (!rel_scheme) {
      r.rel_level.reset();
      r.aes_level.reset();
    }
    records.push_back(std::move(r));
  }
  return Gallery(std::move(records), std::move(rel_scheme), std::move(aes_scheme));
}

}  // namespace qcqc
