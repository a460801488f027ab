#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
// resolv.h (pulled in by httplib) defines _res, which clashes with Eigen.
#undef _res

#include "qcqc/gallery.hpp"

namespace qcqc::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Unit vector along axis `axis` of a `dim`-dimensional space.
std::vector<float> basis(std::size_t dim, std::size_t axis);

/// Normalized Gaussian vector.
std::vector<float> random_unit(std::size_t dim, std::mt19937_64& rng);

GalleryRecord make_record(std::string id, std::string caption, std::vector<float> embedding,
                          std::optional<double> aes = std::nullopt,
                          std::optional<double> rel = std::nullopt);

/// Three records "a", "b", "c" along the axes of R^4, scored.
Gallery three_record_gallery();

/// In-process HTTP server on a free loopback port.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler post_handler);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string url(const std::string& path = "/") const;
  int port() const noexcept { return port_; }
  std::size_t requests() const noexcept { return requests_.load(); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<std::size_t> requests_{0};
};

}  // namespace qcqc::testing
