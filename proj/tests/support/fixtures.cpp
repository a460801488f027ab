#include "fixtures.hpp"

#include <chrono>
#include <cmath>

namespace qcqc::testing {

namespace fs = std::filesystem;

TempDir::TempDir() {
  static std::atomic<std::uint64_t> counter{0};
  std::random_device rd;
  for (;;) {
    auto candidate = fs::temp_directory_path() /
                     ("qcqc-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    if (fs::create_directory(candidate)) {
      path_ = candidate;
      return;
    }
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<float> basis(std::size_t dim, std::size_t axis) {
  std::vector<float> v(dim, 0.0f);
  v.at(axis) = 1.0f;
  return v;
}

std::vector<float> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::vector<double> g(dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : g) {
      x = gauss(rng);
      norm += x * x;
    }
  } while (norm < 1e-6);
  norm = std::sqrt(norm);
  std::vector<float> v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = static_cast<float>(g[i] / norm);
  // float rounding can leave the norm slightly off; one renormalization fixes it
  double n2 = 0.0;
  for (float x : v) n2 += static_cast<double>(x) * x;
  const double s = 1.0 / std::sqrt(n2);
  for (auto& x : v) x = static_cast<float>(x * s);
  return v;
}

GalleryRecord make_record(std::string id, std::string caption, std::vector<float> embedding,
                          std::optional<double> aes, std::optional<double> rel) {
  GalleryRecord r;
  r.id = std::move(id);
  r.caption = std::move(caption);
  r.embedding = std::move(embedding);
  r.aes_score = aes;
  r.rel_score = rel;
  return r;
}

Gallery three_record_gallery() {
  std::vector<GalleryRecord> records;
  records.push_back(make_record("a", "a dog on a sofa", basis(4, 0), 4.0, 0.30));
  records.push_back(make_record("b", "a dog in the park at dusk", basis(4, 1), 6.0, 0.20));
  records.push_back(make_record("c", "a cat asleep", basis(4, 2), 5.0, 0.35));
  return Gallery(std::move(records));
}

StubServer::StubServer(Handler post_handler) {
  server_.Post(R"(/.*)", [this, h = std::move(post_handler)](const httplib::Request& req,
                                                            httplib::Response& res) {
    ++requests_;
    h(req, res);
  });
  port_ = server_.bind_to_any_port("127.0.0.1");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

StubServer::~StubServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

std::string StubServer::url(const std::string& path) const {
  return "http://127.0.0.1:" + std::to_string(port_) + path;
}

}  // namespace qcqc::testing
