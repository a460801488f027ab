// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qcqc/evalharness.hpp"
#include "qcqc/gallery.hpp"
#include "qcqc/gateway.hpp"
#include "qcqc/prefixes.hpp"
#include "qcqc/quantile.hpp"
#include "qcqc/ranklab.hpp"
#include "qcqc/search.hpp"
#include "qcqc/synth.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/shapes.hpp"

using namespace qcqc;
using nlohmann::json;
namespace rl = qcqc::ranklab;

namespace {

// Collects failure messages; the first few are printed with the verdict.
struct Check {
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

struct Criterion {
  std::string name;
  double limit_s;  // 0 = no runtime limit
  std::function<void(Check&)> body;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Gallery levelled_synth(std::uint64_t seed, std::size_t levels, std::size_t n = 3000) {
  SynthConfig cfg;
  cfg.n = n;
  cfg.levels = levels;
  cfg.seed = seed;
  const auto gal = make_synthetic_gallery(cfg);
  return levels == 5 ? fit_and_assign(gal, five_level_names(), five_level_percentiles())
                     : fit_and_assign(gal, three_level_names(), three_level_percentiles());
}

void percentile_oracle(Check& c) {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<std::size_t> len(1, 500);
  std::uniform_real_distribution<double> value(-100.0, 100.0);
  std::uniform_real_distribution<double> pct(0.0, 100.0);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> r(len(rng));
    // Mix of continuous values and a small alphabet of repeated ones.
    const bool dup_heavy = t % 2 == 0;
    for (auto& x : r) x = dup_heavy ? std::floor(value(rng) / 25.0) : value(rng);
    const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    c.expect(perc(r, 0.0) == *lo, "perc(r,0) != min at vector " + std::to_string(t));
    c.expect(perc(r, 100.0) == *hi, "perc(r,100) != max at vector " + std::to_string(t));
    for (double p : {pct(rng), pct(rng), pct(rng), 33.0, 50.0, 66.0}) {
      const double err = std::abs(perc(r, p) - testing::percentile_oracle(r, p));
      worst = std::max(worst, err);
      if (err > 1e-12) c.expect(false, "vector " + std::to_string(t) + " p=" + fmt(p) + " err " + fmt(err, 15));
    }
  }
  c.detail = "max abs error " + fmt(worst, 17);
}

void discretization(Check& c) {
  std::vector<double> ten(10);
  for (int i = 0; i < 10; ++i) ten[i] = i + 1;
  const auto s = fit_scheme(ten, three_level_names(), {33.0, 66.0});
  c.expect(std::abs(s.cuts[0] - 3.97) < 1e-12 && std::abs(s.cuts[1] - 6.94) < 1e-12,
           "cuts " + fmt(s.cuts[0], 6) + ", " + fmt(s.cuts[1], 6));
  std::vector<std::size_t> counts(3, 0);
  for (double x : ten) ++counts[level_of(s, x)];
  c.expect(counts == std::vector<std::size_t>{3, 3, 4}, "counts on 1..10");

  // Equal thirds: with p = (33, 66) the first level of 10,000 distinct
  // scores holds 3,300 items, so the n/3 +- 1 bound is checked at the
  // tercile percentiles.
  const std::size_t n = 10000;
  std::mt19937_64 rng(7);
  std::vector<double> big(n);
  for (std::size_t i = 0; i < n; ++i) big[i] = static_cast<double>(i) + 0.5 * std::generate_canonical<double, 53>(rng);
  std::shuffle(big.begin(), big.end(), rng);
  const auto thirds = fit_scheme(big, three_level_names(), {100.0 / 3.0, 200.0 / 3.0});
  std::vector<std::size_t> big_counts(3, 0);
  for (double x : big) ++big_counts[level_of(thirds, x)];
  for (auto k : big_counts) {
    c.expect(std::abs(static_cast<double>(k) - n / 3.0) <= 1.0, "level count " + std::to_string(k));
  }
  c.detail = "cuts (" + fmt(s.cuts[0], 2) + ", " + fmt(s.cuts[1], 2) + "), counts {3,3,4}; n=10000 counts {" +
             std::to_string(big_counts[0]) + "," + std::to_string(big_counts[1]) + "," +
             std::to_string(big_counts[2]) + "}";
}

void retrieval_oracle(Check& c) {
  std::mt19937_64 rng(2024);
  const std::size_t m = 100, n = 500, d = 32;
  std::size_t tie_rows = 0;
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<GalleryRecord> records;
    records.reserve(n);
    // The last axis is reserved: a query along it scores 0 against every
    // gallery vector.
    for (std::size_t j = 0; j < n; ++j) {
      auto v = testing::random_unit(d - 1, rng);
      v.push_back(0.0f);
      records.push_back(testing::make_record("g" + std::to_string(j), "c", std::move(v)));
    }
    const Gallery gal(std::move(records));
    std::vector<std::vector<float>> queries;
    for (std::size_t i = 0; i < m; ++i) {
      queries.push_back(i % 10 == 0 ? testing::basis(d, d - 1) : testing::random_unit(d, rng));
    }
    const auto scores = score_matrix(queries, gal);
    for (std::size_t eta : {1, 5, 10}) {
      const auto got = top_k(scores, eta);
      for (std::size_t i = 0; i < m; ++i) {
        const auto row = scores.row(i);
        const auto want = testing::topk_oracle(std::vector<double>(row.begin(), row.end()), eta);
        std::vector<std::size_t> have;
        for (const auto& h : got.queries[i].hits) have.push_back(h.index);
        if (have != want) {
          c.expect(false, "instance " + std::to_string(inst) + " row " + std::to_string(i) + " eta " +
                              std::to_string(eta));
        }
        if (eta == 10 && i % 10 == 0) {
          ++tie_rows;
          c.expect(want == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, "tie row oracle");
        }
      }
    }
  }
  c.detail = "50 instances x 100 queries x eta {1,5,10}, " + std::to_string(tie_rows) + " all-tie rows";
}

std::array<std::size_t, 3> random_dims(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> mdim(3, 20), ndim(2, 20);
  return {mdim(rng), mdim(rng), ndim(rng)};
}

void lemma1(Check& c) {
  std::mt19937_64 rng(4242);
  std::size_t holds = 0;
  for (int t = 0; t < 200; ++t) {
    const auto dims = random_dims(rng);
    rl::GeneratorConfig cfg;
    cfg.m = dims[0];
    cfg.d = dims[1];
    cfg.n = dims[2];
    const auto g = rl::generate_instance(cfg, rng);
    const auto dec = rl::decompose(g.A, g.Delta, g.C);
    const auto found = rl::find_sets(dec.instance, dec.blocks);
    const auto lemma = rl::verify_lemma1(dec.instance, dec.blocks, found.sets.I);
    // Hypotheses as the library sees them, conclusion from the oracle.
    const auto oracle = testing::lemma_matrix_oracle(g.A, g.Delta, g.C, found.sets.I);
    const bool ok = lemma.verdict == rl::Verdict::Holds && testing::rank_oracle(oracle) == g.r;
    if (ok) {
      ++holds;
    } else {
      c.expect(false, "trial " + std::to_string(t) + " (" + std::to_string(dims[0]) + "," +
                          std::to_string(dims[1]) + "," + std::to_string(dims[2]) + "): " +
                          rl::to_string(lemma.verdict) + " " + lemma.reason);
    }
  }
  c.detail = std::to_string(holds) + "/200";
}

void prop1(Check& c) {
  rl::Matrix A(3, 3);
  A << 1, 0, 0, 0, 1, 0, 1, 1, 0;
  rl::Matrix D = rl::Matrix::Zero(3, 3);
  D(2, 2) = 0.1;
  const rl::Matrix I3 = rl::Matrix::Identity(3, 3);
  const auto hand = rl::verify_prop1(A, D, I3);
  c.expect(hand.rank_s_a == 2 && hand.rank_s_b == 3, "hand instance ranks");
  c.expect(testing::rank_oracle(A) == 2 && testing::rank_oracle(A + D) == 3, "hand instance oracle ranks");
  c.expect(hand.assumptions.all(), "hand instance assumptions");
  c.expect(hand.verdict == rl::Verdict::Holds, "hand instance verdict");

  std::mt19937_64 rng(9090);
  std::size_t increase = 0, bound = 0;
  for (int t = 0; t < 100; ++t) {
    const auto dims = random_dims(rng);
    rl::GeneratorConfig cfg;
    cfg.m = dims[0];
    cfg.d = dims[1];
    cfg.n = dims[2];
    const auto g = rl::generate_instance(cfg, rng);
    const auto res = rl::verify_prop1(g.A, g.Delta, g.C);
    const auto ra = testing::rank_oracle(g.A * g.C.transpose());
    const auto rb = testing::rank_oracle((g.A + g.Delta) * g.C.transpose());
    c.expect(res.assumptions.all(), "trial " + std::to_string(t) + " assumptions not verified");
    c.expect(res.rank_s_a == ra && res.rank_s_b == rb, "trial " + std::to_string(t) + " rank disagrees with oracle");
    if (rb > ra) ++increase;
    if (rb >= res.r + res.k && res.k > 0) ++bound;
  }
  c.expect(increase == 100, "rank increase " + std::to_string(increase) + "/100");
  c.expect(bound == 100, "rank bound " + std::to_string(bound) + "/100");

  const auto control = rl::verify_prop1(A, rl::Matrix::Zero(3, 3), I3);
  c.expect(control.rank_s_a == control.rank_s_b, "control ranks differ");
  c.expect(control.verdict == rl::Verdict::Inapplicable && control.failing_assumption == 4,
           "control verdict " + rl::to_string(control.verdict) + "(" +
               std::to_string(control.failing_assumption) + ")");
  c.detail = "hand 2->3, increase " + std::to_string(increase) + "/100, bound " + std::to_string(bound) +
             "/100, control " + rl::to_string(control.verdict) + "(iv)";
}

void condition_blindness(Check& c) {
  const auto gal = levelled_synth(0, 3);
  MockEmbedder embedder(gal.dim(), 0);
  EvalConfig ec;
  const auto report = run_grid(ec, gal, IdentityCompleter{}, embedder);
  c.expect(report.cells.size() == 9, "cell count " + std::to_string(report.cells.size()));
  const auto& first = report.cells.front();
  for (const auto& cell : report.cells) {
    c.expect(cell.ave_aes == first.ave_aes && cell.ave_rel == first.ave_rel && cell.items == first.items &&
                 cell.per_prefix == first.per_prefix,
             "cell " + cell.condition.rel + "/" + cell.condition.aes + " differs");
  }
  c.detail = "9 cells at ave_aes " + fmt(first.ave_aes) + ", ave_rel " + fmt(first.ave_rel);
}

void monotonicity(Check& c) {
  std::size_t passing = 0;
  double worst = 1e9;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto gal = std::make_shared<const Gallery>(levelled_synth(seed, 3));
    MockEmbedder embedder(gal->dim(), 0);
    EvalConfig ec;
    ec.seed = seed;
    const auto report = run_grid(ec, *gal, CorpusCompleter(gal), embedder);
    const auto v = monotonicity_check(report, 0.5);
    worst = std::min({worst, v.rel.min_margin, v.aes.min_margin});
    if (v.pass()) ++passing;
  }
  c.expect(passing >= 18, "only " + std::to_string(passing) + "/20 seeds pass");
  c.detail = std::to_string(passing) + "/20 seeds at margin 0.5, worst margin " + fmt(worst);
}

void rerank(Check& c) {
  const std::vector<std::size_t> ks{1, 2, 3, 5, 10};
  std::vector<double> aes(ks.size(), 0.0), rel(ks.size(), 0.0);
  const auto& prefixes = default_prefixes();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto gal = levelled_synth(seed, 3);
    MockEmbedder embedder(gal.dim(), 0);
    EvalConfig ec;
    ec.seed = seed;
    ec.conditions = {{"Medium", "Medium"}};
    const auto baseline = run_grid(ec, gal, IdentityCompleter{}, embedder).cells.front();
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const auto cell = rerank_baseline(gal, prefixes, embedder, ks[i]).cells.front();
      aes[i] += cell.ave_aes / 20.0;
      rel[i] += cell.ave_rel / 20.0;
      if (ks[i] == 1) {
        c.expect(cell.ave_aes == baseline.ave_aes && cell.ave_rel == baseline.ave_rel,
                 "k=1 differs from the prefix baseline at seed " + std::to_string(seed));
      }
    }
  }
  std::ostringstream d;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    d << (i ? "; " : "") << "k=" << ks[i] << " " << fmt(aes[i]) << "/" << fmt(rel[i]);
    if (i > 0) {
      c.expect(aes[i] >= aes[i - 1], "ave_aes drops at k=" + std::to_string(ks[i]));
      c.expect(rel[i] <= rel[i - 1], "ave_rel rises at k=" + std::to_string(ks[i]));
    }
  }
  c.detail = "aes/rel " + d.str();
}

void five_levels(Check& c) {
  std::size_t passing = 0;
  const std::size_t seeds = 5;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    auto gal = std::make_shared<const Gallery>(levelled_synth(seed, 5));
    c.expect(gal->rel_scheme()->names == five_level_names(), "scheme names");
    MockEmbedder embedder(gal->dim(), 0);
    EvalConfig ec;
    ec.seed = seed;
    const auto report = run_grid(ec, *gal, CorpusCompleter(gal), embedder);
    c.expect(report.cells.size() == 25, "cell count");
    const auto v = diagonal_monotonicity(report);
    if (v.pass()) {
      ++passing;
    } else {
      c.expect(false, "diagonal not monotone at seed " + std::to_string(seed));
    }
    if (seed == 0) {
      // Same labels through the service.
      ServiceOptions o;
      Service svc(make_snapshot(*gal, o), o);
      const auto r = svc.handle("POST", "/api/pipeline", R"({"prefix":"a dog","rel":"VH","aes":"VL","eta":3})");
      c.expect(r.status == 200 && r.body["hits_per_candidate"][0].size() == 3, "five-level pipeline");
    }
  }
  c.detail = "diagonal VL..VH monotone on " + std::to_string(passing) + "/" + std::to_string(seeds) + " galleries";
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void persistence_api(Check& c) {
  testing::TempDir dir;
  const auto gal = levelled_synth(3, 3, 720);
  save(gal, dir / "a");
  const auto back = load(dir / "a");
  c.expect(back == gal, "loaded gallery differs");
  save(back, dir / "b");
  for (const auto* f : {"manifest.jsonl", "embeddings.bin", "levels.json"}) {
    c.expect(file_bytes(dir / "a" / f) == file_bytes(dir / "b" / f), std::string("re-saved ") + f + " differs");
  }
  c.expect(back.content_hash() == gal.content_hash(), "content hash");

  ServiceOptions o;
  o.eval_workers = 2;
  Service svc(make_snapshot(back, o), o);
  std::size_t validated = 0;
  const auto check = [&](const std::string& method, const std::string& path, const std::string& endpoint,
                         const json& body) {
    const auto r = svc.handle(method, path, method == "GET" ? "" : body.dump());
    const auto key = r.status == 200 ? endpoint : "error";
    const auto errors = testing::validate_response(key, r.body);
    c.expect(errors.empty(), key + ": " + (errors.empty() ? "" : errors.front()));
    ++validated;
    return r;
  };
  check("GET", "/api/health", "GET /api/health", {});
  check("GET", "/api/scheme", "GET /api/scheme", {});
  check("GET", "/api/gallery/stats?bins=5", "GET /api/gallery/stats", {});
  for (std::string method : {"corpus", "prefix", "random"}) {
    check("POST", "/api/complete", "POST /api/complete",
          {{"prefix", "a dog"}, {"rel", "High"}, {"aes", "Low"}, {"method", method}, {"k", 3}});
  }
  check("POST", "/api/retrieve", "POST /api/retrieve", {{"query_text", "a dog"}, {"eta", 5}});
  check("POST", "/api/pipeline", "POST /api/pipeline", {{"prefix", "a dog"}, {"rel", "Low"}, {"aes", "High"}});
  check("POST", "/api/eval/grid", "POST /api/eval/grid", {{"prefixes", {"a dog", "a cat"}}, {"eta", 2}});
  check("POST", "/api/complete", "", {{"prefix", "a dog"}, {"rel", "Huge"}, {"aes", "Low"}});
  check("GET", "/api/missing", "", {});

  json first;
  for (const auto& rel : three_level_names()) {
    for (const auto& aes : three_level_names()) {
      const auto r = check("POST", "/api/pipeline", "POST /api/pipeline",
                           {{"prefix", "a bicycle"}, {"rel", rel}, {"aes", aes}, {"method", "identity"}, {"eta", 5}});
      if (first.is_null()) first = r.body["hits_per_candidate"];
      c.expect(r.body["hits_per_candidate"] == first, "identity pipeline differs at " + rel + "/" + aes);
    }
  }

  ServiceOptions small;
  Service tiny(make_snapshot(testing::three_record_gallery(), small), small);
  const auto health = tiny.handle("GET", "/api/health", "");
  c.expect(health.body.value("gallery_n", 0) == 3, "health gallery_n on 3 records");
  const auto hits = tiny.handle("POST", "/api/retrieve", R"({"query_text":"a dog","eta":10})");
  c.expect(hits.status == 200 && hits.body["hits"].size() == 3, "eta > n on 3 records");

  c.detail = "round trip bit-exact, " + std::to_string(validated) + " responses validated, identity pipeline invariant";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"percentile oracle", 5, percentile_oracle},
      {"discretization", 1, discretization},
      {"retrieval oracle", 30, retrieval_oracle},
      {"lemma 1 monte carlo", 60, lemma1},
      {"proposition 1", 120, prop1},
      {"condition blindness", 0, condition_blindness},
      {"quality-control monotonicity", 60, monotonicity},
      {"rerank trade-off", 0, rerank},
      {"five-level scheme", 0, five_levels},
      {"persistence and api contracts", 0, persistence_api},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_s > 0 && secs >= cr.limit_s) {
      check.failures.push_back("runtime " + fmt(secs, 2) + " s over the " + fmt(cr.limit_s, 0) + " s limit");
    }
    const bool ok = check.failures.empty();
    if (!ok) ++failed;
    std::printf("%s  %-32s %7.2f s  %s\n", ok ? "PASS" : "FAIL", cr.name.c_str(), secs, check.detail.c_str());
    for (std::size_t i = 0; i < std::min<std::size_t>(check.failures.size(), 5); ++i) {
      std::printf("        %s\n", check.failures[i].c_str());
    }
    if (check.failures.size() > 5) std::printf("        ... %zu more\n", check.failures.size() - 5);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
