#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <sstream>

#include "qcqc/error.hpp"
#include "qcqc/evalharness.hpp"
#include "qcqc/gateway.hpp"
#include "qcqc/prefixes.hpp"
#include "qcqc/quantile.hpp"
#include "qcqc/ranklab.hpp"
#include "qcqc/search.hpp"
#include "qcqc/synth.hpp"

namespace qcqc {

using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::string format = "text";
  std::string embedder;
  std::optional<std::uint64_t> embed_seed;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Timeout:
    case ErrorCode::HttpError:
    case ErrorCode::MalformedResponse:
    case ErrorCode::EmbedderFailure:
      return 2;
    default:
      return 1;
  }
}

ServiceOptions resolve_options(const Globals& g) {
  KeyValueConfig cfg;
  if (!g.config_path.empty()) cfg = read_config_file(g.config_path);
  auto o = options_from_config(cfg);
  if (!g.embedder.empty()) o.embedder = g.embedder;
  if (g.embed_seed) o.embed_seed = *g.embed_seed;
  return o;
}

std::vector<std::string> prefixes_from(const std::string& path) {
  return path.empty() ? default_prefixes() : read_prefix_file(path);
}

std::shared_ptr<const Completer> cli_completer(const std::string& method,
                                               std::shared_ptr<const Gallery> gallery,
                                               const ServiceOptions& o, std::uint64_t seed) {
  if (method == "corpus") return std::make_shared<CorpusCompleter>(gallery);
  if (method == "prefix" || method == "identity") return std::make_shared<IdentityCompleter>();
  if (method == "random") return std::make_shared<RandomCompleter>(gallery, seed);
  if (method == "external") {
    return std::make_shared<ExternalCompleter>(
        o.completion_endpoint,
        gallery->rel_scheme() ? gallery->rel_scheme()->names : three_level_names(),
        gallery->aes_scheme() ? gallery->aes_scheme()->names : three_level_names());
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown method '" + method + "' (corpus, prefix, random, external)");
}

json hits_to_json(const Gallery& g, const std::vector<Hit>& hits) {
  json out = json::array();
  for (const auto& h : hits) {
    const auto& r = g[h.index];
    out.push_back({{"id", r.id},
                   {"score", h.score},
                   {"caption", r.caption},
                   {"aes", r.aes_score ? json(*r.aes_score) : json(nullptr)},
                   {"rel", r.rel_score ? json(*r.rel_score) : json(nullptr)}});
  }
  return out;
}

std::string fmt3(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << x;
  return os.str();
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quality-conditioned query completion and retrieval", "qcqc"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key=value settings file");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--embedder", g.embedder, "text embedder: mock or external");
  app.add_option("--embed-seed", g.embed_seed, "mock embedder seed");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Build a gallery from a manifest and embeddings");
  std::string manifest, embeddings, out_dir;
  ingest_cmd->add_option("--manifest", manifest, "JSONL manifest")->required();
  ingest_cmd->add_option("--embeddings", embeddings, "binary embedding file")->required();
  ingest_cmd->add_option("--out", out_dir, "gallery directory to write")->required();

  // levels
  auto* levels_cmd = app.add_subcommand("levels", "Fit level schemes and assign levels");
  std::string gallery_dir;
  std::size_t n_levels = 3;
  std::vector<double> percentiles;
  std::vector<std::string> names;
  std::string levels_out;
  levels_cmd->add_option("--gallery", gallery_dir, "gallery directory")->required();
  levels_cmd->add_option("--levels", n_levels, "3 or 5 levels")->check(CLI::IsMember({3, 5}));
  levels_cmd->add_option("--p", percentiles, "cut percentiles, e.g. 33,66")->delimiter(',');
  levels_cmd->add_option("--names", names, "level names, lowest first")->delimiter(',');
  levels_cmd->add_option("--out", levels_out, "write here instead of in place");

  // complete
  auto* complete_cmd = app.add_subcommand("complete", "Complete a query prefix under a condition");
  std::string prefix, rel, aes, method = "corpus";
  std::size_t k = 5;
  std::uint64_t seed = 0;
  complete_cmd->add_option("--gallery", gallery_dir, "gallery directory")->required();
  complete_cmd->add_option("--prefix", prefix, "query prefix")->required();
  complete_cmd->add_option("--rel", rel, "relevance level")->required();
  complete_cmd->add_option("--aes", aes, "aesthetic level")->required();
  complete_cmd->add_option("--method", method, "corpus, prefix, random or external");
  complete_cmd->add_option("--k", k, "number of candidates")->check(CLI::PositiveNumber);
  complete_cmd->add_option("--seed", seed, "random completer seed");

  // retrieve
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Retrieve gallery records for a query");
  std::string query;
  std::size_t eta = 1;
  retrieve_cmd->add_option("--gallery", gallery_dir, "gallery directory")->required();
  retrieve_cmd->add_option("--query", query, "query text or prefix")->required();
  auto* rel_opt = retrieve_cmd->add_option("--rel", rel, "relevance level (completes first)");
  auto* aes_opt = retrieve_cmd->add_option("--aes", aes, "aesthetic level (completes first)");
  rel_opt->needs(aes_opt);
  aes_opt->needs(rel_opt);
  retrieve_cmd->add_option("--method", method, "completion method with --rel/--aes");
  retrieve_cmd->add_option("--eta", eta, "hits per query")->check(CLI::PositiveNumber);
  retrieve_cmd->add_option("--seed", seed, "random completer seed");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a completer over the condition grid");
  std::string prefix_file, report_format, report_out;
  double margin = 0.0;
  eval_cmd->add_option("--gallery", gallery_dir, "gallery directory")->required();
  eval_cmd->add_option("--method", method, "corpus, prefix, random or external");
  eval_cmd->add_option("--prefixes", prefix_file, "prefix file (default: 80 COCO classes)");
  eval_cmd->add_option("--eta", eta, "hits per query")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", seed, "random completer seed");
  eval_cmd->add_option("--report-format", report_format, "json, csv or md");
  eval_cmd->add_option("--out", report_out, "write the report to a file");
  eval_cmd->add_option("--margin", margin, "required monotonicity margin");

  // rerank
  auto* rerank_cmd = app.add_subcommand("rerank", "Aesthetic rerank baseline over top-k");
  std::vector<std::size_t> ks{1, 2, 3, 5, 10};
  rerank_cmd->add_option("--gallery", gallery_dir, "gallery directory")->required();
  rerank_cmd->add_option("--k", ks, "candidate pool sizes")->delimiter(',');
  rerank_cmd->add_option("--prefixes", prefix_file, "prefix file (default: 80 COCO classes)");

  // theory
  auto* theory_cmd = app.add_subcommand("theory", "Rank-perturbation checks");
  theory_cmd->require_subcommand(1);
  theory_cmd->fallthrough();
  auto* run_cmd = theory_cmd->add_subcommand("run", "Monte Carlo campaign");
  std::size_t trials = 100;
  std::vector<std::size_t> dims{12, 10, 15};
  std::size_t workers = default_workers();
  run_cmd->add_option("--trials", trials, "number of instances")->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", seed, "campaign seed");
  run_cmd->add_option("--dims", dims, "m,d,n")->delimiter(',')->expected(3);
  run_cmd->add_option("--workers", workers, "threads")->check(CLI::PositiveNumber);
  auto* example_cmd = theory_cmd->add_subcommand("example", "Check the 3x3 worked instance");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP JSON service");
  std::string host, static_dir;
  std::optional<int> port;
  bool admin_reload = false;
  serve_cmd->add_option("--gallery", gallery_dir, "gallery directory");
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "port (default 8787)");
  serve_cmd->add_option("--static", static_dir, "explorer assets served at /");
  serve_cmd->add_flag("--admin-reload", admin_reload, "enable POST /api/admin/reload");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Write a quality-stratified synthetic gallery");
  SynthConfig sc;
  bool no_levels = false;
  synth_cmd->add_option("--out", out_dir, "gallery directory to write")->required();
  synth_cmd->add_option("--n", sc.n, "records")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--levels", sc.levels, "3 or 5")->check(CLI::IsMember({3, 5}));
  synth_cmd->add_option("--seed", sc.seed, "generator seed");
  synth_cmd->add_option("--dim", sc.dim, "embedding dimension");
  synth_cmd->add_flag("--no-levels", no_levels, "skip level assignment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return 0;
    err << "\n" << app.help();
    return 1;
  }

  const bool as_json = g.format == "json";
  try {
    const auto opts = resolve_options(g);

    if (ingest_cmd->parsed()) {
      const auto gal = ingest(manifest, embeddings);
      save(gal, out_dir);
      if (as_json) {
        out << json{{"gallery", out_dir}, {"n", gal.size()}, {"dim", gal.dim()}}.dump() << "\n";
      } else {
        out << "ingested " << gal.size() << " records (dim " << gal.dim() << ") into " << out_dir
            << "\n";
      }
      return 0;
    }

    if (levels_cmd->parsed()) {
      const auto gal = load(gallery_dir);
      if (names.empty()) names = n_levels == 5 ? five_level_names() : three_level_names();
      if (percentiles.empty()) {
        if (names.size() == 3) {
          percentiles = three_level_percentiles();
        } else if (names.size() == 5) {
          percentiles = five_level_percentiles();
        } else {
          throw Error(ErrorCode::InvalidArgument, "--p is required with custom --names");
        }
      }
      if (names.size() != percentiles.size() + 1) {
        throw Error(ErrorCode::InvalidArgument,
                    "need one more level name than percentiles (see --levels / --names)");
      }
      const auto levelled = fit_and_assign(gal, names, percentiles);
      save(levelled, levels_out.empty() ? gallery_dir : levels_out);
      const auto warnings = empty_level_warnings(levelled);
      for (const auto& w : warnings) err << "warning: " << w << "\n";
      if (as_json) {
        out << json{{"rel", *levelled.rel_scheme()},
                    {"aes", *levelled.aes_scheme()},
                    {"rel_counts", level_counts(levelled, true)},
                    {"aes_counts", level_counts(levelled, false)},
                    {"warnings", warnings}}
                   .dump(2)
            << "\n";
      } else {
        for (const bool rel_axis : {true, false}) {
          const auto& s = rel_axis ? *levelled.rel_scheme() : *levelled.aes_scheme();
          const auto counts = level_counts(levelled, rel_axis);
          out << (rel_axis ? "relevance" : "aesthetic") << ":";
          for (std::size_t i = 0; i < s.size(); ++i) {
            out << " " << s.names[i] << "=" << counts[i];
            if (i < s.cuts.size()) out << " |" << s.cuts[i] << "|";
          }
          out << "\n";
        }
      }
      return 0;
    }

    if (complete_cmd->parsed()) {
      auto gal = std::make_shared<const Gallery>(load(gallery_dir));
      const auto c = cli_completer(method, gal, opts, seed);
      const auto cands = c->complete(prefix, {rel, aes}, k);
      if (as_json) {
        out << json{{"candidates", cands}}.dump(2) << "\n";
      } else {
        for (const auto& cand : cands) {
          out << cand.text << (cand.exact_condition_match || c->condition_blind() ? "" : "  [nearest]")
              << "\n";
        }
      }
      return 0;
    }

    if (retrieve_cmd->parsed()) {
      auto gal = std::make_shared<const Gallery>(load(gallery_dir));
      const auto embedder = make_embedder(opts, gal->dim());
      std::string text = query;
      json cands = json::array();
      if (!rel.empty()) {
        const auto c = cli_completer(method, gal, opts, seed);
        const auto got = c->complete(query, {rel, aes}, 1);
        if (!got.empty()) text = got.front().text;
        cands = got;
      }
      const std::vector<std::string> texts{text};
      const auto result = qcqc::retrieve(texts, *embedder, *gal, eta);
      const auto& hits = result.queries.front().hits;
      if (as_json) {
        out << json{{"query_text", text}, {"candidates", cands}, {"hits", hits_to_json(*gal, hits)}}
                   .dump(2)
            << "\n";
      } else {
        out << "query: " << text << "\n";
        for (std::size_t i = 0; i < hits.size(); ++i) {
          const auto& r = (*gal)[hits[i].index];
          out << i + 1 << ". " << r.id << "  " << fmt3(hits[i].score) << "  " << r.caption << "\n";
        }
      }
      return 0;
    }

    if (eval_cmd->parsed()) {
      auto gal = std::make_shared<const Gallery>(load(gallery_dir));
      const auto embedder = make_embedder(opts, gal->dim());
      EvalConfig ec;
      ec.prefixes = prefixes_from(prefix_file);
      ec.eta = eta;
      ec.seed = seed;
      ec.workers = opts.eval_workers;
      const auto c = cli_completer(method, gal, opts, seed);
      const auto report = run_grid(ec, *gal, *c, *embedder);
      const auto fmt =
          parse_report_format(report_format.empty() ? (as_json ? "json" : "md") : report_format);
      if (report_out.empty()) {
        out << render_report(report, fmt);
      } else {
        emit_report(report, fmt, report_out);
      }
      if (report.metadata.rel_scheme && report.metadata.aes_scheme) {
        const auto v = monotonicity_check(report, margin);
        err << "monotonicity (margin " << margin << "): relevance "
            << (v.rel.pass ? "pass" : "FAIL") << " (min " << fmt3(v.rel.min_margin)
            << "), aesthetic " << (v.aes.pass ? "pass" : "FAIL") << " (min "
            << fmt3(v.aes.min_margin) << ")\n";
      }
      return 0;
    }

    if (rerank_cmd->parsed()) {
      const auto gal = load(gallery_dir);
      const auto embedder = make_embedder(opts, gal.dim());
      const auto prefixes = prefixes_from(prefix_file);
      json rows = json::array();
      for (const auto kk : ks) {
        const auto rep = rerank_baseline(gal, prefixes, *embedder, kk, opts.eval_workers);
        const auto& cell = rep.cells.front();
        rows.push_back({{"k", kk}, {"ave_aes", cell.ave_aes}, {"ave_rel", cell.ave_rel},
                        {"items", cell.items}, {"skipped", cell.skipped}});
        if (!as_json) {
          out << "k=" << kk << "  ave_aes=" << fmt3(cell.ave_aes)
              << "  ave_rel=" << fmt3(cell.ave_rel) << "\n";
        }
      }
      if (as_json) out << json{{"rerank", rows}}.dump(2) << "\n";
      return 0;
    }

    if (run_cmd->parsed()) {
      ranklab::CampaignConfig cc;
      cc.trials = trials;
      cc.seed = seed;
      cc.workers = workers;
      cc.generator.m = dims[0];
      cc.generator.d = dims[1];
      cc.generator.n = dims[2];
      const auto rep = ranklab::run_campaign(cc);
      json j = rep;
      j["dims"] = dims;
      j["seed"] = seed;
      out << j.dump(2) << "\n";
      return 0;
    }

    if (example_cmd->parsed()) {
      ranklab::Matrix A(3, 3);
      A << 1, 0, 0, 0, 1, 0, 1, 1, 0;
      ranklab::Matrix D = ranklab::Matrix::Zero(3, 3);
      D(2, 2) = 0.1;
      const auto res = ranklab::verify_prop1(A, D, ranklab::Matrix::Identity(3, 3));
      out << json(res).dump(2) << "\n";
      return 0;
    }

    if (serve_cmd->parsed()) {
      auto o = opts;
      if (!gallery_dir.empty()) o.gallery_dir = gallery_dir;
      if (!host.empty()) o.host = host;
      if (port) o.port = *port;
      if (!static_dir.empty()) o.static_dir = static_dir;
      if (admin_reload) o.admin_reload = true;
      if (o.gallery_dir.empty()) throw Error(ErrorCode::InvalidArgument, "--gallery is required");
      Service service(make_snapshot(load(o.gallery_dir), o), o);
      HttpServer server(service);
      const int bound = server.bind(o.host, o.port);
      err << "serving " << o.gallery_dir.string() << " on http://" << o.host << ":" << bound
          << "\n";
      server.listen();
      return 0;
    }

    if (synth_cmd->parsed()) {
      sc.embed_seed = opts.embed_seed;
      auto gal = make_synthetic_gallery(sc);
      if (!no_levels) {
        gal = sc.levels == 5 ? fit_and_assign(gal, five_level_names(), five_level_percentiles())
                             : fit_and_assign(gal, three_level_names(), three_level_percentiles());
      }
      save(gal, out_dir);
      if (as_json) {
        out << json{{"gallery", out_dir}, {"n", gal.size()}, {"dim", gal.dim()},
                    {"levels", gal.has_levels() ? sc.levels : 0}}
                   .dump()
            << "\n";
      } else {
        out << "wrote " << gal.size() << " synthetic records to " << out_dir << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    if (as_json) {
      err << json(to_api_error(e)).dump() << "\n";
    } else {
      err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    }
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace qcqc
