#pragma once

// `permcover` command-line front end. Every subcommand resolves its
// configuration (flags > PERMCOVER_* environment > defaults), runs one
// library operation and emits a JSON or CSV payload. JSON payloads carry a
// "meta" object with the tool version, resolved config, timestamp, wall
// time and warnings; everything outside "meta" (and certificate
// wall_time_ms) is deterministic given the config.
//
// Exit codes: 0 ok, 1 verification or audit violation, 2 usage error,
// 3 resource limit.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cache.hpp"
#include "cover.hpp"
#include "coverage_graph.hpp"
#include "io.hpp"
#include "threshold.hpp"

namespace permcover::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kUsage = 2, kResource = 3 };

struct RunConfig {
  std::string subcommand;
  int n = 0;
  int lambda = 1;
  std::string method = "exact";
  std::uint64_t seed = 0;
  std::uint64_t trials = 1000;
  double budget_seconds = kDefaultSolveBudgetSeconds;
  std::optional<std::uint64_t> draws;
  double pmin = 0, pmax = 1;
  int steps = 11;
  double omega = 1;
  std::optional<double> K;
  std::optional<double> lambda_target;
  std::optional<double> p;
  std::string out;
  std::string cache_dir;
  bool no_cache = false;
  int max_n = kDefaultMaxGraphN;
  int workers = 0;
  bool audit = false;
  std::uint64_t sample_rows = 0;
  int audit_max_n = kDefaultAuditMaxN;
  int nmin = 1, nmax = 10;
  int exact_upto = 3;
  bool quiet = false;

  Json to_json() const {
    Json j{{"subcommand", subcommand}, {"n", n}, {"workers", workers}, {"max_n", max_n}};
    if (subcommand == "solve" || subcommand == "lambda") {
      j["lambda"] = lambda;
      j["method"] = method;
      j["seed"] = seed;
      j["budget_seconds"] = budget_seconds;
      j["draws"] = draws ? Json(*draws) : Json(nullptr);
      j["cache_dir"] = cache_dir;
      j["no_cache"] = no_cache;
    } else if (subcommand == "graph") {
      j["audit"] = audit;
      j["sample_rows"] = sample_rows;
      j["audit_max_n"] = audit_max_n;
      j["seed"] = seed;
    } else if (subcommand == "threshold") {
      j.update(Json{{"pmin", pmin}, {"pmax", pmax}, {"steps", steps}, {"trials", trials},
                    {"seed", seed}, {"omega", omega}});
    } else if (subcommand == "gap") {
      j["K"] = K ? Json(*K) : Json(nullptr);
      j["lambda_target"] = lambda_target ? Json(*lambda_target) : Json(nullptr);
      j["p"] = p ? Json(*p) : Json(nullptr);
      j["trials"] = trials;
      j["seed"] = seed;
    } else if (subcommand == "bounds") {
      j.update(Json{{"nmin", nmin}, {"nmax", nmax}, {"lambda", lambda},
                    {"exact_upto", exact_upto}, {"budget_seconds", budget_seconds},
                    {"cache_dir", cache_dir}});
    }
    j["out"] = out;
    return j;
  }
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The summary goes to `out` when the payload has its own file, else to `err`
// so that stdout carries only the payload.
struct Emitter {
  const RunConfig &cfg;
  std::ostream &out;
  std::ostream &err;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<std::string> warnings;
  std::ostringstream sink;

  Emitter(const RunConfig &c, std::ostream &o, std::ostream &e) : cfg(c), out(o), err(e) {}

  std::ostream &summary() {
    if (cfg.quiet)
      return sink;
    return cfg.out.empty() ? err : out;
  }

  Json meta() const {
    return Json{{"tool", "permcover"},
                {"version", kToolVersion},
                {"config", cfg.to_json()},
                {"timestamp", utc_timestamp()},
                {"wall_time_ms", std::chrono::duration<double, std::milli>(
                                     std::chrono::steady_clock::now() - start)
                                     .count()},
                {"warnings", warnings}};
  }

  void write_text(const std::string &path, const std::string &body) {
    std::ofstream f(path, std::ios::trunc);
    if (!f)
      throw std::runtime_error("cannot write " + path);
    f << body;
  }

  void emit_json(Json payload) {
    payload["meta"] = meta();
    const auto text = payload.dump(2) + "\n";
    if (cfg.out.empty())
      out << text;
    else
      write_text(cfg.out, text);
  }
};

inline void resolve_env(RunConfig &cfg, bool max_n_flag, bool workers_flag, bool cache_flag) {
  if (!max_n_flag)
    if (const char *env = std::getenv("PERMCOVER_MAX_N"))
      cfg.max_n = std::stoi(env);
  if (!workers_flag)
    cfg.workers = default_workers();
  if (!cache_flag)
    cfg.cache_dir = default_cache_dir().string();
}

inline int run_solve(RunConfig &cfg, std::ostream &out, std::ostream &err) {
  Emitter em{cfg, out, err};
  const auto method = parse_method(cfg.method);
  if (method == CoverMethod::external)
    throw InvalidInput("method 'external' cannot be solved for");
  const auto g = CoverageGraph::build(cfg.n, cfg.max_n, cfg.workers);
  CertificateCache cache(cfg.cache_dir);
  const bool seeded = method == CoverMethod::alteration || method == CoverMethod::lambda_sample;
  CacheKey key{cfg.n, cfg.lambda, method,
               seeded ? std::optional<std::uint64_t>(cfg.seed) : std::nullopt};
  // An overridden draw count is not part of the cache key; bypass the cache.
  const bool use_cache = !cfg.no_cache && !cfg.draws;

  std::optional<CoverCertificate> cert;
  if (use_cache) {
    cert = cache.load(key, g, &em.warnings);
    if (cert)
      em.warnings.push_back("certificate served from cache " + cache.path_for(key).string());
  }
  if (!cert) {
    switch (method) {
    case CoverMethod::exact: cert = exact_min_cover(g, cfg.lambda, cfg.budget_seconds); break;
    case CoverMethod::greedy: cert = greedy_cover(g, cfg.lambda); break;
    case CoverMethod::alteration:
      if (cfg.lambda != 1)
        throw InvalidInput("alteration covers have lambda = 1");
      cert = alteration_cover(g, cfg.seed, cfg.draws);
      break;
    case CoverMethod::lambda_sample: cert = lambda_cover(g, cfg.lambda, cfg.seed, cfg.draws); break;
    case CoverMethod::external: break;
    }
    if (use_cache)
      cache.store(*cert);
  }
  const auto check = verify_cover(g, cert->selected, cert->lambda);
  auto payload = to_json(*cert);
  payload["verified"] = check.ok;
  em.summary() << "n=" << cert->n << " lambda=" << cert->lambda << " method="
               << to_string(cert->method) << " status=" << to_string(cert->status)
               << " size=" << cert->size << " lower_bound=" << cert->lower_bound
               << " verified=" << (check.ok ? "yes" : "NO") << "\n";
  em.emit_json(std::move(payload));
  return check.ok ? kOk : kViolation;
}

inline int run_lambda(RunConfig &cfg, std::ostream &out, std::ostream &err) {
  Emitter em{cfg, out, err};
  const auto g = CoverageGraph::build(cfg.n, cfg.max_n, cfg.workers);
  CertificateCache cache(cfg.cache_dir);
  CacheKey key{cfg.n, cfg.lambda, CoverMethod::lambda_sample, cfg.seed};
  std::optional<CoverCertificate> cert;
  const bool use_cache = !cfg.no_cache && !cfg.draws;
  if (use_cache)
    cert = cache.load(key, g, &em.warnings);
  if (!cert) {
    cert = lambda_cover(g, cfg.lambda, cfg.seed, cfg.draws);
    if (use_cache)
      cache.store(*cert);
  }
  const auto check = verify_cover(g, cert->selected, cert->lambda);
  auto payload = to_json(*cert);
  payload["verified"] = check.ok;
  payload["pigeonhole_lower"] = pigeonhole_lower(cfg.n, cfg.lambda);
  payload["thm3_upper"] = thm3_upper(cfg.n, cfg.lambda);
  em.summary() << "lambda-cover n=" << cfg.n << " lambda=" << cfg.lambda << " size=" << cert->size
               << " (draws " << cert->initial_draws.value_or(0) << ", bound "
               << thm3_upper(cfg.n, cfg.lambda) << ") verified=" << (check.ok ? "yes" : "NO")
               << "\n";
  em.emit_json(std::move(payload));
  return check.ok ? kOk : kViolation;
}

inline Json graph_identities(const CoverageGraph &g, bool &ok) {
  const int n = g.n();
  std::uint64_t min_deg = UINT64_MAX, max_deg = 0, sum_patterns = 0, sum_succ = 0;
  bool succession_ok = true;
  for (std::uint64_t pi = 0; pi < g.num_patterns(); ++pi) {
    const auto d = g.cover_list(pi).size();
    min_deg = std::min<std::uint64_t>(min_deg, d);
    max_deg = std::max<std::uint64_t>(max_deg, d);
  }
  for (std::uint64_t r = 0; r < g.num_covers(); ++r) {
    const auto s = static_cast<std::uint64_t>(successions(unrank(n + 1, r)));
    const auto d = g.pattern_list(r).size();
    sum_patterns += d;
    sum_succ += s;
    succession_ok = succession_ok && d == static_cast<std::uint64_t>(n + 1) - s;
  }
  const auto nf = g.num_patterns();
  const auto m = static_cast<std::uint64_t>(g.cover_degree());
  const bool lemma1 = min_deg == m && max_deg == m;
  const bool aggregate = sum_patterns == nf * m && sum_succ == 2 * static_cast<std::uint64_t>(n) * nf;
  ok = lemma1 && succession_ok && aggregate;
  return Json{{"cover_degree_expected", m},
              {"cover_degree_min", min_deg},
              {"cover_degree_max", max_deg},
              {"cover_degree_uniform", lemma1},
              {"succession_identity_holds", succession_ok},
              {"sum_pattern_set_sizes", sum_patterns},
              {"sum_successions", sum_succ},
              {"aggregates_hold", aggregate}};
}

inline int run_graph(RunConfig &cfg, std::ostream &out, std::ostream &err) {
  Emitter em{cfg, out, err};
  const auto g = CoverageGraph::build(cfg.n, cfg.max_n, cfg.workers);
  bool identities_ok = true;
  Json payload;
  int code = kOk;
  if (cfg.audit) {
    JointReport rep = cfg.sample_rows > 0
                          ? lemma5_audit_sampled(g, cfg.sample_rows, cfg.seed, cfg.workers)
                          : lemma5_audit(g, cfg.audit_max_n, cfg.workers);
    payload = to_json(rep);
    em.summary() << "joint-coverage audit n=" << rep.n << (rep.exhaustive ? "" : " (sampled)")
                 << ": max_J=" << rep.max_J << " (bound " << rep.n * rep.n * rep.n
                 << "), max_C=" << rep.max_C << ", |C|=4 pairs=" << rep.four_cover_pairs
                 << ", adjacent-swap iff " << (rep.adjacent_swap_iff_holds ? "holds" : "FAILS")
                 << "\n";
    for (const auto &v : rep.violations)
      em.summary() << "  violation: " << v << "\n";
    if (!rep.violations.empty())
      code = kViolation;
  } else {
    payload = Json{{"n", g.n()}, {"num_patterns", g.num_patterns()}, {"num_covers", g.num_covers()}};
  }
  payload["identities"] = graph_identities(g, identities_ok);
  em.summary() << "graph n=" << g.n() << ": identities " << (identities_ok ? "hold" : "FAIL")
               << "\n";
  if (!identities_ok) {
    payload["violations"].push_back("coverage graph identity check failed");
    code = kViolation;
  }
  em.emit_json(std::move(payload));
  return code;
}

inline int run_threshold(RunConfig &cfg, std::ostream &out, std::ostream &err) {
  Emitter em{cfg, out, err};
  if (cfg.pmin < 0 || cfg.pmax > 1 || cfg.pmin > cfg.pmax)
    throw InvalidInput("need 0 <= pmin <= pmax <= 1");
  const auto g = CoverageGraph::build(cfg.n, cfg.max_n, cfg.workers);
  const auto grid = linear_grid(cfg.pmin, cfg.pmax, cfg.steps);
  const auto rep = threshold_sweep(g, grid, cfg.trials, cfg.seed, cfg.workers, cfg.omega);
  std::ostringstream csv;
  write_csv(csv, rep);
  if (cfg.out.empty()) {
    out << csv.str();
  } else {
    em.write_text(cfg.out, csv.str());
    Json meta = to_json(rep);
    meta.erase("rows");
    meta["meta"] = em.meta();
    em.write_text(cfg.out + ".meta.json", meta.dump(2) + "\n");
  }
  em.summary() << "threshold sweep n=" << cfg.n << ", " << rep.rows.size() << " points x "
               << cfg.trials << " trials; boundaries p_zero=" << rep.boundaries.p_zero
               << " p_one=" << rep.boundaries.p_one << "\n";
  return kOk;
}

inline int run_gap(RunConfig &cfg, std::ostream &out, std::ostream &err) {
  Emitter em{cfg, out, err};
  const int given = cfg.K.has_value() + cfg.lambda_target.has_value() + cfg.p.has_value();
  if (given != 1)
    throw InvalidInput("gap needs exactly one of --K, --lambda-target, --p");
  double p = 0;
  if (cfg.K)
    p = gap_p_paper(cfg.n, *cfg.K);
  else if (cfg.lambda_target)
    p = p_for_mean(cfg.n, *cfg.lambda_target);
  else
    p = *cfg.p;
  const auto g = CoverageGraph::build(cfg.n, cfg.max_n, cfg.workers);
  const auto rep = gap_experiment(g, p, cfg.trials, cfg.seed, cfg.workers, cfg.K);
  if (rep.low_trials_warning)
    em.warnings.push_back("fewer than " + std::to_string(kMinTrialsForTv) +
                          " trials; TV estimate is noisy");
  em.summary() << "gap n=" << cfg.n << " p=" << p << " lambda=" << rep.lambda_exact
               << " mean=" << rep.empirical_mean << " tv=" << rep.tv_to_poisson;
  if (rep.stein_chen)
    em.summary() << " stein-chen=" << rep.stein_chen->value;
  em.summary() << "\n";
  em.emit_json(to_json(rep));
  return kOk;
}

inline int run_bounds(RunConfig &cfg, std::ostream &out, std::ostream &err) {
  Emitter em{cfg, out, err};
  if (cfg.nmin < 1 || cfg.nmax < cfg.nmin || cfg.nmax > kMaxRankableLength - 1)
    throw InvalidInput("need 1 <= nmin <= nmax <= 19");
  CertificateCache cache(cfg.cache_dir);
  std::ostringstream csv;
  csv << "n,pigeonhole_lower,thm2_upper,thm2_leading,thm3_upper,best_known,best_known_status\n";
  for (int n = cfg.nmin; n <= cfg.nmax; ++n) {
    csv << n << ',' << pigeonhole_lower(n, cfg.lambda) << ',';
    if (n >= 2)
      csv << ::permcover::detail::format_double(thm2_upper(n));
    csv << ',';
    if (n >= 2)
      csv << ::permcover::detail::format_double(thm2_leading(n));
    csv << ',';
    if (n >= 3 && cfg.lambda >= 2)
      csv << ::permcover::detail::format_double(thm3_upper(n, cfg.lambda));
    csv << ',';
    std::optional<CoverCertificate> best;
    if (n <= std::min(cfg.max_n, kHardMaxGraphN) && cfg.lambda <= n * n + 1) {
      const auto entries = cache.entries_for(n, cfg.lambda);
      if (!entries.empty() || n <= cfg.exact_upto) {
        const auto g = CoverageGraph::build(n, cfg.max_n, cfg.workers);
        for (const auto &path : entries) {
          auto key = CertificateCache::parse_filename(path.filename().string());
          if (!key)
            continue;
          auto c = cache.load(*key, g, &em.warnings);
          if (c && c->status != CoverStatus::infeasible_budget &&
              (!best || c->size < best->size ||
               (c->size == best->size && c->status == CoverStatus::optimal)))
            best = std::move(c);
        }
        if (n <= cfg.exact_upto && (!best || best->status != CoverStatus::optimal)) {
          auto c = exact_min_cover(g, cfg.lambda, cfg.budget_seconds);
          if (!cfg.no_cache)
            cache.store(c);
          if (!best || c.size <= best->size)
            best = std::move(c);
        }
      }
    }
    if (best)
      csv << best->size << ',' << to_string(best->status);
    else
      csv << ',';
    csv << '\n';
  }
  if (cfg.out.empty()) {
    out << csv.str();
  } else {
    em.write_text(cfg.out, csv.str());
    em.write_text(cfg.out + ".meta.json", Json{{"meta", em.meta()}}.dump(2) + "\n");
  }
  return kOk;
}

} // namespace detail

/// Parses argv and runs the subcommand. Diagnostics go to `err`.
inline int dispatch(int argc, const char *const *argv, std::ostream &out = std::cout,
                    std::ostream &err = std::cerr) {
  RunConfig cfg;
  CLI::App app{"Coverings of S_n by (n+1)-permutations: exact, constructive and random",
               "permcover"};
  app.require_subcommand(1);
  auto *quiet = app.add_flag("--quiet,-q", cfg.quiet, "Suppress the human-readable summary");
  auto *workers = app.add_option("--workers", cfg.workers, "Worker threads")
                      ->check(CLI::PositiveNumber);
  auto *max_n = app.add_option("--max-n", cfg.max_n, "Largest n a coverage graph may be built for")
                    ->check(CLI::Range(1, kHardMaxGraphN));
  auto *cache_dir = app.add_option("--cache-dir", cfg.cache_dir, "Certificate cache directory");
  (void)quiet;

  auto *solve = app.add_subcommand("solve", "Construct a cover and emit its certificate");
  solve->add_option("--n", cfg.n, "Pattern length")->required()->check(CLI::PositiveNumber);
  solve->add_option("--lambda", cfg.lambda, "Required multiplicity")->check(CLI::PositiveNumber);
  solve->add_option("--method", cfg.method, "exact|greedy|alteration|lambda")
      ->check(CLI::IsMember({"exact", "greedy", "alteration", "lambda"}));
  solve->add_option("--seed", cfg.seed, "RNG seed for randomized methods");
  solve->add_option("--budget", cfg.budget_seconds, "Exact solver time budget (seconds)")
      ->check(CLI::PositiveNumber);
  solve->add_option("--draws", cfg.draws, "Override the initial random draw count Y");
  solve->add_option("--out", cfg.out, "Certificate JSON path");
  solve->add_flag("--no-cache", cfg.no_cache, "Neither read nor write the certificate cache");

  auto *lambda = app.add_subcommand("lambda", "Randomized lambda-cover with its analytic bound");
  lambda->add_option("--n", cfg.n, "Pattern length")->required()->check(CLI::Range(3, 10));
  lambda->add_option("--lambda", cfg.lambda, "Multiplicity (>= 2)")->check(CLI::Range(2, 1000));
  lambda->add_option("--seed", cfg.seed, "RNG seed");
  lambda->add_option("--draws", cfg.draws, "Override the initial draw count Y");
  lambda->add_option("--out", cfg.out, "Certificate JSON path");
  lambda->add_flag("--no-cache", cfg.no_cache, "Neither read nor write the certificate cache");

  auto *graph = app.add_subcommand("graph", "Coverage graph identities and joint-coverage audit");
  graph->add_option("--n", cfg.n, "Pattern length")->required()->check(CLI::PositiveNumber);
  graph->add_flag("--audit", cfg.audit, "Run the joint-coverage audit");
  graph->add_option("--sample", cfg.sample_rows, "Audit only this many random patterns");
  graph->add_option("--audit-max-n", cfg.audit_max_n, "Largest n for the exhaustive audit");
  graph->add_option("--seed", cfg.seed, "Seed for the sampled audit");
  graph->add_option("--out", cfg.out, "Report JSON path");

  auto *threshold = app.add_subcommand("threshold", "Coverage probability sweep over p");
  threshold->add_option("--n", cfg.n, "Pattern length")->required()->check(CLI::PositiveNumber);
  threshold->add_option("--pmin", cfg.pmin, "Smallest p");
  threshold->add_option("--pmax", cfg.pmax, "Largest p");
  threshold->add_option("--steps", cfg.steps, "Grid points")->check(CLI::PositiveNumber);
  threshold->add_option("--trials", cfg.trials, "Trials per grid point")->check(CLI::PositiveNumber);
  threshold->add_option("--seed", cfg.seed, "Master seed");
  threshold->add_option("--omega", cfg.omega, "omega used for the reported boundaries")
      ->check(CLI::PositiveNumber);
  threshold->add_option("--out", cfg.out, "CSV path (config goes to <out>.meta.json)");

  auto *gap = app.add_subcommand("gap", "Distribution of the uncovered count vs Poisson");
  gap->add_option("--n", cfg.n, "Pattern length")->required()->check(CLI::PositiveNumber);
  auto *k_opt = gap->add_option("--K", cfg.K, "Gap parameter K");
  auto *t_opt = gap->add_option("--lambda-target", cfg.lambda_target, "Target E(X)");
  auto *p_opt = gap->add_option("--p", cfg.p, "Selection probability")->check(CLI::Range(0.0, 1.0));
  k_opt->excludes(t_opt)->excludes(p_opt);
  t_opt->excludes(p_opt);
  gap->add_option("--trials", cfg.trials, "Trials")->check(CLI::PositiveNumber);
  gap->add_option("--seed", cfg.seed, "Master seed");
  gap->add_option("--out", cfg.out, "Report JSON path");

  auto *bounds = app.add_subcommand("bounds", "Table of analytic bounds and best known covers");
  bounds->add_option("--nmin", cfg.nmin, "First n");
  bounds->add_option("--nmax", cfg.nmax, "Last n");
  bounds->add_option("--lambda", cfg.lambda, "Multiplicity")->check(CLI::PositiveNumber);
  bounds->add_option("--exact-upto", cfg.exact_upto, "Run the exact solver for n up to this");
  bounds->add_option("--budget", cfg.budget_seconds, "Exact solver budget per n (seconds)")
      ->check(CLI::PositiveNumber);
  bounds->add_flag("--no-cache", cfg.no_cache, "Do not write solved certificates to the cache");
  bounds->add_option("--out", cfg.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError &e) {
    err << "permcover: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    detail::resolve_env(cfg, max_n->count() > 0, workers->count() > 0, cache_dir->count() > 0);
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (cfg.subcommand == "solve")
      return detail::run_solve(cfg, out, err);
    if (cfg.subcommand == "lambda") {
      if (cfg.lambda < 2)
        cfg.lambda = 2;
      return detail::run_lambda(cfg, out, err);
    }
    if (cfg.subcommand == "graph")
      return detail::run_graph(cfg, out, err);
    if (cfg.subcommand == "threshold")
      return detail::run_threshold(cfg, out, err);
    if (cfg.subcommand == "gap")
      return detail::run_gap(cfg, out, err);
    if (cfg.subcommand == "bounds")
      return detail::run_bounds(cfg, out, err);
  } catch (const ResourceLimit &e) {
    err << "permcover: resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const InvalidInput &e) {
    err << "permcover: " << e.what() << "\n";
    return kUsage;
  } catch (const RangeError &e) {
    err << "permcover: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception &e) {
    err << "permcover: error: " << e.what() << "\n";
    return kViolation;
  }
  return kUsage;
}

} // namespace permcover::cli
