#pragma once

// JSON and CSV encodings of certificates and reports.

#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cover.hpp"
#include "coverage_graph.hpp"
#include "threshold.hpp"

namespace permcover {

inline constexpr const char *kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

inline Json to_json(const CoverCertificate &c) {
  Json selected = Json::array();
  for (const auto &p : c.selected.members())
    selected.push_back(p.to_string());
  Json j;
  j["n"] = c.n;
  j["lambda"] = c.lambda;
  j["method"] = to_string(c.method);
  j["status"] = to_string(c.status);
  j["size"] = c.size;
  j["lower_bound"] = c.lower_bound;
  j["selected"] = std::move(selected);
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  if (c.initial_draws)
    j["initial_draws"] = *c.initial_draws;
  j["wall_time_ms"] = c.wall_time_ms;
  return j;
}

/// Parses the certificate schema; throws InvalidInput on any structural problem.
inline CoverCertificate certificate_from_json(const Json &j) {
  try {
    CoverCertificate c;
    c.n = j.at("n").get<int>();
    c.lambda = j.at("lambda").get<int>();
    c.method = parse_method(j.at("method").get<std::string>());
    c.status = parse_status(j.at("status").get<std::string>());
    c.lower_bound = j.at("lower_bound").get<std::uint64_t>();
    if (c.n < 1 || c.n + 1 > kMaxRankableLength)
      throw InvalidInput("certificate n out of range");
    c.selected = PermSetBitmap(c.n + 1);
    for (const auto &s : j.at("selected")) {
      const auto p = Permutation::parse(s.get<std::string>());
      if (p.size() != c.n + 1)
        throw InvalidInput("certificate entry '" + s.get<std::string>() + "' has wrong length");
      c.selected.set(rank(p).r);
    }
    c.size = c.selected.count();
    if (c.size != j.at("size").get<std::uint64_t>())
      throw InvalidInput("certificate size does not match its selection");
    if (j.contains("seed") && !j.at("seed").is_null())
      c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("initial_draws"))
      c.initial_draws = j.at("initial_draws").get<std::uint64_t>();
    c.wall_time_ms = j.value("wall_time_ms", 0.0);
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw InvalidInput(std::string("malformed certificate: ") + e.what());
  }
}

inline Json to_json(const SwapInterpretation &s) {
  return Json{{"name", s.name},
              {"swap_pairs", s.swap_pairs},
              {"swap_implies_four", s.swap_implies_four},
              {"four_implies_swap", s.four_implies_swap},
              {"iff_holds", s.iff_holds()},
              {"mismatches", s.mismatches}};
}

inline Json to_json(const JointReport &r) {
  Json j;
  j["n"] = r.n;
  j["exhaustive"] = r.exhaustive;
  j["rows_audited"] = r.rows_audited;
  j["max_J"] = r.max_J;
  j["argmax_J"] = r.argmax_J;
  j["max_J_bound"] = static_cast<std::uint64_t>(r.n) * r.n * r.n;
  j["max_C"] = r.max_C;
  j["four_cover_pair_count"] = r.four_cover_pairs;
  j["adjacent_swap_iff_holds"] = r.adjacent_swap_iff_holds;
  j["interpretations"] = Json::array({to_json(r.position_adjacent),
                                      to_json(r.position_and_value_adjacent)});
  Json fours = Json::array();
  for (const auto &[a, b] : r.four_cover_examples)
    fours.push_back(Json::array({a, b}));
  j["four_cover_examples"] = std::move(fours);
  j["counterexample_count"] = r.counterexample_count;
  Json ce = Json::array();
  for (const auto &m : r.counterexamples)
    ce.push_back(Json{{"pi", m.pi},
                      {"pi2", m.pi2},
                      {"common_covers", m.common_covers},
                      {"adjacent_position_swap", m.position_adjacent_swap},
                      {"swapped_values_adjacent", m.values_also_adjacent}});
  j["counterexamples"] = std::move(ce);
  j["violations"] = r.violations;
  return j;
}

inline Json to_json(const ProportionEstimate &e) {
  return Json{{"successes", e.successes},
              {"trials", e.trials},
              {"estimate", e.estimate},
              {"ci_lo", e.ci_lo},
              {"ci_hi", e.ci_hi}};
}

inline Json to_json(const GapReport &r) {
  Json j;
  j["n"] = r.n;
  j["p"] = r.p;
  j["K_nominal"] = r.K_nominal ? Json(*r.K_nominal) : Json(nullptr);
  j["trials"] = r.trials;
  j["seed"] = r.master_seed;
  j["lambda_exact"] = r.lambda_exact;
  Json pmf = Json::object();
  for (auto [k, f] : r.empirical_pmf)
    pmf[std::to_string(k)] = f;
  j["empirical_pmf"] = std::move(pmf);
  Json counts = Json::object();
  for (auto [k, c] : r.counts)
    counts[std::to_string(k)] = c;
  j["counts"] = std::move(counts);
  j["empirical_mean"] = r.empirical_mean;
  j["empirical_variance"] = r.empirical_variance;
  j["tv_to_poisson"] = r.tv_to_poisson;
  j["tv_standard_error"] = r.tv_standard_error;
  j["poisson_truncated_mass"] = r.poisson_truncated_mass;
  j["cover_probability"] = to_json(r.cover_probability);
  if (r.stein_chen) {
    j["exact_variance"] = r.stein_chen->variance;
    j["stein_chen_bound"] = r.stein_chen->value;
    j["stein_chen_bound_raw"] = r.stein_chen->raw;
  } else {
    j["exact_variance"] = nullptr;
    j["stein_chen_bound"] = nullptr;
    j["stein_chen_bound_raw"] = nullptr;
  }
  j["ratio_to_sqrt2pi_exp_minus_K"] =
      r.ratio_to_asymptotic_minus ? Json(*r.ratio_to_asymptotic_minus) : Json(nullptr);
  j["ratio_to_sqrt2pi_exp_plus_K"] =
      r.ratio_to_asymptotic_plus ? Json(*r.ratio_to_asymptotic_plus) : Json(nullptr);
  j["low_trials_warning"] = r.low_trials_warning;
  return j;
}

namespace detail {

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

} // namespace detail

inline constexpr const char *kSweepCsvHeader = "p,covers,trials,phat,ci_lo,ci_hi,lambda_exact";

inline void write_csv(std::ostream &os, const SweepReport &rep) {
  using detail::format_double;
  os << kSweepCsvHeader << '\n';
  for (const auto &row : rep.rows)
    os << format_double(row.p) << ',' << row.cover.successes << ',' << row.cover.trials << ','
       << format_double(row.cover.estimate) << ',' << format_double(row.cover.ci_lo) << ','
       << format_double(row.cover.ci_hi) << ',' << format_double(row.lambda_exact) << '\n';
}

inline Json to_json(const SweepReport &rep) {
  Json rows = Json::array();
  for (const auto &row : rep.rows)
    rows.push_back(Json{{"p", row.p},
                        {"cover", to_json(row.cover)},
                        {"lambda_exact", row.lambda_exact}});
  return Json{{"n", rep.n},
              {"trials", rep.trials},
              {"seed", rep.master_seed},
              {"omega", rep.omega},
              {"p_zero", rep.boundaries.p_zero},
              {"p_one", rep.boundaries.p_one},
              {"rows", std::move(rows)}};
}

} // namespace permcover
