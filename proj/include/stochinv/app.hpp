#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stochinv/checker.hpp"
#include "stochinv/generator.hpp"
#include "stochinv/io.hpp"
#include "stochinv/simulator.hpp"

namespace stochinv {

enum ExitCode : int { kExitInvariant = 0, kExitError = 1, kExitNotInvariant = 2, kExitInconclusive = 3 };

inline int exit_code(Aggregate a) {
  switch (a) {
    case Aggregate::Invariant: return kExitInvariant;
    case Aggregate::NotInvariant: return kExitNotInvariant;
    case Aggregate::Inconclusive: return kExitInconclusive;
  }
  return kExitError;
}

struct CrosscheckConfig {
  double probe_width = 0.5;
  double probe_tol = 1e-6;
  std::size_t probe_points = 8;
  std::size_t starts = 4;
};

/// Parsed configuration. Command-line flags override file values.
struct RunConfig {
  int schema_version = kSchemaVersion;
  std::string command;
  std::optional<json> model;
  std::optional<json> domain;
  std::size_t points = 64;
  CheckerConfig checker;
  SimConfig sim;
  std::vector<Vec> x0;
  std::vector<double> deltas{0.01, 0.05, 0.1};
  std::string csv;
  double identity_radius = 1.0;
  CrosscheckConfig crosscheck;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out;
};

namespace detail {

inline void parse_checker(const json& j, RunConfig& rc) {
  check_keys(j, {"points", "tol_support", "tol_kernel", "tol_drift", "active_tol", "rank_tol", "interior_points", "top_k"},
             "checker");
  if (j.contains("points")) rc.points = as_count(j["points"], "checker.points");
  if (j.contains("tol_support")) rc.checker.tol_support = as_number(j["tol_support"], "checker.tol_support");
  if (j.contains("tol_kernel")) rc.checker.tol_kernel = as_number(j["tol_kernel"], "checker.tol_kernel");
  if (j.contains("tol_drift")) rc.checker.tol_drift = as_number(j["tol_drift"], "checker.tol_drift");
  if (j.contains("active_tol")) rc.checker.active_tol = as_number(j["active_tol"], "checker.active_tol");
  if (j.contains("rank_tol")) rc.checker.rank_tol = as_number(j["rank_tol"], "checker.rank_tol");
  if (j.contains("interior_points")) rc.checker.interior_points = as_count(j["interior_points"], "checker.interior_points");
  if (j.contains("top_k")) rc.checker.top_k = as_count(j["top_k"], "checker.top_k");
}

inline void parse_simulation(const json& j, RunConfig& rc) {
  check_keys(j, {"T", "dt", "paths", "scheme", "x0", "deltas", "csv"}, "simulation");
  if (j.contains("T")) rc.sim.T = as_number(j["T"], "simulation.T");
  if (j.contains("dt")) rc.sim.dt = as_number(j["dt"], "simulation.dt");
  if (j.contains("paths")) rc.sim.n_paths = as_count(j["paths"], "simulation.paths");
  if (j.contains("scheme")) {
    const std::string s = j["scheme"].get<std::string>();
    if (s == "euler") rc.sim.scheme = Scheme::Euler;
    else if (s == "full_truncation") rc.sim.scheme = Scheme::FullTruncation;
    else schema_error("simulation.scheme: expected 'euler' or 'full_truncation'");
  }
  if (j.contains("x0")) {
    const json& xs = j["x0"];
    if (!xs.is_array() || xs.empty()) schema_error("simulation.x0: expected a non-empty array");
    rc.x0.clear();
    if (xs[0].is_array()) {
      for (std::size_t i = 0; i < xs.size(); ++i) rc.x0.push_back(as_vec(xs[i], "simulation.x0[" + std::to_string(i) + "]"));
    } else {
      rc.x0.push_back(as_vec(xs, "simulation.x0"));
    }
  }
  if (j.contains("deltas")) {
    const Vec d = as_vec(j["deltas"], "simulation.deltas");
    if (d.size() == 0) schema_error("simulation.deltas: expected at least one value");
    rc.deltas.assign(d.data(), d.data() + d.size());
  }
  if (j.contains("csv")) rc.csv = j["csv"].get<std::string>();
}

inline void parse_crosscheck(const json& j, RunConfig& rc) {
  check_keys(j, {"probe_width", "probe_tol", "probe_points", "starts"}, "crosscheck");
  if (j.contains("probe_width")) rc.crosscheck.probe_width = as_number(j["probe_width"], "crosscheck.probe_width");
  if (j.contains("probe_tol")) rc.crosscheck.probe_tol = as_number(j["probe_tol"], "crosscheck.probe_tol");
  if (j.contains("probe_points")) rc.crosscheck.probe_points = as_count(j["probe_points"], "crosscheck.probe_points");
  if (j.contains("starts")) rc.crosscheck.starts = as_count(j["starts"], "crosscheck.starts");
}

}  // namespace detail

/// Validates a config document against schema version 1.
inline RunConfig parse_config(const json& j) {
  detail::check_keys(j, {"schema_version", "command", "model", "domain", "checker", "simulation", "crosscheck",
                         "convert", "seed", "threads", "out"},
                     "");
  RunConfig rc;
  if (!j.contains("schema_version")) detail::schema_error("missing key 'schema_version'");
  const double ver = detail::as_number(j["schema_version"], "schema_version");
  if (ver != kSchemaVersion)
    detail::schema_error("schema_version: unsupported version " + detail::format_double(ver) + " (expected " +
                         std::to_string(kSchemaVersion) + ")");
  if (j.contains("command")) rc.command = j["command"].get<std::string>();
  if (j.contains("model")) rc.model = j["model"];
  if (j.contains("domain")) rc.domain = j["domain"];
  if (j.contains("checker")) detail::parse_checker(j["checker"], rc);
  if (j.contains("simulation")) detail::parse_simulation(j["simulation"], rc);
  if (j.contains("crosscheck")) detail::parse_crosscheck(j["crosscheck"], rc);
  if (j.contains("convert")) {
    detail::check_keys(j["convert"], {"identity_radius"}, "convert");
    if (j["convert"].contains("identity_radius"))
      rc.identity_radius = detail::as_number(j["convert"]["identity_radius"], "convert.identity_radius");
  }
  if (j.contains("seed")) rc.seed = detail::as_count(j["seed"], "seed");
  if (j.contains("threads")) rc.threads = static_cast<unsigned>(detail::as_count(j["threads"], "threads"));
  if (j.contains("out")) rc.out = j["out"].get<std::string>();
  return rc;
}

inline RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Schema, std::string("malformed JSON config: ") + e.what());
  }
  try {
    return parse_config(j);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("config type error: ") + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Model and domain resolved from a config.
struct Problem {
  ModelSpec spec;
  ClosedDomain domain = ClosedDomain::whole_space(1);
};

inline Problem resolve(const RunConfig& rc) {
  if (!rc.model) detail::schema_error("missing key 'model'");
  Problem p;
  try {
    p.spec = model_from_json(*rc.model);
    if (rc.domain) {
      p.domain = domain_from_json(*rc.domain);
    } else if (p.spec.library) {
      p.domain = p.spec.library->domain;
    } else {
      detail::schema_error("missing key 'domain' (required unless the model comes from the library)");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("config type error: ") + e.what());
  }
  if (p.domain.dim() != p.spec.model.dim)
    throw Error(ErrorCode::DimensionMismatch, "model and domain dimensions differ");
  return p;
}

inline CheckerConfig effective_checker(const RunConfig& rc) {
  CheckerConfig c = rc.checker;
  c.seed = rc.seed;
  c.threads = std::max(1u, rc.threads);
  return c;
}

inline SimConfig effective_sim(const RunConfig& rc) {
  SimConfig s = rc.sim;
  s.seed = rc.seed;
  s.threads = std::max(1u, rc.threads);
  return s;
}

struct CommandResult {
  int exit = kExitInvariant;
  std::string report;  // canonical JSON
};

inline json problem_json(const Problem& p) {
  json j;
  j["model"] = p.spec.model.name;
  j["source"] = p.spec.source;
  j["dim"] = p.spec.model.dim;
  j["domain"] = to_string(p.domain.kind());
  if (p.spec.library) {
    json params = json::object();
    for (const auto& [k, v] : p.spec.library->params) params[k] = v;
    j["params"] = std::move(params);
    j["oracle"] = p.spec.library->oracle ? "invariant" : "not-invariant";
  }
  return j;
}

inline CommandResult run_check(const RunConfig& rc) {
  const Problem p = resolve(rc);
  const CheckerConfig cfg = effective_checker(rc);
  const InvarianceReport rep = p.spec.triplet ? check_triplet(*p.spec.triplet, p.domain, rc.points, cfg)
                                              : check_domain(p.spec.model, p.domain, rc.points, cfg);
  json j = to_json(rep);
  j["problem"] = problem_json(p);
  j["schema_version"] = kSchemaVersion;
  return {exit_code(rep.aggregate), canonical_dump(j)};
}

namespace detail {

inline std::vector<Vec> default_starts(const Problem& p, const RunConfig& rc, std::size_t n) {
  if (!rc.x0.empty()) {
    for (const auto& x : rc.x0) require_dim(x, p.spec.model.dim, "simulation.x0");
    return rc.x0;
  }
  std::vector<Vec> s;
  if (!p.domain.is_whole_space()) {
    for (auto& v : p.domain.boundary_vertices()) {
      if (s.size() >= n) break;
      s.push_back(std::move(v));
    }
    if (s.size() < n)
      for (auto& v : p.domain.sample_boundary(n - s.size(), rc.seed)) s.push_back(std::move(v));
  } else {
    s.push_back(Vec::Zero(p.spec.model.dim));
  }
  return s;
}

}  // namespace detail

inline CommandResult run_simulate(const RunConfig& rc) {
  const Problem p = resolve(rc);
  const SimConfig sim = effective_sim(rc);
  const std::vector<Vec> starts = detail::default_starts(p, rc, 1);
  const PathStats st = violation_statistics(p.spec.model, p.domain, starts, sim, rc.deltas);
  if (!rc.csv.empty()) {
    std::ofstream csv(rc.csv);
    if (!csv) throw Error(ErrorCode::InvalidArgument, "cannot open CSV output '" + rc.csv + "'");
    write_path_csv(csv, simulate_path(p.spec.model, starts.front(), sim, 0, &p.domain));
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["problem"] = problem_json(p);
  json starts_j = json::array();
  for (const auto& s : starts) starts_j.push_back(to_json(s));
  j["starts"] = std::move(starts_j);
  j["scheme"] = to_string(sim.scheme);
  j["T"] = sim.T;
  j["seed"] = sim.seed;
  j["statistics"] = to_json(st);
  return {kExitInvariant, canonical_dump(j)};
}

inline CommandResult run_convert(const RunConfig& rc) {
  if (!rc.model) detail::schema_error("missing key 'model'");
  const ModelSpec spec = model_from_json(*rc.model);
  json j = spec.triplet ? model_json_from_triplet(*spec.triplet) : triplet_json_from_model(spec.model, rc.identity_radius);
  j["schema_version"] = kSchemaVersion;
  return {kExitInvariant, canonical_dump(j)};
}

/// Checker verdict, maximum-principle probes and violation statistics at dt
/// and dt/2 in one report. Disagreement rules: an invariant verdict
/// disagrees when a probe exceeds probe_tol or the violation fraction at the
/// middle delta grows by more than half (plus 1e-3) under dt halving; a
/// not-invariant verdict disagrees when no probe exceeds probe_tol and no
/// path leaves D by more than the smallest delta.
inline CommandResult run_crosscheck(const RunConfig& rc) {
  const Problem p = resolve(rc);
  const CheckerConfig cfg = effective_checker(rc);
  const JumpDiffusionModel& model = p.spec.model;
  const InvarianceReport rep = p.spec.triplet ? check_triplet(*p.spec.triplet, p.domain, rc.points, cfg)
                                              : check_domain(model, p.domain, rc.points, cfg);

  // probe sites: offenders first, then boundary points in plan order
  std::vector<std::size_t> sites = rep.worst_offenders;
  for (std::size_t i = 0; i < rep.verdicts.size() && sites.size() < rc.crosscheck.probe_points; ++i) {
    if (rep.verdicts[i].stratum == PointStratum::Interior) continue;
    if (std::find(sites.begin(), sites.end(), i) == sites.end()) sites.push_back(i);
  }
  if (sites.size() > rc.crosscheck.probe_points) sites.resize(rc.crosscheck.probe_points);
  json probes = json::array();
  double probe_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i : sites) {
    const PointVerdict& v = rep.verdicts[i];
    for (const auto& g : v.generators) {
      json pj;
      pj["x"] = to_json(v.x);
      pj["u"] = to_json(g.u);
      try {
        const ProbeResult pr = maximum_principle_probe(model, p.domain, v.x, g.u, rc.crosscheck.probe_width, rc.seed);
        pj["value"] = pr.value;
        pj["width"] = pr.width;
        pj["skipped"] = pr.skipped;
        if (!pr.skipped) probe_max = std::max(probe_max, pr.value);
      } catch (const Error& e) {
        pj["skipped"] = true;
        pj["error"] = e.what();
      }
      probes.push_back(std::move(pj));
    }
  }

  std::vector<Vec> starts;
  if (!rc.x0.empty()) {
    starts = detail::default_starts(p, rc, rc.crosscheck.starts);
  } else {
    for (std::size_t i : sites) {
      if (starts.size() >= rc.crosscheck.starts) break;
      starts.push_back(rep.verdicts[i].x);
    }
    if (starts.empty()) starts = detail::default_starts(p, rc, rc.crosscheck.starts);
  }
  SimConfig coarse = effective_sim(rc);
  SimConfig fine = coarse;
  fine.dt = coarse.dt / 2.0;
  const PathStats st_coarse = violation_statistics(model, p.domain, starts, coarse, rc.deltas);
  const PathStats st_fine = violation_statistics(model, p.domain, starts, fine, rc.deltas);

  const bool probe_positive = probe_max > rc.crosscheck.probe_tol;
  const std::size_t mid = rc.deltas.size() / 2;
  const bool grows = st_fine.violation_fraction[mid] > 1.5 * st_coarse.violation_fraction[mid] + 1e-3;
  const bool any_exit = st_coarse.exit_fraction.front() > 0.0 || st_fine.exit_fraction.front() > 0.0;
  json reasons = json::array();
  if (rep.aggregate == Aggregate::Invariant) {
    if (probe_positive) reasons.push_back("probe exceeds tolerance at an invariant verdict");
    if (grows) reasons.push_back("violation fraction grows under dt refinement");
  } else if (rep.aggregate == Aggregate::NotInvariant) {
    if (!probe_positive && !any_exit) reasons.push_back("no positive probe and no exit for a not-invariant verdict");
  }

  json j;
  j["schema_version"] = kSchemaVersion;
  j["problem"] = problem_json(p);
  j["checker"] = to_json(rep, false);
  j["probe"] = {{"sites", std::move(probes)},
                {"max", std::isfinite(probe_max) ? json(probe_max) : json(nullptr)},
                {"tol", rc.crosscheck.probe_tol},
                {"width", rc.crosscheck.probe_width}};
  json starts_j = json::array();
  for (const auto& s : starts) starts_j.push_back(to_json(s));
  j["simulation"] = {{"scheme", to_string(coarse.scheme)},
                     {"T", coarse.T},
                     {"starts", std::move(starts_j)},
                     {"coarse", to_json(st_coarse)},
                     {"fine", to_json(st_fine)},
                     {"note", "Euler scheme chosen by the toolkit; the violation metric compares dt and dt/2 to "
                              "separate discretization exits from genuine ones"}};
  j["disagreement"] = !reasons.empty();
  j["reasons"] = std::move(reasons);
  return {exit_code(rep.aggregate), canonical_dump(j)};
}

inline CommandResult run_command(const std::string& command, const RunConfig& rc) {
  if (command == "check") return run_check(rc);
  if (command == "simulate") return run_simulate(rc);
  if (command == "convert") return run_convert(rc);
  if (command == "crosscheck") return run_crosscheck(rc);
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + command + "'");
}

}  // namespace stochinv
