#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/model.hpp"
#include "stochinv/parallel.hpp"

namespace stochinv {

/// Tolerances are relative factors: tol_support * (1 + |x|),
/// tol_kernel * (1 + |C(x)|), tol_drift * (1 + |b(x)|), active_tol * (1 + |x|).
struct CheckerConfig {
  double tol_support = 1e-8;
  double tol_kernel = 1e-8;
  double tol_drift = 1e-8;
  double active_tol = 1e-8;
  std::optional<double> rank_tol;
  std::size_t interior_points = 32;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t top_k = 5;
};

struct SupportCheck {
  double worst_distance = 0.0;  // max_k dist(x + rho(x, z_k), D)
  long worst_atom = -1;
  double tol = 0.0;
  bool pass = true;
};

/// Conditions (b)-(d) at one normal generator u.
struct GeneratorCheck {
  Vec u;
  double integrability = 0.0;  // sum_k w_k |<u, rho_k>| (+ tail bound when truncated)
  bool integrability_finite = true;
  double kernel_residual = 0.0;  // |C(x) u|
  double kernel_tol = 0.0;
  bool kernel_pass = true;
  double drift_margin = 0.0;  // <u, compensated drift>
  double drift_tol = 0.0;
  bool drift_pass = true;
};

enum class PointStratum { Vertex, Boundary, Interior };

inline const char* to_string(PointStratum s) {
  switch (s) {
    case PointStratum::Vertex: return "vertex";
    case PointStratum::Boundary: return "boundary";
    case PointStratum::Interior: return "interior";
  }
  return "unknown";
}

struct PointVerdict {
  Vec x;
  PointStratum stratum = PointStratum::Boundary;
  bool cone_exact = true;
  SupportCheck support;
  std::vector<GeneratorCheck> generators;
  /// Conditions evaluated against truncated jump data.
  bool approximate = false;
  bool pass = true;
  /// Failure that does not depend on jump truncation.
  bool definite_failure = false;
  /// Largest excess of a condition over its tolerance (<= 0 when passing).
  double violation = 0.0;
};

enum class Aggregate { Invariant, NotInvariant, Inconclusive };

inline const char* to_string(Aggregate a) {
  switch (a) {
    case Aggregate::Invariant: return "invariant";
    case Aggregate::NotInvariant: return "not-invariant";
    case Aggregate::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct ReportMeta {
  std::size_t requested_points = 0;
  std::size_t boundary_points = 0;
  std::size_t vertex_points = 0;
  std::size_t interior_points = 0;
  /// cone size (number of generators) -> point count
  std::map<std::size_t, std::size_t> strata;
  bool fields_affine = false;
  bool domain_polyhedral = false;
  bool cones_exact = true;
  bool truncated_jumps = false;
  std::string model_name;
  std::string domain_kind;
};

struct InvarianceReport {
  std::vector<PointVerdict> verdicts;
  Aggregate aggregate = Aggregate::Invariant;
  std::vector<std::size_t> worst_offenders;  // indices into verdicts
  CheckerConfig config;
  ReportMeta meta;
};

namespace detail {

/// Everything the four conditions need at one point.
struct PointInputs {
  Vec x;
  NormalCone cone;
  Vec drift;                        // b(x)
  Mat covariance;                   // C(x)
  std::function<Vec()> correction;  // sum_j DC^j (C C^+)^j, evaluated lazily
  std::vector<Vec> jumps;           // rho(x, z_k) or z_k(x)
  std::vector<double> weights;
  bool truncated = false;
  double tail_bound = 0.0;
};

inline PointVerdict evaluate_conditions(const PointInputs& in, const ClosedDomain& domain, const CheckerConfig& cfg) {
  PointVerdict v;
  v.x = in.x;
  v.cone_exact = in.cone.is_polyhedral;
  v.approximate = in.truncated;
  const double xn = in.x.norm();

  // (a) every jump lands in D
  v.support.tol = cfg.tol_support * (1.0 + xn);
  for (std::size_t k = 0; k < in.jumps.size(); ++k) {
    const double dist = domain.distance(Vec(in.x + in.jumps[k]));
    if (v.support.worst_atom < 0 || dist > v.support.worst_distance) {
      v.support.worst_distance = dist;
      v.support.worst_atom = static_cast<long>(k);
    }
  }
  v.support.pass = v.support.worst_distance <= v.support.tol;
  double violation = v.support.worst_distance - v.support.tol;
  bool definite = false;

  if (!in.cone.interior()) {
    Vec mean_jump = Vec::Zero(in.x.size());
    for (std::size_t k = 0; k < in.jumps.size(); ++k) mean_jump += in.weights[k] * in.jumps[k];
    const Vec compensated = in.drift - mean_jump - 0.5 * in.correction();
    const double cnorm = op_norm(0.5 * (in.covariance + in.covariance.transpose()));
    for (const auto& u : in.cone.generators) {
      GeneratorCheck g;
      g.u = u;
      // (b)
      for (std::size_t k = 0; k < in.jumps.size(); ++k) g.integrability += in.weights[k] * std::abs(u.dot(in.jumps[k]));
      if (in.truncated) g.integrability += in.tail_bound;
      g.integrability_finite = std::isfinite(g.integrability);
      // (c)
      g.kernel_residual = (in.covariance * u).norm();
      g.kernel_tol = cfg.tol_kernel * (1.0 + cnorm);
      g.kernel_pass = g.kernel_residual <= g.kernel_tol;
      // (d)
      g.drift_margin = u.dot(compensated);
      g.drift_tol = cfg.tol_drift * (1.0 + in.drift.norm());
      g.drift_pass = g.drift_margin <= g.drift_tol;

      violation = std::max(violation, g.kernel_residual - g.kernel_tol);
      violation = std::max(violation, g.drift_margin - g.drift_tol);
      if (!g.integrability_finite) violation = std::numeric_limits<double>::infinity();
      definite = definite || !g.kernel_pass;
      v.generators.push_back(std::move(g));
    }
  }
  v.violation = violation;
  v.pass = v.support.pass && std::all_of(v.generators.begin(), v.generators.end(), [](const GeneratorCheck& g) {
             return g.integrability_finite && g.kernel_pass && g.drift_pass;
           });
  v.definite_failure = !v.pass && (!in.truncated || definite);
  return v;
}

inline PointInputs model_inputs(const JumpDiffusionModel& model, const ClosedDomain& domain, const Vec& x,
                                const CheckerConfig& cfg) {
  PointInputs in;
  in.x = x;
  in.cone = domain.normal_cone(x, cfg.active_tol * (1.0 + x.norm()));
  in.drift = model.drift(x);
  in.covariance = model.covariance(x);
  const double rank_tol = cfg.rank_tol.value_or(default_rank_tol(model.dim));
  in.correction = [&model, x, C = in.covariance, rank_tol] {
    return covariance_correction(column_jacobians(model, x), range_projector(C, rank_tol));
  };
  for (std::size_t k = 0; k < model.jumps.atoms.size(); ++k) {
    in.jumps.push_back(model.jumps.amplitude(x, k));
    in.weights.push_back(model.jumps.atoms[k].weight);
  }
  in.truncated = model.jumps.truncated;
  in.tail_bound = model.jumps.tail_bound;
  return in;
}

struct SamplePlan {
  std::vector<Vec> points;
  std::vector<PointStratum> strata;
};

inline SamplePlan plan_points(const ClosedDomain& domain, std::size_t n_points, const CheckerConfig& cfg) {
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "check_domain: n_points must be >= 1");
  SamplePlan plan;
  if (!domain.is_whole_space()) {
    const std::vector<Vec> verts = domain.boundary_vertices();
    auto is_vertex = [&](const Vec& p) {
      return std::any_of(verts.begin(), verts.end(), [&](const Vec& v) { return (v - p).norm() <= 1e-12 * (1.0 + v.norm()); });
    };
    for (auto& p : domain.sample_boundary(n_points, cfg.seed)) {
      const bool repeat = std::any_of(plan.points.begin(), plan.points.end(), [&](const Vec& q) { return q == p; });
      if (repeat) continue;
      plan.strata.push_back(is_vertex(p) ? PointStratum::Vertex : PointStratum::Boundary);
      plan.points.push_back(std::move(p));
    }
    for (const auto& v : verts) {
      const bool present = std::any_of(plan.points.begin(), plan.points.end(),
                                       [&](const Vec& p) { return (v - p).norm() <= 1e-12 * (1.0 + v.norm()); });
      if (!present) {
        plan.points.push_back(v);
        plan.strata.push_back(PointStratum::Vertex);
      }
    }
  }
  for (auto& p : domain.sample_members(cfg.interior_points, cfg.seed ^ 0x9e3779b97f4a7c15ULL)) {
    const bool repeat = std::any_of(plan.points.begin(), plan.points.end(), [&](const Vec& q) { return q == p; });
    if (repeat) continue;
    const bool inner = domain.is_whole_space() || domain.normal_cone(p, cfg.active_tol * (1.0 + p.norm())).interior();
    plan.strata.push_back(inner ? PointStratum::Interior : PointStratum::Boundary);
    plan.points.push_back(std::move(p));
  }
  return plan;
}

inline InvarianceReport assemble_report(std::vector<PointVerdict> verdicts, const CheckerConfig& cfg, ReportMeta meta) {
  InvarianceReport rep;
  rep.config = cfg;
  bool any_definite = false, any_fail = false;
  for (const auto& v : verdicts) {
    any_fail = any_fail || !v.pass;
    any_definite = any_definite || v.definite_failure;
    meta.cones_exact = meta.cones_exact && v.cone_exact;
    meta.strata[v.generators.size()] += 1;
    switch (v.stratum) {
      case PointStratum::Vertex: ++meta.vertex_points; break;
      case PointStratum::Boundary: ++meta.boundary_points; break;
      case PointStratum::Interior: ++meta.interior_points; break;
    }
  }
  rep.aggregate = any_definite ? Aggregate::NotInvariant : (any_fail ? Aggregate::Inconclusive : Aggregate::Invariant);
  std::vector<std::size_t> failing;
  for (std::size_t i = 0; i < verdicts.size(); ++i)
    if (!verdicts[i].pass) failing.push_back(i);
  std::stable_sort(failing.begin(), failing.end(),
                   [&](std::size_t a, std::size_t b) { return verdicts[a].violation > verdicts[b].violation; });
  if (failing.size() > cfg.top_k) failing.resize(cfg.top_k);
  rep.worst_offenders = std::move(failing);
  rep.verdicts = std::move(verdicts);
  rep.meta = std::move(meta);
  return rep;
}

}  // namespace detail

/// Conditions (a)-(d) at a single point x of D.
inline PointVerdict check_point(const JumpDiffusionModel& model, const ClosedDomain& domain, const Vec& x,
                                const CheckerConfig& cfg = {}) {
  require_dim(x, model.dim, "check_point");
  require_dim(x, domain.dim(), "check_point");
  if (!domain.contains(x)) {
    const double dist = domain.distance(x);
    if (dist > cfg.active_tol * (1.0 + x.norm()))
      throw Error(ErrorCode::OutsideDomain, "check_point: point lies " + std::to_string(dist) + " outside the domain");
  }
  return detail::evaluate_conditions(detail::model_inputs(model, domain, x, cfg), domain, cfg);
}

/// Runs check_point over a boundary sample, the polyhedral vertices and an
/// interior sample (for the jump-support condition).
inline InvarianceReport check_domain(const JumpDiffusionModel& model, const ClosedDomain& domain, std::size_t n_points,
                                     const CheckerConfig& cfg = {}) {
  if (model.dim != domain.dim()) throw Error(ErrorCode::DimensionMismatch, "check_domain: model/domain dimensions differ");
  const detail::SamplePlan plan = detail::plan_points(domain, n_points, cfg);
  std::vector<PointVerdict> verdicts(plan.points.size());
  parallel_for(plan.points.size(), cfg.threads, [&](std::size_t i) {
    verdicts[i] = check_point(model, domain, plan.points[i], cfg);
    verdicts[i].stratum = plan.strata[i];
  });
  ReportMeta meta;
  meta.requested_points = n_points;
  meta.fields_affine = model.fields_affine();
  meta.domain_polyhedral = domain.is_polyhedral();
  meta.truncated_jumps = model.jumps.truncated;
  meta.model_name = model.name;
  meta.domain_kind = to_string(domain.kind());
  return detail::assemble_report(std::move(verdicts), cfg, std::move(meta));
}

}  // namespace stochinv
