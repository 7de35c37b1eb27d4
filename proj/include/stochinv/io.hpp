#pragma once

#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochinv/checker.hpp"
#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/library.hpp"
#include "stochinv/model.hpp"
#include "stochinv/semimartingale.hpp"
#include "stochinv/simulator.hpp"

namespace stochinv {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// canonical output

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_canonical(const json& j, std::string& out, int level) {
  const std::string pad(static_cast<std::size_t>(2 * (level + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * level), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        write_canonical(it.value(), out, level + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write_canonical(j[i], out, level + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write_canonical(j[i], out, level + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

/// Sorted keys, two-space indent, floats with 17 significant digits,
/// non-finite floats as the strings "inf", "-inf", "nan".
inline std::string canonical_dump(const json& j) {
  std::string out;
  detail::write_canonical(j, out, 0);
  out += "\n";
  return out;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Mat& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    a.push_back(std::move(row));
  }
  return a;
}

inline json to_json(const CheckerConfig& c) {
  json j;
  j["tol_support"] = c.tol_support;
  j["tol_kernel"] = c.tol_kernel;
  j["tol_drift"] = c.tol_drift;
  j["active_tol"] = c.active_tol;
  j["rank_tol"] = c.rank_tol ? json(*c.rank_tol) : json(nullptr);
  j["interior_points"] = c.interior_points;
  j["seed"] = c.seed;
  j["top_k"] = c.top_k;
  return j;
}

inline json to_json(const PointVerdict& v) {
  json j;
  j["x"] = to_json(v.x);
  j["stratum"] = to_string(v.stratum);
  j["cone_exact"] = v.cone_exact;
  j["approximate"] = v.approximate;
  j["pass"] = v.pass;
  j["definite_failure"] = v.definite_failure;
  j["violation"] = v.violation;
  j["support"] = {{"worst_distance", v.support.worst_distance},
                  {"worst_atom", v.support.worst_atom},
                  {"tol", v.support.tol},
                  {"pass", v.support.pass}};
  json gens = json::array();
  for (const auto& g : v.generators) {
    gens.push_back({{"u", to_json(g.u)},
                    {"integrability", g.integrability},
                    {"integrability_finite", g.integrability_finite},
                    {"kernel_residual", g.kernel_residual},
                    {"kernel_tol", g.kernel_tol},
                    {"kernel_pass", g.kernel_pass},
                    {"drift_margin", g.drift_margin},
                    {"drift_tol", g.drift_tol},
                    {"drift_pass", g.drift_pass}});
  }
  j["generators"] = std::move(gens);
  return j;
}

inline json to_json(const ReportMeta& m) {
  json strata = json::object();
  for (const auto& [k, n] : m.strata) strata[std::to_string(k)] = n;
  json j;
  j["requested_points"] = m.requested_points;
  j["boundary_points"] = m.boundary_points;
  j["vertex_points"] = m.vertex_points;
  j["interior_points"] = m.interior_points;
  j["cone_size_counts"] = std::move(strata);
  j["fields_affine"] = m.fields_affine;
  j["domain_polyhedral"] = m.domain_polyhedral;
  j["cones_exact"] = m.cones_exact;
  j["truncated_jumps"] = m.truncated_jumps;
  j["model"] = m.model_name;
  j["domain"] = m.domain_kind;
  j["coverage_note"] = m.cones_exact ? "conditions checked on every generator of exact normal cones at sampled points"
                                     : "some normal cones are sampled proximal normals; verdicts there are approximate";
  return j;
}

inline json to_json(const InvarianceReport& r, bool include_points = true) {
  json j;
  j["aggregate"] = to_string(r.aggregate);
  j["config"] = to_json(r.config);
  j["meta"] = to_json(r.meta);
  json off = json::array();
  for (std::size_t i : r.worst_offenders)
    off.push_back({{"index", i}, {"x", to_json(r.verdicts[i].x)}, {"violation", r.verdicts[i].violation}});
  j["worst_offenders"] = std::move(off);
  if (include_points) {
    json pts = json::array();
    for (std::size_t i = 0; i < r.verdicts.size(); ++i) {
      json p = to_json(r.verdicts[i]);
      p["index"] = i;
      pts.push_back(std::move(p));
    }
    j["points"] = std::move(pts);
  }
  return j;
}

inline json to_json(const PathStats& s) {
  json j;
  j["deltas"] = s.deltas;
  j["violation_fraction"] = s.violation_fraction;
  j["exit_fraction"] = s.exit_fraction;
  j["sup_sq_norm_mean"] = s.sup_sq_norm_mean;
  j["sup_sq_norm_se"] = s.sup_sq_norm_se;
  j["exit_time_histogram"] = s.exit_time_histogram;
  j["never_exited"] = s.never_exited;
  j["paths"] = s.paths;
  j["samples"] = s.samples;
  j["blown_up"] = s.blown_up;
  j["dt"] = s.dt;
  return j;
}

// ---------------------------------------------------------------------------
// parsing

namespace detail {

[[noreturn]] inline void schema_error(const std::string& msg) { throw Error(ErrorCode::Schema, msg); }

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) schema_error(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) schema_error("unknown key '" + (where.empty() ? "" : where + ".") + it.key() + "'");
}

inline const json& need(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) schema_error("missing key '" + where + "." + key + "'");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  schema_error(where + ": expected a number");
}

inline std::size_t as_count(const json& j, const std::string& where) {
  const double v = as_number(j, where);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) schema_error(where + ": expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

inline Vec as_vec(const json& j, const std::string& where, Eigen::Index expect = -1) {
  if (!j.is_array()) schema_error(where + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = as_number(j[i], where + "[" + std::to_string(i) + "]");
  if (expect >= 0 && v.size() != expect)
    schema_error(where + ": expected length " + std::to_string(expect) + ", got " + std::to_string(v.size()));
  return v;
}

inline Mat as_mat(const json& j, const std::string& where, Eigen::Index rows = -1, Eigen::Index cols = -1) {
  if (!j.is_array()) schema_error(where + ": expected an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (rows >= 0 && r != rows) schema_error(where + ": expected " + std::to_string(rows) + " rows");
  Eigen::Index c = cols;
  if (c < 0) c = r > 0 && j[0].is_array() ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    m.row(i) = as_vec(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]", c).transpose();
  return m;
}

inline std::vector<Mat> as_mat_list(const json& j, const std::string& where, std::size_t count, Eigen::Index rows,
                                    Eigen::Index cols) {
  if (!j.is_array() || j.size() != count)
    schema_error(where + ": expected a list of " + std::to_string(count) + " matrices");
  std::vector<Mat> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(as_mat(j[k], where + "[" + std::to_string(k) + "]", rows, cols));
  return out;
}

}  // namespace detail

/// {"constant": [..], "linear": [[..]], "quadratic": [[[..]] per output]}.
inline VecPoly vecpoly_from_json(const json& j, Eigen::Index d_out, Eigen::Index d_in, const std::string& where) {
  detail::check_keys(j, {"constant", "linear", "quadratic"}, where);
  VecPoly p;
  p.constant = j.contains("constant") ? detail::as_vec(j["constant"], where + ".constant", d_out) : Vec(Vec::Zero(d_out));
  if (j.contains("linear")) p.linear = detail::as_mat(j["linear"], where + ".linear", d_out, d_in);
  if (j.contains("quadratic"))
    p.quadratic = detail::as_mat_list(j["quadratic"], where + ".quadratic", static_cast<std::size_t>(d_out), d_in, d_in);
  return p;
}

inline json to_json(const VecPoly& p) {
  json j;
  j["constant"] = to_json(p.constant);
  if (p.linear.size() != 0) j["linear"] = to_json(p.linear);
  if (!p.quadratic.empty()) {
    json q = json::array();
    for (const auto& m : p.quadratic) q.push_back(to_json(m));
    j["quadratic"] = std::move(q);
  }
  return j;
}

/// {"constant": [[..]], "linear": [d matrices], "quadratic": [d*d matrices, entry k*d + l]}.
inline MatPoly matpoly_from_json(const json& j, Eigen::Index d, const std::string& where) {
  detail::check_keys(j, {"constant", "linear", "quadratic"}, where);
  MatPoly p;
  p.constant = j.contains("constant") ? detail::as_mat(j["constant"], where + ".constant", d, d) : Mat(Mat::Zero(d, d));
  if (j.contains("linear")) p.linear = detail::as_mat_list(j["linear"], where + ".linear", static_cast<std::size_t>(d), d, d);
  if (j.contains("quadratic"))
    p.quadratic = detail::as_mat_list(j["quadratic"], where + ".quadratic", static_cast<std::size_t>(d * d), d, d);
  return p;
}

inline json to_json(const MatPoly& p) {
  json j;
  j["constant"] = to_json(p.constant);
  auto list = [](const std::vector<Mat>& ms) {
    json a = json::array();
    for (const auto& m : ms) a.push_back(to_json(m));
    return a;
  };
  if (!p.linear.empty()) j["linear"] = list(p.linear);
  if (!p.quadratic.empty()) j["quadratic"] = list(p.quadratic);
  return j;
}

inline GrowthParams growth_from_json(const json& j, const std::string& where) {
  detail::check_keys(j, {"q", "L", "q_tilde", "L_tilde"}, where);
  GrowthParams g;
  if (j.contains("q")) g.q = detail::as_number(j["q"], where + ".q");
  if (j.contains("L")) g.L = detail::as_number(j["L"], where + ".L");
  if (j.contains("q_tilde")) g.q_tilde = detail::as_number(j["q_tilde"], where + ".q_tilde");
  if (j.contains("L_tilde")) g.L_tilde = detail::as_number(j["L_tilde"], where + ".L_tilde");
  if (!(g.L > 0.0) || !(g.q >= 2.0)) detail::schema_error(where + ": need L > 0 and q >= 2");
  return g;
}

inline json to_json(const GrowthParams& g) {
  return {{"q", g.q}, {"L", g.L}, {"q_tilde", g.q_tilde}, {"L_tilde", g.L_tilde}};
}

/// Domain JSON. Kinds: halfspace {a, c}, polyhedron {A, c}, whole_space
/// {dim}, box {lo, hi}, orthant {dim}, ball {center, radius}, simplex
/// {dim}, smooth_sublevel {P, q, r} for g(x) = x'Px + q'x + r, product
/// {factors}, union {members}. All take an optional sampling_radius.
inline ClosedDomain domain_from_json(const json& j, const std::string& where = "domain") {
  if (!j.is_object()) detail::schema_error(where + ": expected an object");
  const std::string kind = detail::need(j, "kind", where).get<std::string>();
  auto keys = [&](std::set<std::string> extra) {
    extra.insert("kind");
    extra.insert("sampling_radius");
    detail::check_keys(j, extra, where);
  };
  ClosedDomain D = ClosedDomain::whole_space(1);
  if (kind == "halfspace") {
    keys({"a", "c"});
    D = ClosedDomain::halfspace(detail::as_vec(detail::need(j, "a", where), where + ".a"),
                                detail::as_number(detail::need(j, "c", where), where + ".c"));
  } else if (kind == "polyhedron") {
    keys({"A", "c"});
    const Mat A = detail::as_mat(detail::need(j, "A", where), where + ".A");
    D = ClosedDomain::polyhedron(A, detail::as_vec(detail::need(j, "c", where), where + ".c", A.rows()));
  } else if (kind == "whole_space" || kind == "orthant" || kind == "simplex") {
    keys({"dim"});
    const auto d = static_cast<Eigen::Index>(detail::as_count(detail::need(j, "dim", where), where + ".dim"));
    if (d < 1) detail::schema_error(where + ".dim: must be >= 1");
    D = kind == "whole_space" ? ClosedDomain::whole_space(d)
        : kind == "orthant"   ? ClosedDomain::orthant(d)
                              : ClosedDomain::simplex(d);
  } else if (kind == "box") {
    keys({"lo", "hi"});
    const Vec lo = detail::as_vec(detail::need(j, "lo", where), where + ".lo");
    D = ClosedDomain::box(lo, detail::as_vec(detail::need(j, "hi", where), where + ".hi", lo.size()));
  } else if (kind == "ball") {
    keys({"center", "radius"});
    D = ClosedDomain::ball(detail::as_vec(detail::need(j, "center", where), where + ".center"),
                           detail::as_number(detail::need(j, "radius", where), where + ".radius"));
  } else if (kind == "smooth_sublevel") {
    keys({"P", "q", "r"});
    const Mat P = detail::as_mat(detail::need(j, "P", where), where + ".P");
    const Eigen::Index d = P.rows();
    const Vec q = j.contains("q") ? detail::as_vec(j["q"], where + ".q", d) : Vec(Vec::Zero(d));
    const double r = j.contains("r") ? detail::as_number(j["r"], where + ".r") : 0.0;
    SmoothFunction g;
    g.value = [P, q, r](const Vec& x) { return x.dot(P * x) + q.dot(x) + r; };
    g.gradient = [P, q](const Vec& x) { return Vec((P + P.transpose()) * x + q); };
    D = ClosedDomain::smooth_sublevel(d, g);
  } else if (kind == "product" || kind == "union") {
    const std::string key = kind == "product" ? "factors" : "members";
    keys({key});
    const json& list = detail::need(j, key, where);
    if (!list.is_array() || list.empty()) detail::schema_error(where + "." + key + ": expected a non-empty array");
    std::vector<ClosedDomain> parts;
    for (std::size_t i = 0; i < list.size(); ++i)
      parts.push_back(domain_from_json(list[i], where + "." + key + "[" + std::to_string(i) + "]"));
    D = kind == "product" ? ClosedDomain::product(std::move(parts)) : ClosedDomain::union_of(std::move(parts));
  } else {
    detail::schema_error(where + ".kind: unknown domain kind '" + kind + "'");
  }
  if (j.contains("sampling_radius"))
    D = D.with_sampling_radius(detail::as_number(j["sampling_radius"], where + ".sampling_radius"));
  return D;
}

/// Model given by library name, polynomial fields, or characteristics.
struct ModelSpec {
  std::string source;  // "library" | "polynomial" | "triplet"
  JumpDiffusionModel model;
  std::optional<LibraryModel> library;
  std::optional<SemimartingaleTriplet> triplet;
};

inline JumpDiffusionModel polynomial_model_from_json(const json& j, const std::string& where) {
  detail::check_keys(j, {"dim", "drift", "covariance", "jumps", "amplitudes", "growth", "name", "tail_bound"}, where);
  const auto d = static_cast<Eigen::Index>(detail::as_count(detail::need(j, "dim", where), where + ".dim"));
  if (d < 1) detail::schema_error(where + ".dim: must be >= 1");
  PolynomialData poly;
  poly.drift = vecpoly_from_json(detail::need(j, "drift", where), d, d, where + ".drift");
  poly.covariance = matpoly_from_json(detail::need(j, "covariance", where), d, where + ".covariance");
  std::vector<JumpAtom> atoms;
  if (j.contains("jumps")) {
    const json& js = j["jumps"];
    if (!js.is_array()) detail::schema_error(where + ".jumps: expected an array");
    for (std::size_t k = 0; k < js.size(); ++k) {
      const std::string w = where + ".jumps[" + std::to_string(k) + "]";
      detail::check_keys(js[k], {"node", "weight"}, w);
      JumpAtom a;
      a.weight = detail::as_number(detail::need(js[k], "weight", w), w + ".weight");
      a.node = js[k].contains("node") ? detail::as_vec(js[k]["node"], w + ".node", d) : Vec(Vec::Zero(d));
      atoms.push_back(std::move(a));
    }
  }
  if (j.contains("amplitudes")) {
    const json& as = j["amplitudes"];
    if (!as.is_array() || as.size() != atoms.size())
      detail::schema_error(where + ".amplitudes: expected one polynomial per jump atom");
    for (std::size_t k = 0; k < as.size(); ++k)
      poly.atom_amplitudes.push_back(vecpoly_from_json(as[k], d, d, where + ".amplitudes[" + std::to_string(k) + "]"));
  }
  const GrowthParams g = j.contains("growth") ? growth_from_json(j["growth"], where + ".growth") : GrowthParams{};
  const std::string name = j.contains("name") ? j["name"].get<std::string>() : "polynomial";
  auto m = JumpDiffusionModel::from_polynomial(d, std::move(poly), std::move(atoms), g, name);
  if (j.contains("tail_bound")) {
    m.jumps.truncated = true;
    m.jumps.tail_bound = detail::as_number(j["tail_bound"], where + ".tail_bound");
  }
  return m;
}

inline SemimartingaleTriplet triplet_from_json(const json& j, const std::string& where) {
  detail::check_keys(j, {"dim", "b_tilde", "c_tilde", "kernel_atoms", "truncation", "growth", "name", "tail_bound"},
                     where);
  const auto d = static_cast<Eigen::Index>(detail::as_count(detail::need(j, "dim", where), where + ".dim"));
  if (d < 1) detail::schema_error(where + ".dim: must be >= 1");
  TripletPolynomial poly;
  poly.b_tilde = vecpoly_from_json(detail::need(j, "b_tilde", where), d, d, where + ".b_tilde");
  poly.c_tilde = matpoly_from_json(detail::need(j, "c_tilde", where), d, where + ".c_tilde");
  std::vector<double> weights;
  if (j.contains("kernel_atoms")) {
    const json& ks = j["kernel_atoms"];
    if (!ks.is_array()) detail::schema_error(where + ".kernel_atoms: expected an array");
    for (std::size_t k = 0; k < ks.size(); ++k) {
      const std::string w = where + ".kernel_atoms[" + std::to_string(k) + "]";
      detail::check_keys(ks[k], {"jump", "weight"}, w);
      weights.push_back(detail::as_number(detail::need(ks[k], "weight", w), w + ".weight"));
      poly.jumps.push_back(vecpoly_from_json(detail::need(ks[k], "jump", w), d, d, w + ".jump"));
    }
  }
  double r0 = 1.0;
  if (j.contains("truncation")) {
    detail::check_keys(j["truncation"], {"identity_radius"}, where + ".truncation");
    if (j["truncation"].contains("identity_radius"))
      r0 = detail::as_number(j["truncation"]["identity_radius"], where + ".truncation.identity_radius");
  }
  const GrowthParams g = j.contains("growth") ? growth_from_json(j["growth"], where + ".growth") : GrowthParams{};
  const std::string name = j.contains("name") ? j["name"].get<std::string>() : "triplet";
  auto t = SemimartingaleTriplet::from_polynomial(d, std::move(poly), std::move(weights),
                                                  TruncationFunction::standard(r0), g, name);
  if (j.contains("tail_bound")) {
    t.truncated = true;
    t.tail_bound = detail::as_number(j["tail_bound"], where + ".tail_bound");
  }
  return t;
}

inline ModelSpec model_from_json(const json& j, const std::string& where = "model") {
  if (!j.is_object()) detail::schema_error(where + ": expected an object");
  ModelSpec spec;
  if (j.contains("library")) {
    detail::check_keys(j, {"library", "params"}, where);
    ParamMap params;
    if (j.contains("params")) {
      detail::check_keys(j["params"], {"d", "sigma", "kappa", "theta", "m", "lambda", "b1", "b2", "B11", "B12", "B21",
                                       "B22", "alpha1", "alpha2", "r", "xi", "rho"},
                         where + ".params");
      for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
        params[it.key()] = detail::as_number(it.value(), where + ".params." + it.key());
    }
    spec.source = "library";
    spec.library = build(j["library"].get<std::string>(), params);
    spec.model = spec.library->model;
  } else if (j.contains("polynomial")) {
    detail::check_keys(j, {"polynomial"}, where);
    spec.source = "polynomial";
    spec.model = polynomial_model_from_json(j["polynomial"], where + ".polynomial");
  } else if (j.contains("triplet")) {
    detail::check_keys(j, {"triplet"}, where);
    spec.source = "triplet";
    spec.triplet = triplet_from_json(j["triplet"], where + ".triplet");
    spec.model = triplet_to_model(*spec.triplet);
  } else {
    detail::schema_error(where + ": expected one of 'library', 'polynomial', 'triplet'");
  }
  return spec;
}

/// Polynomial form of a model whose drift shift is constant, i.e. every jump
/// amplitude is a constant vector.
inline json triplet_json_from_model(const JumpDiffusionModel& model, double identity_radius) {
  if (!model.polynomial) throw Error(ErrorCode::Unsupported, "convert: model has no polynomial representation");
  const PolynomialData& p = *model.polynomial;
  const TruncationFunction h = TruncationFunction::standard(identity_radius);
  VecPoly b_tilde = p.drift;
  json atoms = json::array();
  const Vec zero = Vec::Zero(model.dim);
  for (std::size_t k = 0; k < model.jumps.atoms.size(); ++k) {
    const bool constant = p.atom_amplitudes.empty() ||
                          (p.atom_amplitudes[k].linear.size() == 0 && p.atom_amplitudes[k].quadratic.empty());
    if (!constant) throw Error(ErrorCode::Unsupported, "convert: state-dependent jump amplitudes are not serializable");
    const Vec z = model.jumps.amplitude(zero, k);
    const double w = model.jumps.atoms[k].weight;
    b_tilde.constant -= w * (z - h(z));
    atoms.push_back({{"jump", to_json(VecPoly::constant_field(z))}, {"weight", w}});
  }
  json t;
  t["dim"] = model.dim;
  t["name"] = model.name;
  t["b_tilde"] = to_json(b_tilde);
  t["c_tilde"] = to_json(p.covariance);
  t["kernel_atoms"] = std::move(atoms);
  t["truncation"] = {{"identity_radius", identity_radius}};
  t["growth"] = to_json(model.growth);
  if (model.jumps.truncated) t["tail_bound"] = model.jumps.tail_bound;
  return json{{"triplet", std::move(t)}};
}

inline json model_json_from_triplet(const SemimartingaleTriplet& trip) {
  if (!trip.polynomial) throw Error(ErrorCode::Unsupported, "convert: triplet has no polynomial representation");
  const TripletPolynomial& p = *trip.polynomial;
  VecPoly drift = p.b_tilde;
  json jumps = json::array(), amps = json::array();
  for (std::size_t k = 0; k < p.jumps.size(); ++k) {
    if (p.jumps[k].linear.size() != 0 || !p.jumps[k].quadratic.empty())
      throw Error(ErrorCode::Unsupported, "convert: state-dependent kernel jumps are not serializable");
    const Vec z = p.jumps[k].constant;
    drift.constant += trip.atoms[k].weight * (z - trip.h(z));
    jumps.push_back({{"node", to_json(z)}, {"weight", trip.atoms[k].weight}});
  }
  json m;
  m["dim"] = trip.dim;
  m["name"] = trip.name;
  m["drift"] = to_json(drift);
  m["covariance"] = to_json(p.c_tilde);
  m["jumps"] = std::move(jumps);
  m["growth"] = to_json(trip.growth);
  if (trip.truncated) m["tail_bound"] = trip.tail_bound;
  return json{{"polynomial", std::move(m)}};
}

}  // namespace stochinv
