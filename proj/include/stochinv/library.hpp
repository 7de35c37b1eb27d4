#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/model.hpp"
#include "stochinv/polynomial.hpp"

namespace stochinv {

using ParamMap = std::map<std::string, double>;

/// A named model with its domain and a closed-form invariance verdict.
struct LibraryModel {
  std::string name;
  ParamMap params;  // with defaults filled in
  JumpDiffusionModel model;
  ClosedDomain domain = ClosedDomain::whole_space(1);
  bool oracle = true;  // true iff D is invariant
  /// Smallest signed slack of the oracle's inequalities; |margin| small
  /// means the parameters sit near the decision boundary.
  double oracle_margin = 0.0;
  std::string provenance;
};

namespace detail {

struct ParamReader {
  const std::string& model;
  ParamMap given;
  ParamMap used;

  double get(const std::string& key, double fallback) {
    auto it = given.find(key);
    const double v = it == given.end() ? fallback : it->second;
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, model + ": parameter '" + key + "' is not finite");
    used[key] = v;
    return v;
  }

  void finish() const {
    for (const auto& kv : given)
      if (!used.count(kv.first))
        throw Error(ErrorCode::InvalidArgument, model + ": unknown parameter '" + kv.first + "'");
  }
};

inline void require_param(bool ok, const std::string& model, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, model + ": " + what);
}

inline Eigen::Index dim_param(ParamReader& p) {
  const double d = p.get("d", 1.0);
  require_param(d >= 1.0 && d == std::floor(d) && d <= 64.0, p.model, "d must be an integer in [1, 64]");
  return static_cast<Eigen::Index>(d);
}

/// Scalar C(x) = s0 + s1 x + s2 x^2 as a 1x1 MatPoly.
inline MatPoly scalar_cov(double s0, double s1, double s2) {
  MatPoly m;
  m.constant = Mat::Constant(1, 1, s0);
  m.linear = {Mat::Constant(1, 1, s1)};
  if (s2 != 0.0) m.quadratic = {Mat::Constant(1, 1, s2)};
  return m;
}

}  // namespace detail

inline std::vector<std::string> library_names() {
  return {"bm", "ou", "cir", "cir_jumps", "jacobi", "affine_orthant_2d", "heston_like"};
}

/// Instantiates a library model. Unknown names, unknown parameters and
/// out-of-range parameters raise InvalidArgument.
///
///   bm                 d, sigma                       R^d
///   ou                 d, kappa, theta, sigma          R^d
///   cir                kappa, theta, sigma             [0, inf)
///   cir_jumps          kappa, theta, sigma, m, lambda  [0, inf)
///   jacobi             kappa, theta, sigma             [0, 1]
///   affine_orthant_2d  b1, b2, B11, B12, B21, B22, alpha1, alpha2   [0, inf)^2
///   heston_like        r, kappa, theta, xi, rho        R x [0, inf)
inline LibraryModel build(const std::string& name, const ParamMap& params = {}) {
  detail::ParamReader p{name, params, {}};
  LibraryModel lm;
  lm.name = name;
  PolynomialData poly;
  std::vector<JumpAtom> atoms;
  GrowthParams growth;
  Eigen::Index d = 1;

  if (name == "bm") {
    d = detail::dim_param(p);
    const double sigma = p.get("sigma", 1.0);
    detail::require_param(sigma >= 0.0, name, "sigma must be >= 0");
    poly.drift = VecPoly::constant_field(Vec::Zero(d));
    poly.covariance.constant = sigma * sigma * Mat::Identity(d, d);
    growth.L = std::max(sigma * sigma, 1e-12);
    lm.domain = ClosedDomain::whole_space(d);
    lm.oracle = true;
    lm.oracle_margin = std::numeric_limits<double>::infinity();
    lm.provenance = "R^d has empty boundary; every condition holds vacuously";
  } else if (name == "ou") {
    d = detail::dim_param(p);
    const double kappa = p.get("kappa", 1.0), theta = p.get("theta", 0.0), sigma = p.get("sigma", 1.0);
    detail::require_param(sigma >= 0.0, name, "sigma must be >= 0");
    poly.drift = VecPoly::affine(Vec::Constant(d, kappa * theta), -kappa * Mat::Identity(d, d));
    poly.covariance.constant = sigma * sigma * Mat::Identity(d, d);
    // |b|^2 <= 2 kappa^2 (d theta^2 + |x|^2)
    growth.L = 2.0 * kappa * kappa * std::max(static_cast<double>(d) * theta * theta, 1.0) + sigma * sigma;
    growth.L = std::max(growth.L, 1e-12);
    lm.domain = ClosedDomain::whole_space(d);
    lm.oracle = true;
    lm.oracle_margin = std::numeric_limits<double>::infinity();
    lm.provenance = "R^d has empty boundary; every condition holds vacuously";
  } else if (name == "cir" || name == "cir_jumps") {
    const double kappa = p.get("kappa", 1.0), theta = p.get("theta", 1.0), sigma = p.get("sigma", 1.0);
    detail::require_param(sigma >= 0.0, name, "sigma must be >= 0");
    double m = 0.0, lambda = 0.0;
    if (name == "cir_jumps") {
      m = p.get("m", 0.5);
      lambda = p.get("lambda", 1.0);
      detail::require_param(lambda > 0.0, name, "lambda must be > 0");
      atoms.push_back(JumpAtom{Vec::Constant(1, m), lambda});
    }
    poly.drift = VecPoly::affine(Vec::Constant(1, kappa * theta), Mat::Constant(1, 1, -kappa));
    poly.covariance = detail::scalar_cov(0.0, sigma * sigma, 0.0);
    // |b|^2 <= 2 kappa^2 (theta^2 + x^2), sigma^2 x <= sigma^2 (1 + x^2) on x >= 0
    growth.L = 2.0 * kappa * kappa * std::max(theta * theta, 1.0) + sigma * sigma + lambda * m * m;
    growth.L = std::max(growth.L, 1e-12);
    lm.domain = ClosedDomain::orthant(1);
    if (name == "cir") {
      lm.oracle_margin = kappa * theta;
      lm.provenance = "boundary {0}, u = -1, C(0) = 0 so (C C^+)(0) = 0; drift condition reads kappa*theta >= 0";
    } else {
      lm.oracle_margin = std::min(m, kappa * theta - lambda * m);
      lm.provenance =
          "boundary {0}, u = -1; support needs 0 + m >= 0; compensated drift at 0 is kappa*theta - lambda*m, "
          "so invariant iff m >= 0 and kappa*theta >= lambda*m";
    }
    lm.oracle = lm.oracle_margin >= 0.0;
  } else if (name == "jacobi") {
    const double kappa = p.get("kappa", 1.0), theta = p.get("theta", 0.5), sigma = p.get("sigma", 1.0);
    detail::require_param(sigma >= 0.0, name, "sigma must be >= 0");
    poly.drift = VecPoly::affine(Vec::Constant(1, kappa * theta), Mat::Constant(1, 1, -kappa));
    poly.covariance = detail::scalar_cov(0.0, sigma * sigma, -sigma * sigma);
    // sigma^2 x (1 - x) <= sigma^2 / 4 on [0, 1]
    growth.L = std::max(2.0 * kappa * kappa * std::max(theta * theta, 1.0) + 0.25 * sigma * sigma, 1e-12);
    lm.domain = ClosedDomain::box(Vec::Zero(1), Vec::Ones(1));
    lm.oracle_margin = std::min(kappa * theta, kappa * (1.0 - theta));
    lm.oracle = lm.oracle_margin >= 0.0;
    lm.provenance =
        "boundary {0, 1}, C vanishes at both ends; u = -1 at 0 gives kappa*theta >= 0, u = +1 at 1 gives "
        "kappa*(1 - theta) >= 0";
  } else if (name == "affine_orthant_2d") {
    d = 2;
    const double b1 = p.get("b1", 0.5), b2 = p.get("b2", 0.5);
    const double B11 = p.get("B11", -1.0), B12 = p.get("B12", 0.5), B21 = p.get("B21", 0.5), B22 = p.get("B22", -1.0);
    const double a1 = p.get("alpha1", 1.0), a2 = p.get("alpha2", 1.0);
    detail::require_param(a1 >= 0.0 && a2 >= 0.0, name, "alpha1 and alpha2 must be >= 0");
    Mat B(2, 2);
    B << B11, B12, B21, B22;
    poly.drift = VecPoly::affine(Vec(Eigen::Vector2d(b1, b2)), B);
    poly.covariance.constant = Mat::Zero(2, 2);
    Mat l1 = Mat::Zero(2, 2), l2 = Mat::Zero(2, 2);
    l1(0, 0) = a1;
    l2(1, 1) = a2;
    poly.covariance.linear = {l1, l2};
    // |b|^2 <= 2 |b0|^2 + 2 |B|^2 |x|^2, |C| <= max(alpha) |x| on the orthant
    const double bn = Eigen::Vector2d(b1, b2).squaredNorm();
    const double Bn = op_norm(B);
    growth.L = std::max(2.0 * std::max(bn, Bn * Bn) + std::max(a1, a2), 1e-12);
    lm.domain = ClosedDomain::orthant(2);
    lm.oracle_margin = std::min({b1, b2, B12, B21});
    lm.oracle = lm.oracle_margin >= 0.0;
    lm.provenance =
        "facet x1 = 0: u = (-1, 0), C u = 0, C C^+ = diag(0, 1) so the correction is (0, alpha2) and the drift "
        "condition reads b1 + B12 x2 >= 0 for all x2 >= 0; symmetrically b2 + B21 x1 >= 0; the corner adds "
        "nothing new. Invariant iff b1, b2, B12, B21 >= 0";
  } else if (name == "heston_like") {
    d = 2;
    const double r = p.get("r", 0.0), kappa = p.get("kappa", 1.0), theta = p.get("theta", 0.5);
    const double xi = p.get("xi", 0.5), rho = p.get("rho", -0.5);
    detail::require_param(xi >= 0.0, name, "xi must be >= 0");
    detail::require_param(rho >= -1.0 && rho <= 1.0, name, "rho must lie in [-1, 1]");
    Mat L(2, 2);
    L << 0.0, -0.5, 0.0, -kappa;
    poly.drift = VecPoly::affine(Vec(Eigen::Vector2d(r, kappa * theta)), L);
    poly.covariance.constant = Mat::Zero(2, 2);
    Mat l2(2, 2);
    l2 << 1.0, rho * xi, rho * xi, xi * xi;
    poly.covariance.linear = {Mat::Zero(2, 2), l2};
    const double A = 2.0 * r * r + 2.0 * kappa * kappa * theta * theta;
    const double Bq = 0.5 + 2.0 * kappa * kappa;
    growth.L = std::max(A, Bq) + 0.5 * (1.0 + xi * xi);
    lm.domain = ClosedDomain::halfspace(Vec(Eigen::Vector2d(0.0, -1.0)), 0.0);
    lm.oracle_margin = kappa * theta;
    lm.oracle = lm.oracle_margin >= 0.0;
    lm.provenance = "boundary {v = 0}, u = (0, -1), C = 0 there; drift condition reads kappa*theta >= 0";
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown library model '" + name + "'");
  }
  p.finish();
  if (name != "bm" && name != "ou") d = lm.domain.dim();
  lm.params = p.used;
  lm.model = JumpDiffusionModel::from_polynomial(d, std::move(poly), std::move(atoms), growth, name);
  return lm;
}

/// Points of D for assumption probes: boundary vertices, a boundary sample
/// and a member sample.
inline std::vector<Vec> reference_points(const LibraryModel& lm, std::size_t n = 32, std::uint64_t seed = 3) {
  std::vector<Vec> pts;
  if (!lm.domain.is_whole_space()) {
    for (auto& v : lm.domain.boundary_vertices()) pts.push_back(std::move(v));
    for (auto& v : lm.domain.sample_boundary(n, seed)) pts.push_back(std::move(v));
  }
  for (auto& v : lm.domain.sample_members(n, seed + 1)) pts.push_back(std::move(v));
  return pts;
}

}  // namespace stochinv
