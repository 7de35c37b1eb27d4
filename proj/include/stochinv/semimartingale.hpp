#pragma once

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stochinv/checker.hpp"
#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/model.hpp"
#include "stochinv/parallel.hpp"
#include "stochinv/spectral.hpp"

namespace stochinv {

/// Bounded continuous h with h(z) = z on |z| <= identity_radius.
struct TruncationFunction {
  std::function<Vec(const Vec&)> h;
  double identity_radius = 1.0;
  double bound = 1.0;

  Vec operator()(const Vec& z) const { return h(z); }

  /// h(z) = z * clamp(2 - |z| / r0, 0, 1): identity on |z| <= r0, zero
  /// beyond 2 r0, sup |h| = r0.
  static TruncationFunction standard(double r0 = 1.0) {
    if (!(r0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "truncation: identity radius must be positive");
    TruncationFunction t;
    t.identity_radius = r0;
    t.bound = r0;
    t.h = [r0](const Vec& z) { return Vec(z * std::clamp(2.0 - z.norm() / r0, 0.0, 1.0)); };
    return t;
  }

  /// h(z) = z / max(1, |z| / r0): the radial clip onto the ball of radius r0.
  static TruncationFunction radial_clip(double r0 = 1.0) {
    if (!(r0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "truncation: identity radius must be positive");
    TruncationFunction t;
    t.identity_radius = r0;
    t.bound = r0;
    t.h = [r0](const Vec& z) { return Vec(z / std::max(1.0, z.norm() / r0)); };
    return t;
  }

  /// Checks identity near 0 and the bound on random samples.
  void validate(Eigen::Index dim, std::size_t samples = 256, std::uint64_t seed = 7) const {
    if (!h) throw Error(ErrorCode::InvalidArgument, "truncation: h is not set");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> scale(0.0, 4.0);
    for (std::size_t s = 0; s < samples; ++s) {
      Vec z(dim);
      for (Eigen::Index i = 0; i < dim; ++i) z(i) = n01(rng);
      if (z.norm() == 0.0) continue;
      z *= identity_radius * scale(rng) / z.norm();
      const Vec hz = h(z);
      if (hz.norm() > bound * (1.0 + 1e-12))
        throw Error(ErrorCode::InvalidArgument, "truncation: |h(z)| exceeds the declared bound");
      if (z.norm() <= identity_radius && (hz - z).norm() > 1e-12 * (1.0 + z.norm()))
        throw Error(ErrorCode::InvalidArgument, "truncation: h is not the identity inside the identity radius");
    }
  }
};

/// Atom of the jump kernel K(x, dz): jump z_k(x) with weight w_k.
struct KernelAtom {
  std::function<Vec(const Vec&)> jump;
  double weight = 0.0;
  /// State-dependent weight; not representable with a fixed jump measure.
  std::function<double(const Vec&)> state_weight;
};

/// Polynomial form of a triplet, used for serialization.
struct TripletPolynomial {
  VecPoly b_tilde;
  MatPoly c_tilde;
  std::vector<VecPoly> jumps;
};

/// Characteristics (b~, c~, K) relative to the truncation h.
struct SemimartingaleTriplet {
  Eigen::Index dim = 0;
  VectorField b_tilde;
  MatrixField c_tilde;
  std::optional<JacobianField> c_jacobians;
  std::vector<KernelAtom> atoms;
  TruncationFunction h = TruncationFunction::standard();
  GrowthParams growth;
  bool truncated = false;
  double tail_bound = 0.0;
  std::optional<TripletPolynomial> polynomial;
  std::string name = "triplet";

  void validate() const {
    if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "triplet dimension must be positive");
    if (!b_tilde || !c_tilde) throw Error(ErrorCode::InvalidArgument, "triplet needs b_tilde and c_tilde");
    if (!h.h) throw Error(ErrorCode::InvalidArgument, "triplet needs a truncation function");
    for (const auto& a : atoms) {
      if (a.state_weight)
        throw Error(ErrorCode::Unsupported,
                    "state-dependent kernel weights have no fixed jump-measure representation");
      if (!a.jump) throw Error(ErrorCode::InvalidArgument, "kernel atom without a jump function");
      if (!(a.weight > 0.0) || !std::isfinite(a.weight))
        throw Error(ErrorCode::InvalidArgument, "kernel atom weights must be finite and strictly positive");
    }
  }

  /// b(x) = b~(x) + sum_k w_k (z_k(x) - h(z_k(x))).
  Vec full_drift(const Vec& x) const {
    Vec b = b_tilde(x);
    for (const auto& a : atoms) {
      const Vec z = a.jump(x);
      b += a.weight * (z - h(z));
    }
    return b;
  }

  static SemimartingaleTriplet from_polynomial(Eigen::Index dim, TripletPolynomial poly, std::vector<double> weights,
                                               TruncationFunction h, GrowthParams growth = {},
                                               std::string name = "triplet") {
    if (poly.jumps.size() != weights.size())
      throw Error(ErrorCode::InvalidArgument, "one weight per kernel atom required");
    SemimartingaleTriplet t;
    t.dim = dim;
    t.name = std::move(name);
    t.growth = growth;
    t.h = std::move(h);
    auto shared = std::make_shared<const TripletPolynomial>(poly);
    t.b_tilde = [shared](const Vec& x) { return shared->b_tilde(x); };
    t.c_tilde = [shared](const Vec& x) { return shared->c_tilde(x); };
    t.c_jacobians = [shared](const Vec& x) { return shared->c_tilde.column_jacobians(x); };
    for (std::size_t k = 0; k < weights.size(); ++k) {
      KernelAtom a;
      a.weight = weights[k];
      a.jump = [shared, k](const Vec& x) { return shared->jumps[k](x); };
      t.atoms.push_back(std::move(a));
    }
    t.polynomial = std::move(poly);
    t.validate();
    return t;
  }
};

/// SDE form of a triplet. Marks are atom indices: F = sum_k w_k delta_{[k]},
/// rho(x, [k]) = z_k(x), and sigma is the truncated spectral factor of c~.
inline JumpDiffusionModel triplet_to_model(const SemimartingaleTriplet& trip) {
  trip.validate();
  auto t = std::make_shared<const SemimartingaleTriplet>(trip);
  JumpDiffusionModel m;
  m.dim = trip.dim;
  m.name = trip.name;
  m.growth = trip.growth;
  m.drift = [t](const Vec& x) { return t->full_drift(x); };
  m.covariance = [t](const Vec& x) { return t->c_tilde(x); };
  if (trip.c_jacobians) m.covariance_jacobians = *trip.c_jacobians;
  m.sigma = [t](const Vec& x) { return spectral_factor(t->c_tilde(x)).sigma_bar; };
  for (std::size_t k = 0; k < trip.atoms.size(); ++k)
    m.jumps.atoms.push_back(JumpAtom{Vec::Constant(1, static_cast<double>(k)), trip.atoms[k].weight});
  m.jumps.rho = [t](const Vec& x, const Vec& z) { return t->atoms[static_cast<std::size_t>(z(0))].jump(x); };
  m.jumps.truncated = trip.truncated;
  m.jumps.tail_bound = trip.tail_bound;
  m.validate();
  return m;
}

/// Characteristics of a model: c~ = C, K atoms (rho(x, z_k), w_k),
/// b~ = b - sum_k w_k (rho_k - h(rho_k)).
inline SemimartingaleTriplet model_to_triplet(const JumpDiffusionModel& model, TruncationFunction h) {
  model.validate();
  auto m = std::make_shared<const JumpDiffusionModel>(model);
  auto hh = std::make_shared<const TruncationFunction>(h);
  SemimartingaleTriplet t;
  t.dim = model.dim;
  t.name = model.name;
  t.growth = model.growth;
  t.h = std::move(h);
  t.c_tilde = [m](const Vec& x) { return m->covariance(x); };
  if (model.covariance_jacobians) t.c_jacobians = *model.covariance_jacobians;
  t.b_tilde = [m, hh](const Vec& x) {
    Vec b = m->drift(x);
    for (std::size_t k = 0; k < m->jumps.atoms.size(); ++k) {
      const Vec r = m->jumps.amplitude(x, k);
      b -= m->jumps.atoms[k].weight * (r - (*hh)(r));
    }
    return b;
  };
  for (std::size_t k = 0; k < model.jumps.atoms.size(); ++k) {
    KernelAtom a;
    a.weight = model.jumps.atoms[k].weight;
    a.jump = [m, k](const Vec& x) { return m->jumps.amplitude(x, k); };
    t.atoms.push_back(std::move(a));
  }
  t.truncated = model.jumps.truncated;
  t.tail_bound = model.jumps.tail_bound;
  return t;
}

namespace detail {

inline PointInputs triplet_inputs(const SemimartingaleTriplet& trip, const ClosedDomain& domain, const Vec& x,
                                  const CheckerConfig& cfg) {
  PointInputs in;
  in.x = x;
  in.cone = domain.normal_cone(x, cfg.active_tol * (1.0 + x.norm()));
  in.drift = trip.full_drift(x);
  in.covariance = trip.c_tilde(x);
  const double rank_tol = cfg.rank_tol.value_or(default_rank_tol(trip.dim));
  in.correction = [&trip, x, C = in.covariance, rank_tol] {
    JumpDiffusionModel shell;
    shell.dim = trip.dim;
    shell.covariance = trip.c_tilde;
    shell.covariance_jacobians = trip.c_jacobians;
    return covariance_correction(column_jacobians(shell, x), range_projector(C, rank_tol));
  };
  for (const auto& a : trip.atoms) {
    in.jumps.push_back(a.jump(x));
    in.weights.push_back(a.weight);
  }
  in.truncated = trip.truncated;
  in.tail_bound = trip.tail_bound;
  return in;
}

}  // namespace detail

/// Conditions in characteristic form: x + z_k(x) in D, sum_k w_k |<u, z_k>|
/// finite, c~ u = 0, <u, b - sum_k w_k z_k - 1/2 sum_j DC^j (C C^+)^j> <= 0.
inline InvarianceReport check_triplet(const SemimartingaleTriplet& trip, const ClosedDomain& domain,
                                      std::size_t n_points, const CheckerConfig& cfg = {}) {
  trip.validate();
  if (trip.dim != domain.dim()) throw Error(ErrorCode::DimensionMismatch, "check_triplet: triplet/domain dimensions differ");
  const detail::SamplePlan plan = detail::plan_points(domain, n_points, cfg);
  std::vector<PointVerdict> verdicts(plan.points.size());
  parallel_for(plan.points.size(), cfg.threads, [&](std::size_t i) {
    const Vec& x = plan.points[i];
    if (!domain.contains(x) && domain.distance(x) > cfg.active_tol * (1.0 + x.norm()))
      throw Error(ErrorCode::OutsideDomain, "check_triplet: sampled point outside the domain");
    verdicts[i] = detail::evaluate_conditions(detail::triplet_inputs(trip, domain, x, cfg), domain, cfg);
    verdicts[i].stratum = plan.strata[i];
  });
  ReportMeta meta;
  meta.requested_points = n_points;
  meta.fields_affine = trip.polynomial && trip.polynomial->b_tilde.is_affine() && trip.polynomial->c_tilde.is_affine() &&
                       std::all_of(trip.polynomial->jumps.begin(), trip.polynomial->jumps.end(),
                                   [](const VecPoly& z) { return z.linear.size() == 0 && z.quadratic.empty(); });
  meta.domain_polyhedral = domain.is_polyhedral();
  meta.truncated_jumps = trip.truncated;
  meta.model_name = trip.name;
  meta.domain_kind = to_string(domain.kind());
  return detail::assemble_report(std::move(verdicts), cfg, std::move(meta));
}

}  // namespace stochinv
