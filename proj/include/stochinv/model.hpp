#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stochinv/core.hpp"
#include "stochinv/polynomial.hpp"

namespace stochinv {

/// Atom z_k with weight w_k of the discrete jump measure F = sum_k w_k delta_{z_k}.
/// `node` lives in the mark space, whose dimension need not equal the state's.
struct JumpAtom {
  Vec node;
  double weight = 0.0;
};

using JumpAmplitude = std::function<Vec(const Vec& x, const Vec& z)>;

/// Finite-activity jump specification. In truncated mode the atoms stand in
/// for an infinite-activity measure restricted to {|z| > eps}; verdicts built
/// on it are approximate.
struct JumpSpec {
  std::vector<JumpAtom> atoms;
  JumpAmplitude rho;
  bool truncated = false;
  /// Declared bound on int_{|z|<=eps} |rho(x,z)| F(dz) for truncated inputs
  /// (may be +inf).
  double tail_bound = 0.0;

  bool empty() const { return atoms.empty(); }

  double total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.weight;
    return m;
  }

  Vec amplitude(const Vec& x, std::size_t k) const { return rho(x, atoms[k].node); }

  /// Additive jumps rho(x, z) = z.
  static JumpAmplitude additive() {
    return [](const Vec&, const Vec& z) { return z; };
  }

  void validate(Eigen::Index state_dim) const {
    for (const auto& a : atoms) {
      if (!(a.weight > 0.0) || !std::isfinite(a.weight))
        throw Error(ErrorCode::InvalidArgument, "jump atom weights must be finite and strictly positive");
    }
    if (!atoms.empty() && !rho) throw Error(ErrorCode::InvalidArgument, "jump amplitude rho is required");
    (void)state_dim;
  }
};

/// Declared constants of the growth assumptions.
struct GrowthParams {
  double q = 2.0;
  double L = 1.0;
  double q_tilde = 2.0;
  double L_tilde = 1.0;
};

/// Polynomial representation of (b, C, rho) when the model has one; enables
/// serialization and analytic Jacobians.
struct PolynomialData {
  VecPoly drift;
  MatPoly covariance;
  /// Per-atom amplitude rho(x, z_k) as a polynomial in x; empty means additive.
  std::vector<VecPoly> atom_amplitudes;
};

/// Jump-diffusion dX = b dt + sigma dW + int rho (mu - F dt).
struct JumpDiffusionModel {
  Eigen::Index dim = 0;
  VectorField drift;
  MatrixField covariance;
  std::optional<JacobianField> covariance_jacobians;
  std::optional<MatrixField> sigma;
  JumpSpec jumps;
  GrowthParams growth;
  std::optional<PolynomialData> polynomial;
  std::string name = "custom";

  bool fields_affine() const {
    return polynomial && polynomial->drift.is_affine() && polynomial->covariance.is_affine() &&
           std::all_of(polynomial->atom_amplitudes.begin(), polynomial->atom_amplitudes.end(),
                       [](const VecPoly& p) { return p.is_affine(); });
  }

  void validate() const {
    if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "model dimension must be positive");
    if (!drift || !covariance) throw Error(ErrorCode::InvalidArgument, "model needs drift and covariance");
    jumps.validate(dim);
  }

  /// Builds a model from polynomial fields. Jumps with empty `atom_amplitudes`
  /// are additive, rho(x, z) = z.
  static JumpDiffusionModel from_polynomial(Eigen::Index dim, PolynomialData poly, std::vector<JumpAtom> atoms,
                                            GrowthParams growth, std::string name = "polynomial") {
    JumpDiffusionModel m;
    m.dim = dim;
    m.name = std::move(name);
    m.growth = growth;
    auto shared = std::make_shared<const PolynomialData>(poly);
    m.drift = [shared](const Vec& x) { return shared->drift(x); };
    m.covariance = [shared](const Vec& x) { return shared->covariance(x); };
    m.covariance_jacobians = [shared](const Vec& x) { return shared->covariance.column_jacobians(x); };
    m.jumps.atoms = std::move(atoms);
    if (poly.atom_amplitudes.empty()) {
      m.jumps.rho = JumpSpec::additive();
    } else {
      if (poly.atom_amplitudes.size() != m.jumps.atoms.size())
        throw Error(ErrorCode::InvalidArgument, "one amplitude polynomial per atom required");
      // marks are atom indices: node = [k]
      for (std::size_t k = 0; k < m.jumps.atoms.size(); ++k)
        m.jumps.atoms[k].node = Vec::Constant(1, static_cast<double>(k));
      m.jumps.rho = [shared](const Vec& x, const Vec& z) {
        return shared->atom_amplitudes[static_cast<std::size_t>(z(0))](x);
      };
    }
    m.polynomial = std::move(poly);
    m.validate();
    return m;
  }
};

/// Moore-Penrose pseudoinverse of a symmetric matrix.
struct PseudoinverseResult {
  Mat pinv;
  int rank = 0;
  std::vector<double> singular_values;  // descending
  double cutoff = 0.0;
};

inline double default_rank_tol(Eigen::Index d) { return static_cast<double>(d) * machine_eps(); }

/// Eigendecomposition-based pseudoinverse. Singular values below
/// rank_tol * max(sigma_max, 1) count as zero.
inline PseudoinverseResult pseudoinverse(const Mat& M, double rank_tol) {
  if (M.rows() != M.cols()) throw Error(ErrorCode::DimensionMismatch, "pseudoinverse: matrix must be square");
  PseudoinverseResult out;
  const Eigen::Index d = M.rows();
  if (d == 0) return out;
  const Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success) {
    Eigen::JacobiSVD<Mat> svd(S);
    const auto& sv = svd.singularValues();
    const double cond = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::DecompositionFailure,
                "pseudoinverse: eigensolver failed (condition estimate " + std::to_string(cond) + ")");
  }
  const Vec& lam = es.eigenvalues();
  const Mat& Q = es.eigenvectors();
  const double smax = lam.cwiseAbs().maxCoeff();
  out.cutoff = rank_tol * std::max(smax, 1.0);
  out.pinv = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    out.singular_values.push_back(std::abs(lam(i)));
    if (std::abs(lam(i)) > out.cutoff) {
      out.pinv.noalias() += (1.0 / lam(i)) * Q.col(i) * Q.col(i).transpose();
      ++out.rank;
    }
  }
  std::sort(out.singular_values.begin(), out.singular_values.end(), std::greater<>());
  return out;
}

inline PseudoinverseResult pseudoinverse(const Mat& M) { return pseudoinverse(M, default_rank_tol(M.rows())); }

/// Orthogonal projector C C^+ onto range C.
inline Mat range_projector(const Mat& C, double rank_tol) { return C * pseudoinverse(C, rank_tol).pinv; }

/// Central finite-difference step (eps^{1/3} * max(1, |x|)).
inline double default_fd_step(const Vec& x) { return std::cbrt(machine_eps()) * std::max(1.0, x.norm()); }

/// Jacobians DC^j(x) of the columns of C. Uses the model's analytic
/// Jacobians when present, central differences otherwise.
inline std::vector<Mat> column_jacobians(const JumpDiffusionModel& model, const Vec& x) {
  require_dim(x, model.dim, "column_jacobians");
  if (model.covariance_jacobians) return (*model.covariance_jacobians)(x);
  const Eigen::Index d = model.dim;
  const double h = default_fd_step(x);
  std::vector<Mat> out(static_cast<std::size_t>(d), Mat::Zero(d, d));
  for (Eigen::Index k = 0; k < d; ++k) {
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const Mat Cp = model.covariance(xp);
    const Mat Cm = model.covariance(xm);
    if (!Cp.allFinite() || !Cm.allFinite())
      throw Error(ErrorCode::InvalidArgument, "column_jacobians: covariance not finite near x");
    const Mat dC = (Cp - Cm) / (2.0 * h);
    for (Eigen::Index j = 0; j < d; ++j) out[static_cast<std::size_t>(j)].col(k) = dC.col(j);
  }
  return out;
}

/// sum_j DC^j(x) (C C^+)^j(x).
inline Vec covariance_correction(const std::vector<Mat>& DC, const Mat& projector) {
  const Eigen::Index d = projector.rows();
  Vec out = Vec::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) out.noalias() += DC[static_cast<std::size_t>(j)] * projector.col(j);
  return out;
}

inline Vec mean_jump(const JumpSpec& jumps, const Vec& x, Eigen::Index dim) {
  Vec out = Vec::Zero(dim);
  for (std::size_t k = 0; k < jumps.atoms.size(); ++k) out += jumps.atoms[k].weight * jumps.amplitude(x, k);
  return out;
}

/// b(x) - int rho(x,z) F(dz) - 1/2 sum_j DC^j(x) (C C^+)^j(x).
/// Never reads sigma.
inline Vec compensated_drift(const JumpDiffusionModel& model, const Vec& x, double rank_tol) {
  require_dim(x, model.dim, "compensated_drift");
  const Mat C = model.covariance(x);
  const Mat P = range_projector(C, rank_tol);
  return model.drift(x) - mean_jump(model.jumps, x, model.dim) -
         0.5 * covariance_correction(column_jacobians(model, x), P);
}

inline Vec compensated_drift(const JumpDiffusionModel& model, const Vec& x) {
  return compensated_drift(model, x, default_rank_tol(model.dim));
}

/// Symmetric PSD square root; negative eigenvalues are clamped to zero.
inline Mat symmetric_sqrt(const Mat& C) {
  if (C.isDiagonal(0.0)) return Mat(C.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.transpose()));
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

inline Mat diffusion_matrix(const JumpDiffusionModel& model, const Vec& x) {
  return model.sigma ? (*model.sigma)(x) : symmetric_sqrt(model.covariance(x));
}

struct AssumptionPoint {
  Vec x;
  double growth_ratio = 0.0;     // (|b|^2 + |C| + int |rho|^2 F) / (L (1 + |x|^2))
  double log_moment_ratio = 0.0;  // int_{|rho|>1} |rho|^q ln|rho| F / (L (1 + |x|^q))
  double asymmetry = 0.0;         // |C - C^T|
  double min_eigenvalue = 0.0;
  double sigma_mismatch = 0.0;    // |sigma sigma^T - C| / (1 + |C|), when sigma is given
  double continuity_slope = 0.0;  // max change of (b, C) over a 1e-7 displacement, per unit
};

struct AssumptionReport {
  std::vector<AssumptionPoint> points;
  double worst_growth_ratio = 0.0;
  double worst_log_moment_ratio = 0.0;
  bool growth_pass = true;
  bool log_moment_pass = true;
  bool symmetric_pass = true;
  bool psd_pass = true;
  bool sigma_pass = true;
  bool continuity_pass = true;
  bool pass() const {
    return growth_pass && log_moment_pass && symmetric_pass && psd_pass && sigma_pass && continuity_pass;
  }
};

/// Report-only probes of the standing growth, symmetry, PSD and continuity
/// assumptions at the given points (taken to lie in D).
inline AssumptionReport probe_assumptions(const JumpDiffusionModel& model, const std::vector<Vec>& points) {
  AssumptionReport rep;
  const double L = model.growth.L;
  const double q = model.growth.q;
  for (const auto& x : points) {
    require_dim(x, model.dim, "probe_assumptions");
    AssumptionPoint p;
    p.x = x;
    const Vec b = model.drift(x);
    const Mat C = model.covariance(x);
    const double cn = op_norm(0.5 * (C + C.transpose()));
    double jump_sq = 0.0, log_moment = 0.0;
    for (std::size_t k = 0; k < model.jumps.atoms.size(); ++k) {
      const double r = model.jumps.amplitude(x, k).norm();
      const double w = model.jumps.atoms[k].weight;
      jump_sq += w * r * r;
      if (r > 1.0) log_moment += w * std::pow(r, q) * std::log(r);
    }
    const double xn = x.norm();
    p.growth_ratio = (b.squaredNorm() + cn + jump_sq) / (L * (1.0 + xn * xn));
    p.log_moment_ratio = log_moment / (L * (1.0 + std::pow(xn, q)));
    p.asymmetry = (C - C.transpose()).norm();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.transpose()), Eigen::EigenvaluesOnly);
    p.min_eigenvalue = es.eigenvalues().size() ? es.eigenvalues()(0) : 0.0;
    if (model.sigma) {
      const Mat s = (*model.sigma)(x);
      p.sigma_mismatch = (s * s.transpose() - C).norm() / (1.0 + C.norm());
    }
    // paired close evaluations
    const double h = 1e-7 * (1.0 + xn);
    double slope = 0.0;
    for (Eigen::Index k = 0; k < model.dim; ++k) {
      Vec xh = x;
      xh(k) += h;
      slope = std::max(slope, (model.drift(xh) - b).norm() / h);
      slope = std::max(slope, (model.covariance(xh) - C).norm() / h);
    }
    p.continuity_slope = slope;

    rep.worst_growth_ratio = std::max(rep.worst_growth_ratio, p.growth_ratio);
    rep.worst_log_moment_ratio = std::max(rep.worst_log_moment_ratio, p.log_moment_ratio);
    rep.symmetric_pass = rep.symmetric_pass && p.asymmetry <= 1e-10 * (1.0 + cn);
    rep.psd_pass = rep.psd_pass && p.min_eigenvalue >= -1e-10 * (1.0 + cn);
    rep.sigma_pass = rep.sigma_pass && p.sigma_mismatch <= 1e-8;
    // a slope this large over a 1e-7 step points at a jump in b or C
    rep.continuity_pass = rep.continuity_pass && std::isfinite(slope) && slope <= 1e6 * (1.0 + L);
    rep.points.push_back(std::move(p));
  }
  rep.growth_pass = rep.worst_growth_ratio <= 1.0;
  rep.log_moment_pass = rep.worst_log_moment_ratio <= 1.0;
  return rep;
}

}  // namespace stochinv
