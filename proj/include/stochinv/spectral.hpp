#pragma once

#include <vector>

#include "stochinv/core.hpp"
#include "stochinv/model.hpp"

namespace stochinv {

/// C = Q diag(lambda) Q^T with lambda descending, numerical rank r, and the
/// truncated factor sigma_bar = Q_bar Lambda_bar^{1/2} (last d - r columns zero).
struct SpectralFactorization {
  Mat Q;
  Vec lambda;
  int rank = 0;
  Mat sigma_bar;
  double cutoff = 0.0;
  /// Number of slightly negative eigenvalues clamped to zero, and the most
  /// negative one seen.
  int clamped = 0;
  double most_negative = 0.0;
};

namespace detail {

// Largest-magnitude component positive; ties go to the lowest index.
inline void canonicalize_sign(Eigen::Ref<Vec> v) {
  Eigen::Index arg = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > best) {
      best = std::abs(v(i));
      arg = i;
    }
  }
  if (v(arg) < 0.0) v = -v;
}

}  // namespace detail

inline SpectralFactorization spectral_factor(const Mat& C, double rank_tol) {
  if (C.rows() != C.cols()) throw Error(ErrorCode::DimensionMismatch, "spectral_factor: matrix must be square");
  const Eigen::Index d = C.rows();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (C + C.transpose()));
  if (es.info() != Eigen::Success) throw Error(ErrorCode::DecompositionFailure, "spectral_factor: eigensolver failed");
  SpectralFactorization f;
  f.Q.resize(d, d);
  f.lambda.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    f.lambda(i) = es.eigenvalues()(d - 1 - i);
    f.Q.col(i) = es.eigenvectors().col(d - 1 - i);
    detail::canonicalize_sign(f.Q.col(i));
  }
  const double lmax = d > 0 ? f.lambda.cwiseAbs().maxCoeff() : 0.0;
  f.cutoff = rank_tol * std::max(lmax, 1.0);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (f.lambda(i) < 0.0) {
      if (f.lambda(i) < -f.cutoff) {
        ++f.clamped;
        f.most_negative = std::min(f.most_negative, f.lambda(i));
      }
      f.lambda(i) = 0.0;
    }
    if (f.lambda(i) > f.cutoff) ++f.rank;
  }
  f.sigma_bar = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < f.rank; ++i) f.sigma_bar.col(i) = std::sqrt(f.lambda(i)) * f.Q.col(i);
  return f;
}

inline SpectralFactorization spectral_factor(const Mat& C) { return spectral_factor(C, default_rank_tol(C.rows())); }

struct DriftIdentityResult {
  double lhs = 0.0;  // <u, sum_j D sigma_bar^j sigma_bar^j>
  double rhs = 0.0;  // <u, sum_j DC^j (C C^+)^j>
  double residual = 0.0;
  /// False when the eigenvalue gap at x is below 1e-6 * lambda_1; only the
  /// right-hand side is evaluated then.
  bool reliable = true;
  double min_gap = 0.0;
};

/// Evaluates both sides of the drift-correction identity at (x, u) with
/// u in Ker C(x). The left side differentiates sigma_bar by central
/// differences of step fd_step, aligning eigenvector signs with those at x.
inline DriftIdentityResult verify_drift_identity(const JumpDiffusionModel& model, const Vec& x, const Vec& u,
                                                 double fd_step, double rank_tol) {
  require_dim(x, model.dim, "verify_drift_identity");
  require_dim(u, model.dim, "verify_drift_identity");
  const Eigen::Index d = model.dim;
  const Mat C = model.covariance(x);
  if ((C * u).norm() > 1e-8 * u.norm())
    throw Error(ErrorCode::NotInKernel,
                "verify_drift_identity: |C(x)u| = " + std::to_string((C * u).norm()) + " exceeds 1e-8 |u|");

  DriftIdentityResult res;
  res.rhs = u.dot(covariance_correction(column_jacobians(model, x), range_projector(C, rank_tol)));

  const SpectralFactorization base = spectral_factor(C, rank_tol);
  const int r = base.rank;
  if (r == 0) {
    res.lhs = 0.0;
    res.residual = std::abs(res.rhs);
    res.min_gap = 0.0;
    return res;
  }
  double gap = base.lambda(r - 1);
  for (int i = 0; i + 1 < r; ++i) gap = std::min(gap, base.lambda(i) - base.lambda(i + 1));
  res.min_gap = gap;
  if (gap < 1e-6 * base.lambda(0)) {
    res.reliable = false;
    res.residual = std::abs(res.rhs);
    return res;
  }

  auto factor_at = [&](const Vec& y) {
    const SpectralFactorization f = spectral_factor(model.covariance(y), rank_tol);
    // the top-r eigenvalues must stay separated from each other and from the rest
    for (int i = 0; i < r; ++i) {
      const double next = (i + 1 < d) ? f.lambda(i + 1) : 0.0;
      if (f.lambda(i) - next < 0.5 * gap)
        throw Error(ErrorCode::EigenvalueCrossing, "verify_drift_identity: eigenvalue crossing inside the stencil");
    }
    Mat sb = Mat::Zero(d, d);
    for (int i = 0; i < r; ++i) {
      Vec q = f.Q.col(i);
      const double align = q.dot(base.Q.col(i));
      if (std::abs(align) < 0.5)
        throw Error(ErrorCode::EigenvalueCrossing, "verify_drift_identity: eigenvector rotated inside the stencil");
      if (align < 0.0) q = -q;
      sb.col(i) = std::sqrt(std::max(f.lambda(i), 0.0)) * q;
    }
    return sb;
  };

  // D sigma_bar^j (i, k) = d sigma_bar(i, j) / dx_k
  std::vector<Mat> dsb(static_cast<std::size_t>(d), Mat::Zero(d, d));
  for (Eigen::Index k = 0; k < d; ++k) {
    Vec xp = x, xm = x;
    xp(k) += fd_step;
    xm(k) -= fd_step;
    const Mat diff = (factor_at(xp) - factor_at(xm)) / (2.0 * fd_step);
    for (Eigen::Index j = 0; j < d; ++j) dsb[static_cast<std::size_t>(j)].col(k) = diff.col(j);
  }
  Vec lhs = Vec::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) lhs += dsb[static_cast<std::size_t>(j)] * base.sigma_bar.col(j);
  res.lhs = u.dot(lhs);
  res.residual = std::abs(res.lhs - res.rhs);
  return res;
}

inline DriftIdentityResult verify_drift_identity(const JumpDiffusionModel& model, const Vec& x, const Vec& u,
                                                 double fd_step) {
  return verify_drift_identity(model, x, u, fd_step, default_rank_tol(model.dim));
}

}  // namespace stochinv
