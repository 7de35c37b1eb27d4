#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochinv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using VectorField = std::function<Vec(const Vec&)>;
using MatrixField = std::function<Mat(const Vec&)>;
/// Returns the d Jacobians DC^j(x), one per column j of C.
using JacobianField = std::function<std::vector<Mat>(const Vec&)>;

/// Error categories surfaced by the library. Every failure is reported as a
/// stochinv::Error carrying one of these codes.
enum class ErrorCode {
  DimensionMismatch,
  InvalidArgument,
  NotConverged,
  OutsideDomain,
  DegenerateGeometry,
  EmptyBoundary,
  DecompositionFailure,
  NotInKernel,
  EigenvalueCrossing,
  BumpConstruction,
  BoundOverflow,
  Unsupported,
  Schema,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NotConverged: return "not_converged";
    case ErrorCode::OutsideDomain: return "outside_domain";
    case ErrorCode::DegenerateGeometry: return "degenerate_geometry";
    case ErrorCode::EmptyBoundary: return "empty_boundary";
    case ErrorCode::DecompositionFailure: return "decomposition_failure";
    case ErrorCode::NotInKernel: return "not_in_kernel";
    case ErrorCode::EigenvalueCrossing: return "eigenvalue_crossing";
    case ErrorCode::BumpConstruction: return "bump_construction";
    case ErrorCode::BoundOverflow: return "bound_overflow";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Schema: return "schema";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require_dim(const Vec& x, Eigen::Index dim, const char* what) {
  if (x.size() != dim) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": expected dimension " + std::to_string(dim) +
                    ", got " + std::to_string(x.size()));
  }
}

inline double machine_eps() { return std::numeric_limits<double>::epsilon(); }

/// Spectral norm of a symmetric matrix (largest |eigenvalue|); general
/// matrices fall back to the largest singular value.
inline double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

}  // namespace stochinv
