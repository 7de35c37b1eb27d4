#pragma once

#include <utility>
#include <vector>

#include "stochinv/core.hpp"

namespace stochinv {

/// Vector field of degree <= 2:
///   f_i(x) = c_i + sum_k L(i,k) x_k + sum_{k,l} Q_i(k,l) x_k x_l.
struct VecPoly {
  Vec constant;
  Mat linear;                // d_out x d_in, may be empty
  std::vector<Mat> quadratic;  // one d_in x d_in matrix per output, may be empty

  Eigen::Index out_dim() const { return constant.size(); }

  static VecPoly constant_field(Vec c) { return VecPoly{std::move(c), Mat(), {}}; }
  static VecPoly affine(Vec c, Mat L) { return VecPoly{std::move(c), std::move(L), {}}; }

  Vec operator()(const Vec& x) const {
    Vec out = constant;
    if (linear.size() != 0) out.noalias() += linear * x;
    for (std::size_t i = 0; i < quadratic.size(); ++i) out(static_cast<Eigen::Index>(i)) += x.dot(quadratic[i] * x);
    return out;
  }

  Mat jacobian(const Vec& x) const {
    Mat J = linear.size() != 0 ? linear : Mat::Zero(out_dim(), x.size());
    for (std::size_t i = 0; i < quadratic.size(); ++i)
      J.row(static_cast<Eigen::Index>(i)) += ((quadratic[i] + quadratic[i].transpose()) * x).transpose();
    return J;
  }

  bool is_affine() const { return quadratic.empty(); }
};

/// Matrix field of degree <= 2:
///   M(x) = M0 + sum_k x_k M1[k] + sum_{k,l} x_k x_l M2[k*d + l].
struct MatPoly {
  Mat constant;
  std::vector<Mat> linear;     // d entries or empty
  std::vector<Mat> quadratic;  // d*d entries or empty

  Mat operator()(const Vec& x) const {
    Mat out = constant;
    const auto d = static_cast<std::size_t>(x.size());
    for (std::size_t k = 0; k < linear.size(); ++k) out += x(static_cast<Eigen::Index>(k)) * linear[k];
    if (!quadratic.empty()) {
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t l = 0; l < d; ++l)
          out += x(static_cast<Eigen::Index>(k)) * x(static_cast<Eigen::Index>(l)) * quadratic[k * d + l];
    }
    return out;
  }

  /// Jacobians of the columns: result[j](i,k) = dM(i,j)/dx_k.
  std::vector<Mat> column_jacobians(const Vec& x) const {
    const Eigen::Index d = x.size();
    const Eigen::Index rows = constant.rows();
    const Eigen::Index cols = constant.cols();
    std::vector<Mat> out(static_cast<std::size_t>(cols), Mat::Zero(rows, d));
    for (Eigen::Index k = 0; k < d; ++k) {
      Mat dM = linear.empty() ? Mat::Zero(rows, cols) : linear[static_cast<std::size_t>(k)];
      if (!quadratic.empty()) {
        for (Eigen::Index l = 0; l < d; ++l) {
          dM += x(l) * (quadratic[static_cast<std::size_t>(k * d + l)] +
                        quadratic[static_cast<std::size_t>(l * d + k)]);
        }
      }
      for (Eigen::Index j = 0; j < cols; ++j) out[static_cast<std::size_t>(j)].col(k) = dM.col(j);
    }
    return out;
  }

  bool is_affine() const { return quadratic.empty(); }
};

}  // namespace stochinv
