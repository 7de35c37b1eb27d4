#pragma once

#include <cstdint>
#include <memory>
#include <utility>

#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/model.hpp"

namespace stochinv {

/// C^2 test function vanishing outside the ball of radius support_radius
/// about the origin.
struct TestFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<Mat(const Vec&)> hessian;
  double support_radius = 0.0;
};

/// Quintic smoothstep cutoff: 1 on [0, 1/2], 0 on [1, inf), C^2 in between.
struct Cutoff {
  static double value(double t) {
    if (t <= 0.5) return 1.0;
    if (t >= 1.0) return 0.0;
    const double s = 2.0 * t - 1.0;
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
  }
  static double d1(double t) {
    if (t <= 0.5 || t >= 1.0) return 0.0;
    const double s = 2.0 * t - 1.0;
    return -2.0 * 30.0 * s * s * (1.0 - s) * (1.0 - s);
  }
  static double d2(double t) {
    if (t <= 0.5 || t >= 1.0) return 0.0;
    const double s = 2.0 * t - 1.0;
    return -4.0 * 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
  }
};

/// phi(y) = f(y) * chi(|y - center| / width) from a C^2 function f given by
/// value, gradient and Hessian.
inline TestFunction localized(std::function<double(const Vec&)> f, std::function<Vec(const Vec&)> df,
                              std::function<Mat(const Vec&)> d2f, Vec center, double width) {
  struct Parts {
    std::function<double(const Vec&)> f;
    std::function<Vec(const Vec&)> df;
    std::function<Mat(const Vec&)> d2f;
    Vec c;
    double w;
  };
  auto p = std::make_shared<const Parts>(Parts{std::move(f), std::move(df), std::move(d2f), std::move(center), width});
  TestFunction tf;
  tf.support_radius = p->c.norm() + width;
  tf.value = [p](const Vec& y) {
    const double chi = Cutoff::value((y - p->c).norm() / p->w);
    return chi == 0.0 ? 0.0 : p->f(y) * chi;
  };
  tf.gradient = [p](const Vec& y) {
    const Vec r = y - p->c;
    const double rn = r.norm();
    const double t = rn / p->w;
    const double chi = Cutoff::value(t);
    if (chi == 0.0) return Vec(Vec::Zero(y.size()));
    Vec g = chi * p->df(y);
    const double c1 = Cutoff::d1(t);
    if (c1 != 0.0) g += p->f(y) * c1 / p->w * (r / rn);
    return g;
  };
  tf.hessian = [p](const Vec& y) {
    const Eigen::Index d = y.size();
    const Vec r = y - p->c;
    const double rn = r.norm();
    const double t = rn / p->w;
    const double chi = Cutoff::value(t);
    if (chi == 0.0) return Mat(Mat::Zero(d, d));
    Mat H = chi * p->d2f(y);
    const double c1 = Cutoff::d1(t);
    const double c2 = Cutoff::d2(t);
    if (c1 != 0.0 || c2 != 0.0) {
      const Vec n = r / rn;
      const Vec dchi = c1 / p->w * n;
      const Mat hchi = c2 / (p->w * p->w) * n * n.transpose() +
                       c1 / (p->w * rn) * (Mat::Identity(d, d) - n * n.transpose());
      const Vec df = p->df(y);
      H += df * dchi.transpose() + dchi * df.transpose() + p->f(y) * hchi;
    }
    return H;
  };
  return tf;
}

/// |y|^2 cut off outside radius R (identical to |y|^2 on |y| <= R/2).
inline TestFunction truncated_square_norm(Eigen::Index d, double R) {
  return localized([](const Vec& y) { return y.squaredNorm(); }, [](const Vec& y) { return Vec(2.0 * y); },
                   [d](const Vec&) { return Mat(2.0 * Mat::Identity(d, d)); }, Vec::Zero(d), R);
}

/// a.y + c cut off outside radius R around the origin.
inline TestFunction truncated_linear(Vec a, double c, double R) {
  const Eigen::Index d = a.size();
  return localized([a, c](const Vec& y) { return a.dot(y) + c; }, [a](const Vec&) { return a; },
                   [d](const Vec&) { return Mat(Mat::Zero(d, d)); }, Vec::Zero(d), R);
}

/// exp(-|y - m|^2 / (2 s^2)) cut off outside radius R around m.
inline TestFunction truncated_gaussian(Vec m, double s, double R) {
  const Eigen::Index d = m.size();
  auto f = [m, s](const Vec& y) { return std::exp(-(y - m).squaredNorm() / (2 * s * s)); };
  auto df = [m, s, f](const Vec& y) { return Vec(-(y - m) / (s * s) * f(y)); };
  auto d2f = [m, s, f, d](const Vec& y) {
    const Vec r = y - m;
    return Mat(f(y) * (r * r.transpose() / (s * s * s * s) - Mat::Identity(d, d) / (s * s)));
  };
  return localized(f, df, d2f, m, R);
}

/// L phi(x) = D phi b + 1/2 Tr(D^2 phi C) + sum_k w_k [phi(x + rho_k) - phi(x) - D phi rho_k].
inline double apply_generator(const JumpDiffusionModel& model, const TestFunction& phi, const Vec& x) {
  require_dim(x, model.dim, "apply_generator");
  const Vec grad = phi.gradient(x);
  double out = grad.dot(model.drift(x)) + 0.5 * (phi.hessian(x) * model.covariance(x)).trace();
  const double phix = phi.value(x);
  for (std::size_t k = 0; k < model.jumps.atoms.size(); ++k) {
    const Vec r = model.jumps.amplitude(x, k);
    out += model.jumps.atoms[k].weight * (phi.value(x + r) - phix - grad.dot(r));
  }
  return out;
}

/// phi(y) = (u.(y - x) - a |y - x|^2) chi(|y - x| / w) with a = 1/(2w):
/// phi(x) = 0, D phi(x) = u.
inline TestFunction normal_bump(const Vec& x, const Vec& u, double width) {
  const Eigen::Index d = x.size();
  const double a = 0.5 / width;
  return localized([x, u, a](const Vec& y) { return u.dot(y - x) - a * (y - x).squaredNorm(); },
                   [x, u, a](const Vec& y) { return Vec(u - 2.0 * a * (y - x)); },
                   [a, d](const Vec&) { return Mat(-2.0 * a * Mat::Identity(d, d)); }, x, width);
}

struct ProbeResult {
  double value = 0.0;  // L phi(x)
  double width = 0.0;  // bump width actually used
  bool skipped = false;
};

/// Builds a bump with D-max at boundary point x and gradient u, then returns
/// L phi(x). The max is verified against boundary and local domain samples;
/// the width is halved up to 5 times before giving up.
inline ProbeResult maximum_principle_probe(const JumpDiffusionModel& model, const ClosedDomain& domain, const Vec& x,
                                           const Vec& u, double bump_width, std::uint64_t seed = 1) {
  require_dim(x, model.dim, "maximum_principle_probe");
  ProbeResult res;
  if (u.size() == 0 || u.norm() == 0.0) {
    res.skipped = true;
    return res;
  }
  double w = bump_width;
  for (int attempt = 0; attempt <= 5; ++attempt, w *= 0.5) {
    const TestFunction phi = normal_bump(x, u, w);
    const double top = phi.value(x);
    bool ok = true;
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int s = 0; s < 400 && ok; ++s) {
      Vec v(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) v(i) = n01(rng);
      v *= w * std::pow(u01(rng), 1.0 / static_cast<double>(x.size())) / std::max(v.norm(), 1e-300);
      const Vec y = domain.project(Vec(x + v));
      ok = phi.value(y) <= top + 1e-12;
    }
    if (ok && !domain.is_whole_space()) {
      for (const auto& y : domain.sample_boundary(64, seed)) {
        if (phi.value(y) > top + 1e-12) {
          ok = false;
          break;
        }
      }
    }
    if (ok) {
      res.value = apply_generator(model, phi, x);
      res.width = w;
      return res;
    }
  }
  throw Error(ErrorCode::BumpConstruction, "maximum_principle_probe: bump does not attain its D-max at x");
}

}  // namespace stochinv
