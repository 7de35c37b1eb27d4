#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stochinv/core.hpp"

namespace stochinv {

enum class DomainKind {
  Halfspace,
  Polyhedron,
  Box,
  Orthant,
  Ball,
  Simplex,
  SmoothSublevel,
  Product,
  Union,
};

inline const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Halfspace: return "halfspace";
    case DomainKind::Polyhedron: return "polyhedron";
    case DomainKind::Box: return "box";
    case DomainKind::Orthant: return "orthant";
    case DomainKind::Ball: return "ball";
    case DomainKind::Simplex: return "simplex";
    case DomainKind::SmoothSublevel: return "smooth_sublevel";
    case DomainKind::Product: return "product";
    case DomainKind::Union: return "union";
  }
  return "unknown";
}

/// Scalar function with gradient; D = {g <= 0}.
struct SmoothFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
};

/// Finitely many unit generators of the first-order normal cone at a point.
/// An empty list means N_D(x) = {0}.
struct NormalCone {
  Vec base_point;
  std::vector<Vec> generators;
  /// True when the cone is known exactly (nonnegative span of generators);
  /// false for sampled proximal normals.
  bool is_polyhedral = true;

  bool interior() const { return generators.empty(); }
};

namespace detail {

inline constexpr double kMembershipTol = 1e-10;

/// Hildreth's dual coordinate ascent for min ||x - y||^2 s.t. A x <= c.
/// Returns the projection; throws NotConverged with the primal residual.
inline Vec project_polyhedron(const Mat& A, const Vec& c, const Vec& y, int max_sweeps = 200000) {
  const Eigen::Index m = A.rows();
  Vec x = y;
  if (m == 0) return x;
  Vec row_sq(m);
  for (Eigen::Index i = 0; i < m; ++i) row_sq(i) = A.row(i).squaredNorm();
  Vec lambda = Vec::Zero(m);
  const double scale = 1.0 + y.norm();
  const double stop = 1e-15 * scale;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_move = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (row_sq(i) == 0.0) continue;
      const double t = (A.row(i).dot(x) - c(i)) / row_sq(i);
      const double delta = std::max(-lambda(i), t);
      if (delta == 0.0) continue;
      lambda(i) += delta;
      x.noalias() -= delta * A.row(i).transpose();
      max_move = std::max(max_move, std::abs(delta) * std::sqrt(row_sq(i)));
    }
    if (max_move <= stop) return x;
  }
  const double residual = ((A * x - c).cwiseMax(0.0)).maxCoeff();
  throw Error(ErrorCode::NotConverged,
              "polyhedral projection hit the iteration cap; residual " + std::to_string(residual));
}

/// Euclidean projection onto {x >= 0, sum x = 1}.
inline Vec project_probability_simplex(const Vec& y) {
  const Eigen::Index d = y.size();
  std::vector<double> u(y.data(), y.data() + d);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  return (y.array() - tau).cwiseMax(0.0).matrix();
}

/// Newton iteration along the gradient onto the level set {g = 0}.
inline std::optional<Vec> newton_to_level_set(const SmoothFunction& g, Vec x, int max_iter = 100) {
  for (int it = 0; it < max_iter; ++it) {
    const double gv = g.value(x);
    const Vec grad = g.gradient(x);
    const double gn2 = grad.squaredNorm();
    if (!(gn2 > 0.0) || !std::isfinite(gv)) return std::nullopt;
    if (std::abs(gv) <= 1e-14 * (1.0 + std::sqrt(gn2) * (1.0 + x.norm()))) return x;
    x -= (gv / gn2) * grad;
  }
  return std::nullopt;
}

/// Deterministic unit directions: the signed axes followed by fixed-seed
/// Gaussian directions.
inline std::vector<Vec> probe_directions(Eigen::Index d, std::size_t count = 128) {
  std::vector<Vec> dirs;
  for (Eigen::Index i = 0; i < d; ++i) {
    dirs.push_back(Vec::Unit(d, i));
    dirs.push_back(-Vec::Unit(d, i));
  }
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> n01;
  while (dirs.size() < count) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = n01(rng);
    const double nv = v.norm();
    if (nv > 1e-12) dirs.push_back(v / nv);
  }
  return dirs;
}

inline void push_unique_direction(std::vector<Vec>& dirs, const Vec& u) {
  for (const auto& w : dirs) {
    if (w.dot(u) > 1.0 - 1e-12) return;
  }
  dirs.push_back(u);
}

}  // namespace detail

/// A closed subset of R^d. Immutable after construction; all queries are
/// const and thread-safe.
class ClosedDomain {
 public:
  // {x : a.x <= c}
  static ClosedDomain halfspace(Vec a, double c) {
    if (a.size() == 0 || a.norm() == 0.0)
      throw Error(ErrorCode::InvalidArgument, "halfspace normal must be nonzero");
    ClosedDomain d(DomainKind::Halfspace, a.size());
    d.A_ = a.transpose();
    d.c_ = Vec::Constant(1, c);
    d.set_default_box();
    return d;
  }

  /// Intersection of {a_i.x <= c_i}. Zero rows gives the whole space.
  static ClosedDomain polyhedron(Mat A, Vec c) {
    if (A.rows() != c.size())
      throw Error(ErrorCode::DimensionMismatch, "polyhedron: A rows must match offsets");
    if (A.cols() == 0) throw Error(ErrorCode::InvalidArgument, "polyhedron: zero ambient dimension");
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (A.row(i).norm() == 0.0)
        throw Error(ErrorCode::InvalidArgument, "polyhedron: zero constraint row " + std::to_string(i));
    }
    ClosedDomain d(DomainKind::Polyhedron, A.cols());
    d.A_ = std::move(A);
    d.c_ = std::move(c);
    d.set_default_box();
    return d;
  }

  static ClosedDomain whole_space(Eigen::Index dim) { return polyhedron(Mat(0, dim), Vec(0)); }

  static ClosedDomain box(Vec lo, Vec hi) {
    if (lo.size() != hi.size() || lo.size() == 0)
      throw Error(ErrorCode::DimensionMismatch, "box: bounds must have equal positive length");
    if ((hi - lo).minCoeff() < 0.0) throw Error(ErrorCode::InvalidArgument, "box: lo > hi");
    const Eigen::Index n = lo.size();
    ClosedDomain d(DomainKind::Box, n);
    d.A_.resize(2 * n, n);
    d.A_ << Mat::Identity(n, n), -Mat::Identity(n, n);
    d.c_.resize(2 * n);
    d.c_ << hi, -lo;
    d.lo_ = lo;
    d.hi_ = hi;
    d.box_lo_ = lo;
    d.box_hi_ = hi;
    return d;
  }

  static ClosedDomain orthant(Eigen::Index dim) {
    if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "orthant: dimension must be positive");
    ClosedDomain d(DomainKind::Orthant, dim);
    d.A_ = -Mat::Identity(dim, dim);
    d.c_ = Vec::Zero(dim);
    d.set_default_box();
    return d;
  }

  static ClosedDomain ball(Vec center, double radius) {
    if (!(radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball: radius must be positive");
    ClosedDomain d(DomainKind::Ball, center.size());
    d.box_lo_ = center.array() - radius;
    d.box_hi_ = center.array() + radius;
    d.center_ = std::move(center);
    d.radius_ = radius;
    return d;
  }

  /// Probability simplex {x >= 0, sum x = 1} in R^dim.
  static ClosedDomain simplex(Eigen::Index dim) {
    if (dim < 2) throw Error(ErrorCode::InvalidArgument, "simplex: dimension must be >= 2");
    ClosedDomain d(DomainKind::Simplex, dim);
    d.A_.resize(dim + 2, dim);
    d.A_ << -Mat::Identity(dim, dim), Vec::Ones(dim).transpose(), -Vec::Ones(dim).transpose();
    d.c_ = Vec::Zero(dim + 2);
    d.c_(dim) = 1.0;
    d.c_(dim + 1) = -1.0;
    d.box_lo_ = Vec::Zero(dim);
    d.box_hi_ = Vec::Ones(dim);
    return d;
  }

  static ClosedDomain smooth_sublevel(Eigen::Index dim, SmoothFunction g) {
    if (!g.value || !g.gradient)
      throw Error(ErrorCode::InvalidArgument, "smooth_sublevel: value and gradient required");
    ClosedDomain d(DomainKind::SmoothSublevel, dim);
    d.g_ = std::move(g);
    d.set_default_box();
    return d;
  }

  static ClosedDomain product(std::vector<ClosedDomain> factors) {
    if (factors.empty()) throw Error(ErrorCode::InvalidArgument, "product: no factors");
    Eigen::Index dim = 0;
    for (const auto& f : factors) dim += f.dim();
    ClosedDomain d(DomainKind::Product, dim);
    d.box_lo_.resize(dim);
    d.box_hi_.resize(dim);
    Eigen::Index off = 0;
    for (const auto& f : factors) {
      d.box_lo_.segment(off, f.dim()) = f.box_lo_;
      d.box_hi_.segment(off, f.dim()) = f.box_hi_;
      off += f.dim();
    }
    d.parts_ = std::move(factors);
    return d;
  }

  static ClosedDomain union_of(std::vector<ClosedDomain> members) {
    if (members.empty()) throw Error(ErrorCode::InvalidArgument, "union: no members");
    const Eigen::Index dim = members.front().dim();
    ClosedDomain d(DomainKind::Union, dim);
    d.box_lo_ = members.front().box_lo_;
    d.box_hi_ = members.front().box_hi_;
    for (const auto& m : members) {
      if (m.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "union: member dimensions differ");
      d.box_lo_ = d.box_lo_.cwiseMin(m.box_lo_);
      d.box_hi_ = d.box_hi_.cwiseMax(m.box_hi_);
    }
    d.parts_ = std::move(members);
    return d;
  }

  /// Copy with the sampling box set to [-r, r]^d for unbounded kinds.
  /// Bounded kinds keep their natural bounding box.
  ClosedDomain with_sampling_radius(double r) const {
    if (!(r > 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling radius must be positive");
    ClosedDomain d = *this;
    d.sampling_radius_ = r;
    switch (kind_) {
      case DomainKind::Halfspace:
      case DomainKind::Polyhedron:
      case DomainKind::Orthant:
      case DomainKind::SmoothSublevel:
        d.set_default_box();
        break;
      case DomainKind::Product:
      case DomainKind::Union: {
        Eigen::Index off = 0;
        for (auto& p : d.parts_) {
          p = p.with_sampling_radius(r);
          if (kind_ == DomainKind::Product) {
            d.box_lo_.segment(off, p.dim()) = p.box_lo_;
            d.box_hi_.segment(off, p.dim()) = p.box_hi_;
            off += p.dim();
          }
        }
        if (kind_ == DomainKind::Union) {
          d.box_lo_ = d.parts_.front().box_lo_;
          d.box_hi_ = d.parts_.front().box_hi_;
          for (const auto& p : d.parts_) {
            d.box_lo_ = d.box_lo_.cwiseMin(p.box_lo_);
            d.box_hi_ = d.box_hi_.cwiseMax(p.box_hi_);
          }
        }
        break;
      }
      default:
        break;
    }
    return d;
  }

  DomainKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  const Mat& constraint_matrix() const { return A_; }
  const Vec& constraint_offsets() const { return c_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }
  const std::vector<ClosedDomain>& parts() const { return parts_; }
  const SmoothFunction& level_function() const { return g_; }
  const Vec& sampling_lower() const { return box_lo_; }
  const Vec& sampling_upper() const { return box_hi_; }
  double sampling_radius() const { return sampling_radius_; }

  bool is_polyhedral() const {
    switch (kind_) {
      case DomainKind::Halfspace:
      case DomainKind::Polyhedron:
      case DomainKind::Box:
      case DomainKind::Orthant:
      case DomainKind::Simplex:
        return true;
      case DomainKind::Product:
        return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.is_polyhedral(); });
      default:
        return false;
    }
  }

  /// True for R^d itself (no boundary anywhere).
  bool is_whole_space() const {
    if (kind_ == DomainKind::Polyhedron) return A_.rows() == 0;
    if (kind_ == DomainKind::Product)
      return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.is_whole_space(); });
    if (kind_ == DomainKind::Union)
      return std::any_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.is_whole_space(); });
    return false;
  }

  bool contains(const Vec& x) const {
    require_dim(x, dim_, "contains");
    const double tol = detail::kMembershipTol * (1.0 + x.norm());
    switch (kind_) {
      case DomainKind::Halfspace:
      case DomainKind::Polyhedron:
      case DomainKind::Box:
      case DomainKind::Orthant:
      case DomainKind::Simplex:
        return polyhedral_violation(x) <= tol;
      case DomainKind::Ball:
        return (x - center_).norm() <= radius_ + detail::kMembershipTol * (1.0 + radius_ + x.norm());
      case DomainKind::SmoothSublevel: {
        const double gv = g_.value(x);
        return gv <= tol * (1.0 + g_.gradient(x).norm());
      }
      case DomainKind::Product: {
        Eigen::Index off = 0;
        for (const auto& f : parts_) {
          if (!f.contains(x.segment(off, f.dim()))) return false;
          off += f.dim();
        }
        return true;
      }
      case DomainKind::Union:
        return std::any_of(parts_.begin(), parts_.end(), [&](const auto& m) { return m.contains(x); });
    }
    return false;
  }

  Vec project(const Vec& y) const {
    require_dim(y, dim_, "project");
    switch (kind_) {
      case DomainKind::Halfspace: {
        const Vec a = A_.row(0).transpose();
        const double excess = a.dot(y) - c_(0);
        return excess > 0.0 ? Vec(y - (excess / a.squaredNorm()) * a) : y;
      }
      case DomainKind::Box:
        return y.cwiseMax(lo_).cwiseMin(hi_);
      case DomainKind::Orthant:
        return y.cwiseMax(0.0);
      case DomainKind::Simplex:
        return detail::project_probability_simplex(y);
      case DomainKind::Polyhedron:
        if (polyhedral_violation(y) <= 0.0) return y;
        return detail::project_polyhedron(A_, c_, y);
      case DomainKind::Ball: {
        const Vec r = y - center_;
        const double n = r.norm();
        return n <= radius_ ? y : Vec(center_ + (radius_ / n) * r);
      }
      case DomainKind::SmoothSublevel:
        if (g_.value(y) <= 0.0) return y;
        return foot_point(y);
      case DomainKind::Product: {
        Vec out(dim_);
        Eigen::Index off = 0;
        for (const auto& f : parts_) {
          out.segment(off, f.dim()) = f.project(y.segment(off, f.dim()));
          off += f.dim();
        }
        return out;
      }
      case DomainKind::Union: {
        Vec best;
        double best_dist = std::numeric_limits<double>::infinity();
        for (const auto& m : parts_) {
          Vec p = m.project(y);
          const double dd = (p - y).norm();
          if (dd < best_dist) {
            best_dist = dd;
            best = std::move(p);
          }
        }
        return best;
      }
    }
    return y;
  }

  double distance(const Vec& y) const {
    if (contains(y)) return 0.0;
    return (y - project(y)).norm();
  }

  /// Default scale-aware activity tolerance 1e-8 * (1 + ||x||).
  static double default_active_tol(const Vec& x) { return 1e-8 * (1.0 + x.norm()); }

  NormalCone normal_cone(const Vec& x) const { return normal_cone(x, default_active_tol(x)); }

  NormalCone normal_cone(const Vec& x, double tol) const {
    require_dim(x, dim_, "normal_cone");
    if (!contains(x)) {
      const double dist = (x - project(x)).norm();
      if (dist > tol)
        throw Error(ErrorCode::OutsideDomain, "normal_cone: point is " + std::to_string(dist) +
                                                  " away from the domain (tol " + std::to_string(tol) + ")");
    }
    NormalCone cone;
    cone.base_point = x;
    switch (kind_) {
      case DomainKind::Halfspace:
      case DomainKind::Polyhedron:
      case DomainKind::Box:
      case DomainKind::Orthant:
      case DomainKind::Simplex:
        for (Eigen::Index i = 0; i < A_.rows(); ++i) {
          const double an = A_.row(i).norm();
          if (std::abs(A_.row(i).dot(x) - c_(i)) <= tol * an)
            detail::push_unique_direction(cone.generators, A_.row(i).transpose() / an);
        }
        break;
      case DomainKind::Ball: {
        const Vec r = x - center_;
        const double n = r.norm();
        if (std::abs(n - radius_) <= tol) cone.generators.push_back(r / n);
        break;
      }
      case DomainKind::SmoothSublevel: {
        const Vec grad = g_.gradient(x);
        const double gn = grad.norm();
        const double gv = g_.value(x);
        if (gn == 0.0 || !std::isfinite(gn)) {
          if (std::abs(gv) <= tol)
            throw Error(ErrorCode::DegenerateGeometry, "normal_cone: vanishing gradient on the boundary");
          break;
        }
        if (gv >= -tol * gn) cone.generators.push_back(grad / gn);
        break;
      }
      case DomainKind::Product: {
        Eigen::Index off = 0;
        for (const auto& f : parts_) {
          const NormalCone fc = f.normal_cone(x.segment(off, f.dim()), tol);
          for (const auto& g : fc.generators) {
            Vec u = Vec::Zero(dim_);
            u.segment(off, f.dim()) = g;
            cone.generators.push_back(std::move(u));
          }
          cone.is_polyhedral = cone.is_polyhedral && fc.is_polyhedral;
          off += f.dim();
        }
        break;
      }
      case DomainKind::Union:
        cone = union_proximal_cone(x, tol);
        break;
    }
    return cone;
  }

  /// Vertices of D intersected with the sampling box that lie on the boundary
  /// of D. Polyhedral kinds only; empty otherwise.
  std::vector<Vec> boundary_vertices() const {
    std::vector<Vec> out;
    if (!is_polyhedral()) return out;
    if (kind_ == DomainKind::Product) return flattened().boundary_vertices();
    const Eigen::Index d = dim_;
    const Eigen::Index m = A_.rows();
    if (m == 0) return out;
    Mat Aall(m + 2 * d, d);
    Vec call(m + 2 * d);
    Aall << A_, Mat::Identity(d, d), -Mat::Identity(d, d);
    call << c_, box_hi_, -box_lo_;
    const Eigen::Index total = Aall.rows();
    // Cap on the number of d-subsets examined.
    double combos = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) combos *= static_cast<double>(total - i) / static_cast<double>(i + 1);
    if (combos > 2e6) return out;
    std::vector<Eigen::Index> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      Mat S(d, d);
      Vec rhs(d);
      bool uses_domain_row = false;
      for (Eigen::Index k = 0; k < d; ++k) {
        S.row(k) = Aall.row(idx[k]);
        rhs(k) = call(idx[k]);
        uses_domain_row = uses_domain_row || idx[k] < m;
      }
      if (uses_domain_row) {
        Eigen::FullPivLU<Mat> lu(S);
        if (lu.rank() == d) {
          const Vec v = lu.solve(rhs);
          const double scale = 1e-9 * (1.0 + v.norm());
          if (((Aall * v - call).array() <= scale).all()) {
            bool on_boundary = false;
            for (Eigen::Index i = 0; i < m; ++i) {
              if (std::abs(A_.row(i).dot(v) - c_(i)) <= scale * A_.row(i).norm()) on_boundary = true;
            }
            bool dup = false;
            for (const auto& w : out) dup = dup || (w - v).norm() <= scale;
            if (on_boundary && !dup) out.push_back(v);
          }
        }
      }
      // next combination
      Eigen::Index k = d - 1;
      while (k >= 0 && idx[k] == total - d + k) --k;
      if (k < 0) break;
      ++idx[k];
      for (Eigen::Index j = k + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
    }
    std::sort(out.begin(), out.end(), [](const Vec& a, const Vec& b) {
      return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    });
    return out;
  }

  /// n boundary points, deterministic in seed. Polyhedral kinds list their
  /// boundary vertices first, then facet samples round-robin over facets.
  std::vector<Vec> sample_boundary(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample_boundary: n must be >= 1");
    if (is_whole_space()) throw Error(ErrorCode::EmptyBoundary, "sample_boundary: domain has no boundary");
    std::mt19937_64 rng(seed);
    std::vector<Vec> out;
    out.reserve(n);
    switch (kind_) {
      case DomainKind::Halfspace:
      case DomainKind::Polyhedron:
      case DomainKind::Box:
      case DomainKind::Orthant:
      case DomainKind::Simplex:
        sample_polyhedral_boundary(n, rng, out);
        break;
      case DomainKind::Ball: {
        std::normal_distribution<double> n01;
        while (out.size() < n) {
          Vec v(dim_);
          for (Eigen::Index i = 0; i < dim_; ++i) v(i) = n01(rng);
          const double nv = v.norm();
          if (nv < 1e-12) continue;
          out.push_back(center_ + (radius_ / nv) * v);
        }
        break;
      }
      case DomainKind::SmoothSublevel: {
        std::size_t attempts = 0;
        while (out.size() < n && attempts < 50 * n + 100) {
          ++attempts;
          const Vec y = uniform_in_box(rng);
          auto x = detail::newton_to_level_set(g_, y);
          if (x && in_box(*x) && !normal_cone(*x).interior()) out.push_back(*x);
        }
        if (out.empty())
          throw Error(ErrorCode::EmptyBoundary, "sample_boundary: no level-set point found in the sampling box");
        for (std::size_t i = 0, found = out.size(); out.size() < n; ++i) out.push_back(out[i % found]);
        break;
      }
      case DomainKind::Product: {
        if (is_polyhedral()) {
          const ClosedDomain flat = flattened();
          sample_polyhedral_boundary(n, rng, out, &flat);
        } else {
          sample_product_boundary(n, rng(), out);
        }
        break;
      }
      case DomainKind::Union:
        sample_union_boundary(n, rng(), out);
        break;
    }
    return out;
  }

  /// n points of D: uniform draws from the sampling box, projected onto D when
  /// outside. Deterministic in seed.
  std::vector<Vec> sample_members(std::size_t n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<Vec> out;
    out.reserve(n);
    while (out.size() < n) {
      const Vec y = uniform_in_box(rng);
      out.push_back(contains(y) ? y : project(y));
    }
    return out;
  }

  /// Product of polyhedral factors as one polyhedron.
  ClosedDomain flattened() const {
    if (kind_ != DomainKind::Product || !is_polyhedral()) return *this;
    Eigen::Index rows = 0;
    std::vector<ClosedDomain> flat;
    for (const auto& f : parts_) {
      flat.push_back(f.flattened());
      rows += flat.back().A_.rows();
    }
    Mat A = Mat::Zero(rows, dim_);
    Vec c(rows);
    Eigen::Index r = 0, off = 0;
    for (const auto& f : flat) {
      A.block(r, off, f.A_.rows(), f.dim()) = f.A_;
      c.segment(r, f.A_.rows()) = f.c_;
      r += f.A_.rows();
      off += f.dim();
    }
    ClosedDomain p(DomainKind::Polyhedron, dim_);
    p.A_ = std::move(A);
    p.c_ = std::move(c);
    p.box_lo_ = box_lo_;
    p.box_hi_ = box_hi_;
    return p;
  }

 private:
  ClosedDomain(DomainKind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {
    if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "domain dimension must be positive");
  }

  void set_default_box() {
    box_lo_ = Vec::Constant(dim_, -sampling_radius_);
    box_hi_ = Vec::Constant(dim_, sampling_radius_);
  }

  double polyhedral_violation(const Vec& x) const {
    if (A_.rows() == 0) return 0.0;
    Vec viol = A_ * x - c_;
    for (Eigen::Index i = 0; i < A_.rows(); ++i) viol(i) /= A_.row(i).norm();
    return viol.maxCoeff();
  }

  Vec uniform_in_box(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Vec y(dim_);
    for (Eigen::Index i = 0; i < dim_; ++i) y(i) = box_lo_(i) + (box_hi_(i) - box_lo_(i)) * u01(rng);
    return y;
  }

  bool in_box(const Vec& x) const {
    const double tol = 1e-9 * (1.0 + x.norm());
    return ((x - box_lo_).array() >= -tol).all() && ((box_hi_ - x).array() >= -tol).all();
  }

  // Closest point on {g = 0} to y: alternate a Newton pull onto the level set
  // with a tangential correction until y - x is normal to the surface.
  Vec foot_point(const Vec& y) const {
    auto x = detail::newton_to_level_set(g_, y);
    if (!x) throw Error(ErrorCode::DegenerateGeometry, "project: level-set Newton step failed");
    double tangential = 0.0;
    for (int it = 0; it < 500; ++it) {
      const Vec grad = g_.gradient(*x);
      const Vec n = grad / grad.norm();
      const Vec r = y - *x;
      const Vec t = r - r.dot(n) * n;
      tangential = t.norm();
      if (tangential <= 1e-13 * (1.0 + y.norm())) return *x;
      auto next = detail::newton_to_level_set(g_, Vec(*x + t));
      if (!next) break;
      x = std::move(next);
    }
    throw Error(ErrorCode::NotConverged,
                "project: foot-point iteration did not converge; tangential residual " + std::to_string(tangential));
  }

  void sample_polyhedral_boundary(std::size_t n, std::mt19937_64& rng, std::vector<Vec>& out,
                                  const ClosedDomain* flat = nullptr) const {
    const ClosedDomain& P = flat ? *flat : *this;
    const std::vector<Vec> verts = P.boundary_vertices();
    for (const auto& v : verts) {
      if (out.size() >= n) return;
      out.push_back(v);
    }
    const Eigen::Index d = dim_;
    const Eigen::Index m = P.A_.rows();
    // facet i is usable when some truncated vertex has row i active
    std::vector<Eigen::Index> facets;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double an = P.A_.row(i).norm();
      bool seen = verts.empty();
      for (const auto& v : verts) {
        if (std::abs(P.A_.row(i).dot(v) - P.c_(i)) <= 1e-9 * (1.0 + v.norm()) * an) seen = true;
      }
      if (seen) facets.push_back(i);
    }
    if (facets.empty()) throw Error(ErrorCode::EmptyBoundary, "sample_boundary: no facet meets the sampling box");
    Mat Abox(m + 2 * d + 1, d);
    Vec cbox(m + 2 * d + 1);
    Abox.topRows(m + 2 * d) << P.A_, Mat::Identity(d, d), -Mat::Identity(d, d);
    cbox.head(m + 2 * d) << P.c_, P.box_hi_, -P.box_lo_;
    std::size_t k = 0;
    while (out.size() < n) {
      const Eigen::Index i = facets[k++ % facets.size()];
      Abox.row(m + 2 * d) = -P.A_.row(i);
      cbox(m + 2 * d) = -P.c_(i);
      const Vec y = uniform_in_box(rng);
      out.push_back(detail::project_polyhedron(Abox, cbox, y));
    }
  }

  void sample_product_boundary(std::size_t n, std::uint64_t seed, std::vector<Vec>& out) const {
    std::vector<std::vector<Vec>> bnd(parts_.size()), mem(parts_.size());
    std::vector<std::size_t> with_boundary;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      mem[i] = parts_[i].sample_members(n, seed + 7919 * (i + 1));
      if (!parts_[i].is_whole_space()) {
        bnd[i] = parts_[i].sample_boundary(n, seed + 104729 * (i + 1));
        with_boundary.push_back(i);
      }
    }
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t face = with_boundary[k % with_boundary.size()];
      Vec x(dim_);
      Eigen::Index off = 0;
      for (std::size_t i = 0; i < parts_.size(); ++i) {
        x.segment(off, parts_[i].dim()) = (i == face) ? bnd[i][k] : mem[i][k];
        off += parts_[i].dim();
      }
      out.push_back(std::move(x));
    }
  }

  void sample_union_boundary(std::size_t n, std::uint64_t seed, std::vector<Vec>& out) const {
    std::vector<std::vector<Vec>> bnd;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i].is_whole_space()) continue;
      bnd.push_back(parts_[i].sample_boundary(4 * n, seed + 15485863 * (i + 1)));
    }
    for (std::size_t k = 0; k < 4 * n && out.size() < n; ++k) {
      for (const auto& b : bnd) {
        if (out.size() >= n) break;
        if (!normal_cone(b[k]).interior()) out.push_back(b[k]);
      }
    }
    if (out.empty()) throw Error(ErrorCode::EmptyBoundary, "sample_boundary: union boundary sample is empty");
    for (std::size_t k = 0; out.size() < n; ++k) out.push_back(out[k]);
  }

  // Proximal normals: a candidate direction u is kept when x is the nearest
  // point of D to x + eps u.
  NormalCone union_proximal_cone(const Vec& x, double tol) const {
    NormalCone cone;
    cone.base_point = x;
    cone.is_polyhedral = false;
    std::vector<Vec> candidates;
    for (const auto& m : parts_) {
      if (m.distance(x) > tol) continue;
      for (const auto& g : m.normal_cone(x, tol).generators) detail::push_unique_direction(candidates, g);
    }
    for (const auto& v : detail::probe_directions(dim_)) candidates.push_back(v);
    const double eps = 1e-4 * (1.0 + x.norm());
    for (const auto& u : candidates) {
      const Vec y = x + eps * u;
      if (contains(y)) continue;
      if ((project(y) - x).norm() <= 1e-6 * eps + tol) detail::push_unique_direction(cone.generators, u);
    }
    return cone;
  }

  DomainKind kind_;
  Eigen::Index dim_;
  Mat A_;
  Vec c_;
  Vec lo_, hi_;
  Vec center_;
  double radius_ = 0.0;
  SmoothFunction g_;
  std::vector<ClosedDomain> parts_;
  double sampling_radius_ = 10.0;
  Vec box_lo_, box_hi_;
};

}  // namespace stochinv
