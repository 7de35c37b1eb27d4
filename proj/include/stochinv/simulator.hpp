#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "stochinv/core.hpp"
#include "stochinv/domain.hpp"
#include "stochinv/generator.hpp"
#include "stochinv/model.hpp"
#include "stochinv/parallel.hpp"

namespace stochinv {

enum class Scheme { Euler, FullTruncation };

inline const char* to_string(Scheme s) { return s == Scheme::Euler ? "euler" : "full_truncation"; }

struct SimConfig {
  double T = 1.0;
  double dt = 1e-3;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 1;
  Scheme scheme = Scheme::FullTruncation;
  unsigned threads = 1;

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "simulation: dt must be positive");
    if (!(T >= dt)) throw Error(ErrorCode::InvalidArgument, "simulation: T must be >= dt");
    if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "simulation: n_paths must be >= 1");
  }

  std::size_t steps() const { return static_cast<std::size_t>(std::ceil(T / dt - 1e-9)); }
};

/// Seed of path `index` under root seed `root`: one SplitMix64 round applied
/// to root + (index + 1) * 0x9E3779B97F4A7C15. Path i's stream does not
/// depend on how many paths are run.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct SimulatedPath {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<int> jump_counts;  // jumps in (t_{n-1}, t_n]; 0 at t_0
  bool blown_up = false;
};

namespace detail {

/// Drives one Euler path and calls visit(step, t, X, jumps) after every step
/// (including step 0). Returns false when the state became non-finite.
template <typename Visit>
bool run_path(const JumpDiffusionModel& model, const ClosedDomain* domain, const Vec& x0, const SimConfig& cfg,
              std::size_t path_index, Visit&& visit) {
  const std::size_t n = cfg.steps();
  const double h = cfg.T / static_cast<double>(n);
  const double sqh = std::sqrt(h);
  const double mass = model.jumps.total_mass();
  std::mt19937_64 rng(split_seed(cfg.seed, path_index));
  std::normal_distribution<double> n01;
  std::poisson_distribution<int> count(mass > 0.0 ? mass * h : 1.0);
  std::vector<double> weights;
  for (const auto& a : model.jumps.atoms) weights.push_back(a.weight);
  std::discrete_distribution<std::size_t> mark(weights.begin(), weights.end());

  Vec X = x0;
  Vec xi(model.dim);
  if (!visit(std::size_t{0}, 0.0, X, 0)) return true;
  for (std::size_t s = 1; s <= n; ++s) {
    const Vec Y = (cfg.scheme == Scheme::FullTruncation) ? domain->project(X) : X;
    for (Eigen::Index i = 0; i < model.dim; ++i) xi(i) = n01(rng);
    Vec next = X + model.drift(X) * h + diffusion_matrix(model, Y) * (sqh * xi);
    int jumps = 0;
    if (mass > 0.0) {
      next -= h * mean_jump(model.jumps, X, model.dim);
      jumps = count(rng);
      for (int j = 0; j < jumps; ++j) next += model.jumps.amplitude(X, mark(rng));
    }
    X = std::move(next);
    if (!X.allFinite()) return false;
    if (!visit(s, h * static_cast<double>(s), X, jumps)) return true;
  }
  return true;
}

inline void check_scheme(const ClosedDomain* domain, const SimConfig& cfg) {
  if (cfg.scheme == Scheme::FullTruncation && domain == nullptr)
    throw Error(ErrorCode::InvalidArgument, "full-truncation scheme needs a domain");
}

}  // namespace detail

/// Euler path of the jump-diffusion. Bit-reproducible in (cfg.seed, path_index).
inline SimulatedPath simulate_path(const JumpDiffusionModel& model, const Vec& x0, const SimConfig& cfg,
                                   std::size_t path_index, const ClosedDomain* domain = nullptr) {
  cfg.validate();
  require_dim(x0, model.dim, "simulate_path");
  detail::check_scheme(domain, cfg);
  SimulatedPath path;
  const bool ok = detail::run_path(model, domain, x0, cfg, path_index, [&](std::size_t, double t, const Vec& X, int j) {
    path.times.push_back(t);
    path.states.push_back(X);
    path.jump_counts.push_back(j);
    return true;
  });
  path.blown_up = !ok;
  return path;
}

/// Columns t, x1..xd, jump_flag.
inline void write_path_csv(std::ostream& os, const SimulatedPath& path) {
  if (path.states.empty()) return;
  os << "t";
  for (Eigen::Index i = 0; i < path.states.front().size(); ++i) os << ",x" << (i + 1);
  os << ",jump_flag\n";
  char buf[64];
  for (std::size_t s = 0; s < path.states.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%.17g", path.times[s]);
    os << buf;
    for (Eigen::Index i = 0; i < path.states[s].size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", path.states[s](i));
      os << buf;
    }
    os << ',' << (path.jump_counts[s] > 0 ? 1 : 0) << '\n';
  }
}

struct PathStats {
  std::vector<double> deltas;
  /// Fraction of (path, step >= 1) samples with dist(X, D) > delta.
  std::vector<double> violation_fraction;
  /// Fraction of paths with dist(X, D) > delta at some step.
  std::vector<double> exit_fraction;
  double sup_sq_norm_mean = 0.0;
  double sup_sq_norm_se = 0.0;
  /// First time dist > deltas[0], 10 equal bins over (0, T].
  std::vector<std::size_t> exit_time_histogram;
  std::size_t never_exited = 0;
  std::size_t paths = 0;
  std::size_t samples = 0;
  std::size_t blown_up = 0;
  double dt = 0.0;
};

/// Boundary-violation statistics over cfg.n_paths paths from each start.
/// Path index for start s and path p is s * n_paths + p.
inline PathStats violation_statistics(const JumpDiffusionModel& model, const ClosedDomain& domain,
                                      const std::vector<Vec>& x0_list, const SimConfig& cfg,
                                      const std::vector<double>& delta_list) {
  cfg.validate();
  if (delta_list.empty()) throw Error(ErrorCode::InvalidArgument, "violation_statistics: no deltas");
  const std::size_t nd = delta_list.size();
  const std::size_t total = x0_list.size() * cfg.n_paths;
  const std::size_t n_steps = cfg.steps();
  struct PerPath {
    std::vector<std::uint64_t> over;
    std::vector<char> exited;
    double sup_sq = 0.0;
    long first_exit_step = -1;
    bool blown = false;
  };
  std::vector<PerPath> per(total);
  parallel_for(total, cfg.threads, [&](std::size_t idx) {
    PerPath& pp = per[idx];
    pp.over.assign(nd, 0);
    pp.exited.assign(nd, 0);
    const Vec& x0 = x0_list[idx / cfg.n_paths];
    const bool ok = detail::run_path(model, &domain, x0, cfg, idx, [&](std::size_t s, double, const Vec& X, int) {
      pp.sup_sq = std::max(pp.sup_sq, X.squaredNorm());
      if (s == 0) return true;
      const double dist = domain.distance(X);
      for (std::size_t k = 0; k < nd; ++k) {
        if (dist > delta_list[k]) {
          ++pp.over[k];
          pp.exited[k] = 1;
        }
      }
      if (pp.first_exit_step < 0 && dist > delta_list[0]) pp.first_exit_step = static_cast<long>(s);
      return true;
    });
    pp.blown = !ok;
  });

  PathStats st;
  st.deltas = delta_list;
  st.dt = cfg.T / static_cast<double>(n_steps);
  st.paths = total;
  st.samples = total * n_steps;
  st.exit_time_histogram.assign(10, 0);
  std::vector<std::uint64_t> over(nd, 0), exited(nd, 0);
  std::vector<double> sups(total);
  for (std::size_t i = 0; i < total; ++i) {
    for (std::size_t k = 0; k < nd; ++k) {
      over[k] += per[i].over[k];
      exited[k] += per[i].exited[k];
    }
    sups[i] = per[i].sup_sq;
    st.blown_up += per[i].blown ? 1 : 0;
    if (per[i].first_exit_step < 0) {
      ++st.never_exited;
    } else {
      const auto bin = std::min<std::size_t>(9, (static_cast<std::size_t>(per[i].first_exit_step) - 1) * 10 / n_steps);
      ++st.exit_time_histogram[bin];
    }
  }
  for (std::size_t k = 0; k < nd; ++k) {
    st.violation_fraction.push_back(static_cast<double>(over[k]) / static_cast<double>(std::max<std::size_t>(1, st.samples)));
    st.exit_fraction.push_back(static_cast<double>(exited[k]) / static_cast<double>(std::max<std::size_t>(1, total)));
  }
  const double mean = pairwise_sum(sups) / static_cast<double>(total);
  std::vector<double> dev(total);
  for (std::size_t i = 0; i < total; ++i) dev[i] = (sups[i] - mean) * (sups[i] - mean);
  st.sup_sq_norm_mean = mean;
  st.sup_sq_norm_se = total > 1 ? std::sqrt(pairwise_sum(dev) / static_cast<double>(total - 1) / static_cast<double>(total)) : 0.0;
  return st;
}

/// 4 (|x|^2 + L t (t + 8)) exp(4 L t (t + 8)).
inline double moment_bound(const Vec& x0, double t, double L) {
  const double a = L * t * (t + 8.0);
  return 4.0 * (x0.squaredNorm() + a) * std::exp(4.0 * a);
}

struct MomentCheck {
  double t = 0.0;
  double estimate = 0.0;  // MC mean of sup_{s <= t} |X_s|^2
  double std_error = 0.0;
  double bound = 0.0;
  bool skipped = false;  // bound not representable
  bool pass = false;
};

/// Moment checks at several horizons from one batch of paths run to max(times).
inline std::vector<MomentCheck> verify_moment_bounds(const JumpDiffusionModel& model, const Vec& x0,
                                                     const std::vector<double>& times, const SimConfig& cfg, double L,
                                                     const ClosedDomain* domain = nullptr) {
  if (times.empty()) return {};
  require_dim(x0, model.dim, "verify_moment_bound");
  detail::check_scheme(domain, cfg);
  SimConfig run = cfg;
  run.T = *std::max_element(times.begin(), times.end());
  run.validate();
  const std::size_t n_steps = run.steps();
  const double h = run.T / static_cast<double>(n_steps);
  const std::size_t nt = times.size();
  std::vector<std::vector<double>> sup(nt, std::vector<double>(run.n_paths, 0.0));
  std::vector<char> blown(run.n_paths, 0);
  parallel_for(run.n_paths, run.threads, [&](std::size_t p) {
    double running = 0.0;
    const bool ok = detail::run_path(model, domain, x0, run, p, [&](std::size_t, double t, const Vec& X, int) {
      running = std::max(running, X.squaredNorm());
      for (std::size_t k = 0; k < nt; ++k)
        if (t <= times[k] + 0.5 * h) sup[k][p] = running;
      return true;
    });
    blown[p] = ok ? 0 : 1;
  });
  std::vector<MomentCheck> out;
  for (std::size_t k = 0; k < nt; ++k) {
    MomentCheck mc;
    mc.t = times[k];
    mc.bound = moment_bound(x0, times[k], L);
    const double n = static_cast<double>(run.n_paths);
    mc.estimate = pairwise_sum(sup[k]) / n;
    std::vector<double> dev(run.n_paths);
    for (std::size_t p = 0; p < run.n_paths; ++p) dev[p] = (sup[k][p] - mc.estimate) * (sup[k][p] - mc.estimate);
    mc.std_error = run.n_paths > 1 ? std::sqrt(pairwise_sum(dev) / (n - 1.0) / n) : 0.0;
    const bool any_blown = std::any_of(blown.begin(), blown.end(), [](char b) { return b != 0; });
    if (!std::isfinite(mc.bound)) {
      mc.skipped = true;
      mc.pass = false;
    } else {
      mc.pass = !any_blown && mc.estimate + 3.0 * mc.std_error <= mc.bound;
    }
    out.push_back(mc);
  }
  return out;
}

inline MomentCheck verify_moment_bound(const JumpDiffusionModel& model, const Vec& x0, double t, const SimConfig& cfg,
                                       double L, const ClosedDomain* domain = nullptr) {
  return verify_moment_bounds(model, x0, {t}, cfg, L, domain).front();
}

struct DynkinEstimate {
  double mean = 0.0;  // MC mean of (phi(X_t) - phi(x)) / t
  double std_error = 0.0;
};

/// (E[phi(X_t)] - phi(x)) / t by simulation with horizon cfg.T = t.
inline DynkinEstimate dynkin_estimate(const JumpDiffusionModel& model, const TestFunction& phi, const Vec& x,
                                      const SimConfig& cfg, const ClosedDomain* domain = nullptr) {
  cfg.validate();
  detail::check_scheme(domain, cfg);
  const double phix = phi.value(x);
  std::vector<double> vals(cfg.n_paths, 0.0);
  parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t p) {
    Vec last = x;
    detail::run_path(model, domain, x, cfg, p, [&](std::size_t, double, const Vec& X, int) {
      last = X;
      return true;
    });
    vals[p] = (phi.value(last) - phix) / cfg.T;
  });
  DynkinEstimate est;
  const double n = static_cast<double>(cfg.n_paths);
  est.mean = pairwise_sum(vals) / n;
  std::vector<double> dev(cfg.n_paths);
  for (std::size_t p = 0; p < cfg.n_paths; ++p) dev[p] = (vals[p] - est.mean) * (vals[p] - est.mean);
  est.std_error = cfg.n_paths > 1 ? std::sqrt(pairwise_sum(dev) / (n - 1.0) / n) : 0.0;
  return est;
}

}  // namespace stochinv
