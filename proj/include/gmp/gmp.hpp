#pragma once

#include "gmp/core.hpp"
#include "gmp/inner_solvers.hpp"

#include <chrono>
#include <numeric>
#include <optional>

namespace gmp {

/// Selected atoms grouped by round; rounds are pairwise disjoint.
struct ActiveSet {
  std::vector<Index> all_indices;
  std::vector<std::vector<Index>> rounds;

  void add_round(const std::vector<Index>& J) {
    rounds.push_back(J);
    all_indices.insert(all_indices.end(), J.begin(), J.end());
  }
  bool contains(Index j) const {
    return std::find(all_indices.begin(), all_indices.end(), j) != all_indices.end();
  }
};

/// One stopping condition; several may be combined with OR semantics.
struct StopRule {
  enum class Kind { relative_delta, grad_inf, residual_norm };
  Kind kind;
  double threshold;

  static StopRule relative_delta(double epsilon) {
    if (epsilon <= 0) throw std::invalid_argument("StopRule: epsilon must be > 0");
    return {Kind::relative_delta, epsilon};
  }
  static StopRule grad_inf(double r_inf) {
    if (r_inf <= 0) throw std::invalid_argument("StopRule: r_inf must be > 0");
    return {Kind::grad_inf, r_inf};
  }
  static StopRule residual_norm(double r_2) {
    if (r_2 <= 0) throw std::invalid_argument("StopRule: r_2 must be > 0");
    return {Kind::residual_norm, r_2};
  }
};

/// Up to rho indices with the largest |g_i| among violators (|g_i| > lambda),
/// excluding already-selected atoms. Ties break to the lowest index. An empty
/// result certifies ||a^T A||_inf <= lambda on the unselected atoms.
/// `zero_tol` raises the violation threshold so correlations at rounding-noise
/// level do not count as violators once the residual is numerically zero.
inline std::vector<Index> worst_case_select(const Eigen::VectorXd& g,
                                            const std::vector<Index>& excluded,
                                            int rho, double lambda,
                                            double zero_tol = 0.0) {
  if (rho < 1) throw std::invalid_argument("worst_case_select: rho must be >= 1");
  std::vector<char> skip(static_cast<std::size_t>(g.size()), 0);
  for (Index j : excluded) {
    if (j < 0 || j >= g.size())
      throw std::out_of_range("worst_case_select: excluded index out of range");
    skip[static_cast<std::size_t>(j)] = 1;
  }
  std::vector<Index> cand;
  for (Index j = 0; j < g.size(); ++j)
    if (!skip[static_cast<std::size_t>(j)] && std::abs(g[j]) > lambda + zero_tol)
      cand.push_back(j);
  auto by_magnitude = [&](Index a, Index b) {
    double ma = std::abs(g[a]), mb = std::abs(g[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  if (static_cast<int>(cand.size()) > rho) {
    std::partial_sort(cand.begin(), cand.begin() + rho, cand.end(), by_magnitude);
    cand.resize(static_cast<std::size_t>(rho));
  } else {
    std::sort(cand.begin(), cand.end(), by_magnitude);
  }
  return cand;
}

/// Returns the first rule satisfied, if any. relative_delta uses the CCP
/// criterion 2*delta^t / ||b||^2 <= epsilon with ||b||^2 = 2*theta0.
inline std::optional<StopRule::Kind> check_stop(const SolveTrace& trace,
                                                const Residual& residual,
                                                const Eigen::VectorXd& g,
                                                const std::vector<StopRule>& rules) {
  for (const StopRule& rule : rules) {
    switch (rule.kind) {
      case StopRule::Kind::relative_delta: {
        if (trace.delta_per_outer.empty())
          throw std::invalid_argument("check_stop: relative_delta needs a recorded step");
        double delta = trace.delta_per_outer.back();
        double b_sq = 2.0 * trace.theta0;
        if (b_sq <= 0 || delta / trace.theta0 <= rule.threshold)
          return rule.kind;
        break;
      }
      case StopRule::Kind::grad_inf:
        if (g.lpNorm<Eigen::Infinity>() <= rule.threshold) return rule.kind;
        break;
      case StopRule::Kind::residual_norm:
        if (residual.vec.norm() <= rule.threshold) return rule.kind;
        break;
    }
  }
  return std::nullopt;
}

inline std::vector<StopRule> default_stops(double epsilon) {
  return {StopRule::relative_delta(epsilon)};
}

namespace detail {

struct OuterState {
  ActiveSet active;
  Eigen::VectorXd u;  // coefficients aligned with active.all_indices
};

/// Subspace exploratory matching: pick omega*rho candidates by |g|, run a
/// short master solve over I union candidates, rank candidates by |u_i|.
inline std::vector<Index> sgmp_select_impl(const DesignMatrix& A,
                                           const Eigen::VectorXd& b,
                                           const OuterState& state,
                                           const Eigen::VectorXd& g,
                                           const GmpConfig& cfg,
                                           double L_carry, double zero_tol = 0.0) {
  std::vector<Index> cand = worst_case_select(g, state.active.all_indices,
                                              cfg.omega * cfg.rho, cfg.lambda, zero_tol);
  if (static_cast<int>(cand.size()) <= cfg.rho) return cand;

  std::vector<Index> I_omega = state.active.all_indices;
  I_omega.insert(I_omega.end(), cand.begin(), cand.end());
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Index>(I_omega.size()));
  warm.head(state.u.size()) = state.u;

  GmpConfig explore = cfg;
  explore.max_inner = std::max(1, cfg.max_inner / 2);
  InnerState inner = cfg.lambda > 0
                         ? pg_solve(A, b, I_omega, warm, explore, L_carry)
                         : cgd_solve(A, b, I_omega, warm, explore);

  const Index base = state.u.size();
  std::vector<std::pair<Index, double>> ranked;  // (atom, |u|)
  for (std::size_t i = 0; i < cand.size(); ++i) {
    double mag = std::abs(inner.u[base + static_cast<Index>(i)]);
    if (mag > 0) ranked.emplace_back(cand[i], mag);
  }
  if (ranked.empty()) {
    // Exploratory coefficients all shrank to zero; fall back to |g| order.
    cand.resize(static_cast<std::size_t>(cfg.rho));
    return cand;
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<Index> out;
  for (const auto& [atom, mag] : ranked) {
    out.push_back(atom);
    if (static_cast<int>(out.size()) == cfg.rho) break;
  }
  return out;
}

}  // namespace detail

/// Exposed for direct testing; state is (I, warm coefficients over I).
inline std::vector<Index> sgmp_select(const DesignMatrix& A, const Eigen::VectorXd& b,
                                      const ActiveSet& active, const Eigen::VectorXd& g,
                                      const GmpConfig& cfg, const Eigen::VectorXd& x_warm) {
  if (cfg.omega == 1) return worst_case_select(g, active.all_indices, cfg.rho, cfg.lambda);
  detail::OuterState st{active, x_warm};
  return detail::sgmp_select_impl(A, b, st, g, cfg, 0.0);
}

/// Algorithm core shared by GMP and SGMP; `subspace` toggles the
/// exploratory selection when cfg.omega > 1.
inline std::pair<SparseSolution, SolveTrace> gmp_solve_impl(
    const DesignMatrix& A, const Eigen::VectorXd& b, const GmpConfig& cfg,
    const std::vector<StopRule>& stops, bool subspace) {
  cfg.validate();
  if (b.size() != A.rows())
    throw std::invalid_argument("gmp_solve: rhs length mismatch");

  SolveTrace trace;
  trace.theta0 = 0.5 * b.squaredNorm();

  SparseSolution x;
  x.ambient = A.cols();
  if (b.isZero(0.0)) {
    trace.stop_reason = StopReason::zero_rhs;
    return {x, trace};
  }

  const int atom_cap = cfg.resolved_max_atoms(A.rows());
  detail::OuterState state;
  Eigen::VectorXd a = b;  // residual; also the dual variable
  Eigen::VectorXd g = A.data().transpose() * a;
  const double zero_tol = 1e-12 * g.lpNorm<Eigen::Infinity>();
  double obj_prev = trace.theta0;
  double L_carry = 0.0;

  for (int t = 0; t < cfg.max_outer; ++t) {
    auto tic = std::chrono::steady_clock::now();

    std::vector<Index> J;
    if (subspace && cfg.omega > 1)
      J = detail::sgmp_select_impl(A, b, state, g, cfg, L_carry, zero_tol);
    else
      J = worst_case_select(g, state.active.all_indices, cfg.rho, cfg.lambda, zero_tol);

    if (J.empty()) {
      trace.stop_reason = StopReason::no_violators;
      break;
    }
    if (static_cast<int>(state.active.all_indices.size() + J.size()) > atom_cap)
      J.resize(static_cast<std::size_t>(atom_cap) - state.active.all_indices.size());
    if (J.empty()) {
      trace.stop_reason = StopReason::atom_cap;
      trace.capped = true;
      break;
    }

    double gain = 0.0;
    for (Index j : J) {
      double v = std::abs(g[j]) - cfg.lambda;
      gain += v * v;
    }

    state.active.add_round(J);
    Eigen::VectorXd warm =
        Eigen::VectorXd::Zero(static_cast<Index>(state.active.all_indices.size()));
    warm.head(state.u.size()) = state.u;

    InnerState inner =
        cfg.lambda > 0
            ? pg_solve(A, b, state.active.all_indices, warm, cfg, L_carry)
            : cgd_solve(A, b, state.active.all_indices, warm, cfg);
    state.u = inner.u;
    a = inner.residual;
    L_carry = inner.L;
    if (inner.degenerate) trace.degenerate_inner = true;

    double obj = cfg.lambda * state.u.lpNorm<1>() + 0.5 * a.squaredNorm();
    auto toc = std::chrono::steady_clock::now();

    trace.objective_per_outer.push_back(obj);
    trace.delta_per_outer.push_back(obj_prev - obj);
    trace.support_sizes.push_back(static_cast<Index>(state.active.all_indices.size()));
    trace.inner_iterations.push_back(inner.iterations);
    trace.wall_times_ms.push_back(
        std::chrono::duration<double, std::milli>(toc - tic).count());
    trace.rounds.push_back(J);
    trace.selection_gain.push_back(gain);
    trace.first_step_objective.push_back(inner.has_first_step ? inner.first_step_objective
                                                              : obj);
    trace.first_step_L.push_back(inner.has_first_step ? inner.first_step_L : inner.L);
    obj_prev = obj;

    g = A.data().transpose() * a;
    if (auto fired = check_stop(trace, Residual{a}, g, stops)) {
      switch (*fired) {
        case StopRule::Kind::relative_delta:
          trace.stop_reason = StopReason::relative_delta;
          break;
        case StopRule::Kind::grad_inf:
          trace.stop_reason = StopReason::grad_inf;
          break;
        case StopRule::Kind::residual_norm:
          trace.stop_reason = StopReason::residual_norm;
          break;
      }
      break;
    }
    if (static_cast<int>(state.active.all_indices.size()) >= atom_cap) {
      trace.stop_reason = StopReason::atom_cap;
      trace.capped = true;
      break;
    }
  }

  x = SparseSolution(state.active.all_indices, state.u, A.cols());
  x.finalize();
  return {x, trace};
}

inline std::pair<SparseSolution, SolveTrace> gmp_solve(
    const DesignMatrix& A, const Eigen::VectorXd& b, const GmpConfig& cfg,
    const std::vector<StopRule>& stops) {
  return gmp_solve_impl(A, b, cfg, stops, /*subspace=*/false);
}

inline std::pair<SparseSolution, SolveTrace> sgmp_solve(
    const DesignMatrix& A, const Eigen::VectorXd& b, const GmpConfig& cfg,
    const std::vector<StopRule>& stops) {
  return gmp_solve_impl(A, b, cfg, stops, /*subspace=*/true);
}

}  // namespace gmp
