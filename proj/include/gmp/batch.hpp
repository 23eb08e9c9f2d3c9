#pragma once

#include "gmp/gmp.hpp"

#include <Eigen/Cholesky>

namespace gmp {

/// Flop tally for the correlation updates; merged at aggregation by callers.
struct FlopCounter {
  std::uint64_t correlation_flops = 0;
};

/// Precomputed Q = A^T A for batch-mode decoding. O(m^2) storage, so
/// construction refuses m above the cap.
class GramCache {
 public:
  static constexpr Index kDefaultCap = 32768;

  GramCache(const DesignMatrix& A, Index cap = kDefaultCap) : n_(A.rows()), m_(A.cols()) {
    if (m_ > cap)
      throw std::invalid_argument(
          "GramCache: m = " + std::to_string(m_) + " exceeds cap " + std::to_string(cap) +
          "; Q = A^T A needs O(m^2) storage and would be too large");
    // Symmetric rank update does half the flops of a full GEMM; mirroring
    // the computed triangle makes Q exactly symmetric by construction.
    Q_ = Eigen::MatrixXd::Zero(m_, m_);
    Q_.selfadjointView<Eigen::Upper>().rankUpdate(A.data().transpose());
    Q_.triangularView<Eigen::StrictlyLower>() = Q_.transpose();
  }

  Index rows() const { return n_; }
  Index cols() const { return m_; }
  const Eigen::MatrixXd& Q() const { return Q_; }

  Eigen::VectorXd correlations(const DesignMatrix& A, const Eigen::VectorXd& b) const {
    if (A.cols() != m_ || b.size() != n_)
      throw std::invalid_argument("GramCache: inconsistent A or b");
    return A.data().transpose() * b;
  }

  /// Q restricted to rows I x cols I.
  Eigen::MatrixXd sub(const std::vector<Index>& I) const {
    const Index p = static_cast<Index>(I.size());
    Eigen::MatrixXd s(p, p);
    for (Index c = 0; c < p; ++c)
      for (Index r = 0; r < p; ++r)
        s(r, c) = Q_(I[static_cast<std::size_t>(r)], I[static_cast<std::size_t>(c)]);
    return s;
  }

 private:
  Eigen::MatrixXd Q_;
  Index n_, m_;
};

inline GramCache build_gram(const DesignMatrix& A, Index cap = GramCache::kDefaultCap) {
  return GramCache(A, cap);
}

namespace detail {

/// PG over the working set in Gram form; algebraically identical iterates
/// to pg_solve so the two routes select the same atoms.
inline InnerState pg_solve_gram(const Eigen::MatrixXd& Qii, const Eigen::VectorXd& Atb_i,
                                double b_sq, const Eigen::VectorXd& warm,
                                const GmpConfig& cfg, double L_init) {
  InnerState st;
  st.u = warm;
  const double lambda = cfg.lambda;
  double L = L_init;

  auto phi_of = [&](const Eigen::VectorXd& u) {
    return 0.5 * (b_sq - 2.0 * Atb_i.dot(u) + u.dot(Qii * u));
  };
  double phi = phi_of(st.u);

  for (int k = 0; k < cfg.max_inner; ++k) {
    Eigen::VectorXd g = Qii * st.u - Atb_i;
    Eigen::VectorXd G = generalized_gradient(st.u, g, lambda, L);
    if (G.lpNorm<Eigen::Infinity>() <= cfg.inner_tol) {
      st.converged = true;
      break;
    }
    Eigen::VectorXd u_next;
    double phi_next = 0;
    for (;;) {
      u_next = soft_threshold((st.u - g / L).eval(), lambda, L);
      phi_next = phi_of(u_next);
      Eigen::VectorXd d = u_next - st.u;
      double model = phi + g.dot(d) + 0.5 * L * d.squaredNorm();
      if (phi_next <= model + 1e-12 * std::abs(model)) break;
      L *= 2.0;
      if (L > 1e30) throw std::runtime_error("pg_solve_gram: line search diverged");
    }
    st.u = u_next;
    phi = phi_next;
    ++st.iterations;
    if (!st.has_first_step) {
      st.first_step_objective = lambda * st.u.lpNorm<1>() + phi;
      st.first_step_L = L;
      st.has_first_step = true;
    }
  }
  st.L = L;
  return st;
}

inline InnerState cgd_solve_gram(const Eigen::MatrixXd& Qii, const Eigen::VectorXd& Atb_i,
                                 const Eigen::VectorXd& warm, const GmpConfig& cfg) {
  InnerState st;
  st.u = warm;
  const Index p = st.u.size();
  Eigen::VectorXd grad = Atb_i - Qii * st.u;  // negative gradient
  if (grad.lpNorm<Eigen::Infinity>() <= cfg.inner_tol) {
    st.converged = true;
    return st;
  }
  Eigen::VectorXd dir = grad;
  int since_restart = 0;
  for (int k = 0; k < cfg.max_inner; ++k) {
    Eigen::VectorXd Qd = Qii * dir;
    double curv = dir.dot(Qd);
    if (curv <= 1e-14 * dir.squaredNorm()) {
      st.degenerate = true;
      break;
    }
    double alpha = grad.dot(dir) / curv;
    st.u += alpha * dir;
    ++st.iterations;
    Eigen::VectorXd grad_next = grad - alpha * Qd;
    if (grad_next.lpNorm<Eigen::Infinity>() <= cfg.inner_tol) {
      st.converged = true;
      grad = grad_next;
      break;
    }
    double beta = std::max(0.0, grad_next.dot(grad_next - grad) / grad.dot(grad));
    ++since_restart;
    dir = grad_next + beta * dir;
    if (since_restart >= p || dir.dot(grad_next) <= 0) {
      dir = grad_next;
      since_restart = 0;
    }
    grad = grad_next;
  }
  return st;
}

}  // namespace detail

/// GMP decoded entirely from the Gram cache: A^T a = [A^T b] - Q_I x_I.
/// `b_sq` is ||b||^2, needed for the objective and the relative_delta stop.
inline std::pair<SparseSolution, SolveTrace> bgmp_solve(
    const GramCache& cache, const Eigen::VectorXd& Atb, double b_sq,
    const GmpConfig& cfg, const std::vector<StopRule>& stops,
    FlopCounter* flops = nullptr) {
  cfg.validate();
  if (Atb.size() != cache.cols())
    throw std::invalid_argument("bgmp_solve: Atb length mismatch");
  if (b_sq < 0) throw std::invalid_argument("bgmp_solve: negative ||b||^2");

  SolveTrace trace;
  trace.theta0 = 0.5 * b_sq;

  SparseSolution x;
  x.ambient = cache.cols();
  if (b_sq == 0.0) {
    trace.stop_reason = StopReason::zero_rhs;
    return {x, trace};
  }

  const int atom_cap = cfg.resolved_max_atoms(cache.rows());
  std::vector<Index> I;
  std::vector<std::vector<Index>> rounds;
  Eigen::VectorXd u;
  Eigen::VectorXd g = Atb;
  const double zero_tol = 1e-12 * Atb.lpNorm<Eigen::Infinity>();
  double obj_prev = trace.theta0;
  double L_carry = 0.0;

  auto correlations = [&]() {
    // g = Atb - Q(:, I) u, O(m |I|)
    Eigen::VectorXd out = Atb;
    for (std::size_t i = 0; i < I.size(); ++i)
      out.noalias() -= u[static_cast<Index>(i)] * cache.Q().col(I[i]);
    if (flops) flops->correlation_flops += 2ull * cache.cols() * I.size();
    return out;
  };

  for (int t = 0; t < cfg.max_outer; ++t) {
    auto tic = std::chrono::steady_clock::now();
    std::vector<Index> J = worst_case_select(g, I, cfg.rho, cfg.lambda, zero_tol);
    if (J.empty()) {
      trace.stop_reason = StopReason::no_violators;
      break;
    }
    if (static_cast<int>(I.size() + J.size()) > atom_cap)
      J.resize(static_cast<std::size_t>(atom_cap) - I.size());
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

    I.insert(I.end(), J.begin(), J.end());
    rounds.push_back(J);
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Index>(I.size()));
    warm.head(u.size()) = u;

    Eigen::MatrixXd Qii = cache.sub(I);
    Eigen::VectorXd Atb_i(static_cast<Index>(I.size()));
    for (std::size_t i = 0; i < I.size(); ++i)
      Atb_i[static_cast<Index>(i)] = Atb[I[i]];

    InnerState inner;
    if (cfg.lambda > 0) {
      double L0 = L_carry > 0 ? std::max(L_carry / 2.0, 1e-12)
                              : std::max(Qii.diagonal().maxCoeff(), 1e-12);
      inner = detail::pg_solve_gram(Qii, Atb_i, b_sq, warm, cfg, L0);
      L_carry = inner.L;
    } else {
      inner = detail::cgd_solve_gram(Qii, Atb_i, warm, cfg);
    }
    u = inner.u;
    if (inner.degenerate) trace.degenerate_inner = true;

    double resid_sq = std::max(0.0, b_sq - 2.0 * Atb_i.dot(u) + u.dot(Qii * u));
    double obj = cfg.lambda * u.lpNorm<1>() + 0.5 * resid_sq;
    auto toc = std::chrono::steady_clock::now();

    trace.objective_per_outer.push_back(obj);
    trace.delta_per_outer.push_back(obj_prev - obj);
    trace.support_sizes.push_back(static_cast<Index>(I.size()));
    trace.inner_iterations.push_back(inner.iterations);
    trace.wall_times_ms.push_back(
        std::chrono::duration<double, std::milli>(toc - tic).count());
    trace.rounds.push_back(J);
    trace.selection_gain.push_back(gain);
    trace.first_step_objective.push_back(inner.has_first_step ? inner.first_step_objective
                                                              : obj);
    trace.first_step_L.push_back(inner.has_first_step ? inner.first_step_L : inner.L);
    obj_prev = obj;

    g = correlations();
    Residual pseudo{Eigen::VectorXd::Constant(1, std::sqrt(resid_sq))};
    if (auto fired = check_stop(trace, pseudo, g, stops)) {
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
    if (static_cast<int>(I.size()) >= atom_cap) {
      trace.stop_reason = StopReason::atom_cap;
      trace.capped = true;
      break;
    }
  }

  x = SparseSolution(I, u, cache.cols());
  x.finalize();
  return {x, trace};
}

/// Batch OMP: selection and refits computed entirely from the cache.
inline SparseSolution bomp_solve(const GramCache& cache, const Eigen::VectorXd& Atb,
                                 int k, FlopCounter* flops = nullptr,
                                 bool* degenerate = nullptr) {
  if (k < 1 || k > cache.cols())
    throw std::invalid_argument("bomp_solve: k must be in [1, m]");
  if (Atb.size() != cache.cols())
    throw std::invalid_argument("bomp_solve: Atb length mismatch");
  if (degenerate) *degenerate = false;

  std::vector<Index> I;
  Eigen::VectorXd u;
  Eigen::VectorXd corr = Atb;
  std::vector<char> selected(static_cast<std::size_t>(cache.cols()), 0);

  for (int step = 0; step < k; ++step) {
    Index best = -1;
    double best_mag = 0.0;
    for (Index j = 0; j < corr.size(); ++j) {
      if (selected[static_cast<std::size_t>(j)]) continue;
      double mag = std::abs(corr[j]);
      if (mag > best_mag) {
        best_mag = mag;
        best = j;
      }
    }
    if (best < 0 || best_mag <= 1e-12) break;  // zero correlation
    I.push_back(best);
    selected[static_cast<std::size_t>(best)] = 1;

    Eigen::MatrixXd Qii = cache.sub(I);
    Eigen::VectorXd Atb_i(static_cast<Index>(I.size()));
    for (std::size_t i = 0; i < I.size(); ++i)
      Atb_i[static_cast<Index>(i)] = Atb[I[i]];

    Eigen::LLT<Eigen::MatrixXd> llt(Qii);
    if (llt.info() == Eigen::Success) {
      u = llt.solve(Atb_i);
    } else {
      if (degenerate) *degenerate = true;
      GmpConfig cfg;
      cfg.max_inner = static_cast<int>(4 * I.size() + 16);
      cfg.inner_tol = 1e-10;
      Eigen::VectorXd warm = Eigen::VectorXd::Zero(static_cast<Index>(I.size()));
      warm.head(u.size()) = u;
      u = detail::cgd_solve_gram(Qii, Atb_i, warm, cfg).u;
    }

    corr = Atb;
    for (std::size_t i = 0; i < I.size(); ++i)
      corr.noalias() -= u[static_cast<Index>(i)] * cache.Q().col(I[i]);
    if (flops) flops->correlation_flops += 2ull * cache.cols() * I.size();
  }

  SparseSolution x(I, u, cache.cols());
  x.finalize();
  return x;
}

}  // namespace gmp
