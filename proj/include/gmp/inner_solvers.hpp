#pragma once

#include "gmp/core.hpp"

namespace gmp {

/// Componentwise shrinkage: sign(o_i) * max(|o_i| - lambda/L, 0).
template <typename Derived>
VectorT<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& o,
                                                 typename Derived::Scalar lambda,
                                                 typename Derived::Scalar L) {
  using Scalar = typename Derived::Scalar;
  if (L <= Scalar(0)) throw std::invalid_argument("soft_threshold: L must be > 0");
  if (lambda < Scalar(0)) throw std::invalid_argument("soft_threshold: lambda must be >= 0");
  const Scalar shift = lambda / L;
  return o.unaryExpr([shift](Scalar v) {
    Scalar mag = std::abs(v) - shift;
    return mag > Scalar(0) ? (v > Scalar(0) ? mag : -mag) : Scalar(0);
  });
}

/// G(u) = L (u - S_{L,lambda}(u - g/L)); reduces to g when lambda = 0.
template <typename DerivedU, typename DerivedG>
VectorT<typename DerivedU::Scalar> generalized_gradient(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedG>& g,
    typename DerivedU::Scalar lambda, typename DerivedU::Scalar L) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != g.size())
    throw std::invalid_argument("generalized_gradient: size mismatch");
  if (L <= Scalar(0)) throw std::invalid_argument("generalized_gradient: L must be > 0");
  if (lambda == Scalar(0)) return g.derived();
  VectorT<Scalar> step = u - g / L;
  return L * (u - soft_threshold(step, lambda, L));
}

/// Result of a restricted master-problem solve.
struct InnerState {
  Eigen::VectorXd u;          // coefficients over the working index set
  Eigen::VectorXd residual;   // b - A_I u
  double L = 0.0;             // final PG step constant (PG only)
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;    // vanishing curvature hit in CGD

  // First accepted PG step, for the selection lower-bound check.
  double first_step_objective = 0.0;
  double first_step_L = 0.0;
  bool has_first_step = false;
};

namespace detail {

inline Eigen::VectorXd check_warm(const std::vector<Index>& I,
                                  const Eigen::VectorXd& warm) {
  if (I.empty())
    throw std::invalid_argument("inner solve: empty working set");
  if (warm.size() != static_cast<Index>(I.size()))
    throw std::invalid_argument("inner solve: warm start size mismatch");
  return warm;
}

}  // namespace detail

/// Proximal gradient on min lambda||u||_1 + 0.5||b - A_I u||^2.
/// Line search doubles L on insufficient decrease; L is halved once on
/// entry so a carried-over estimate can recover.
inline InnerState pg_solve(const DesignMatrix& A, const Eigen::VectorXd& b,
                           const std::vector<Index>& I, const Eigen::VectorXd& warm,
                           const GmpConfig& cfg, double L_carry = 0.0) {
  if (cfg.lambda < 0)
    throw std::invalid_argument("pg_solve: requires lambda >= 0");
  InnerState st;
  st.u = detail::check_warm(I, warm);
  const Eigen::MatrixXd Ai = A.restricted(I);
  const double lambda = cfg.lambda;

  double L;
  if (L_carry > 0) {
    L = std::max(L_carry / 2.0, 1e-12);
  } else {
    L = 1e-12;
    for (Index j : I) L = std::max(L, A.col_norms()[j] * A.col_norms()[j]);
  }

  st.residual = b - Ai * st.u;
  double phi = 0.5 * st.residual.squaredNorm();
  double f = lambda * st.u.lpNorm<1>() + phi;

  for (int k = 0; k < cfg.max_inner; ++k) {
    Eigen::VectorXd g = Ai.transpose() * (Ai * st.u - b);
    Eigen::VectorXd G = generalized_gradient(st.u, g, lambda, L);
    if (G.lpNorm<Eigen::Infinity>() <= cfg.inner_tol) {
      st.converged = true;
      break;
    }
    // Backtracking: accept when the quadratic model majorizes f at u+.
    Eigen::VectorXd u_next;
    double f_next = 0, phi_next = 0;
    Eigen::VectorXd r_next;
    for (;;) {
      u_next = soft_threshold((st.u - g / L).eval(), lambda, L);
      r_next = b - Ai * u_next;
      phi_next = 0.5 * r_next.squaredNorm();
      Eigen::VectorXd d = u_next - st.u;
      double model = phi + g.dot(d) + 0.5 * L * d.squaredNorm();
      f_next = lambda * u_next.lpNorm<1>() + phi_next;
      if (phi_next <= model + 1e-12 * std::abs(model)) break;
      L *= 2.0;
      if (L > 1e30)
        throw std::runtime_error("pg_solve: line search diverged");
    }
    if (!std::isfinite(f_next))
      throw std::runtime_error("pg_solve: non-finite objective");
    st.u = u_next;
    st.residual = r_next;
    phi = phi_next;
    f = f_next;
    ++st.iterations;
    if (!st.has_first_step) {
      st.first_step_objective = f;
      st.first_step_L = L;
      st.has_first_step = true;
    }
  }
  st.L = L;
  return st;
}

/// Conjugate gradient descent on min 0.5||b - A_I u||^2 with exact line
/// search. Polak-Ribiere updates, restart to steepest descent every |I|
/// iterations and on non-descent directions.
inline InnerState cgd_solve(const DesignMatrix& A, const Eigen::VectorXd& b,
                            const std::vector<Index>& I, const Eigen::VectorXd& warm,
                            const GmpConfig& cfg) {
  InnerState st;
  st.u = detail::check_warm(I, warm);
  const Eigen::MatrixXd Ai = A.restricted(I);
  const Index p = static_cast<Index>(I.size());

  st.residual = b - Ai * st.u;
  Eigen::VectorXd grad = Ai.transpose() * st.residual;  // negative gradient of phi
  if (grad.lpNorm<Eigen::Infinity>() <= cfg.inner_tol) {
    st.converged = true;
    return st;
  }

  Eigen::VectorXd dir = grad;
  int since_restart = 0;
  for (int k = 0; k < cfg.max_inner; ++k) {
    Eigen::VectorXd Ad = Ai * dir;
    double curv = Ad.squaredNorm();
    if (curv <= 1e-14 * dir.squaredNorm()) {
      st.degenerate = true;  // rank-deficient A_I; keep the current iterate
      break;
    }
    double alpha = grad.dot(dir) / curv;
    st.u += alpha * dir;
    st.residual -= alpha * Ad;
    ++st.iterations;
    Eigen::VectorXd grad_next = Ai.transpose() * st.residual;
    if (grad_next.lpNorm<Eigen::Infinity>() <= cfg.inner_tol) {
      st.converged = true;
      break;
    }
    double beta = grad_next.dot(grad_next - grad) / grad.dot(grad);
    beta = std::max(beta, 0.0);
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

/// Least-squares refit on the support of x (lambda = 0 CGD).
inline SparseSolution debias(const DesignMatrix& A, const Eigen::VectorXd& b,
                             const SparseSolution& x, bool* degenerate = nullptr) {
  if (x.support.empty())
    throw std::invalid_argument("debias: empty support");
  GmpConfig cfg;
  cfg.lambda = 0.0;
  cfg.max_inner = static_cast<int>(4 * x.support.size() + 16);
  cfg.inner_tol = 1e-10 * std::max(1.0, b.lpNorm<Eigen::Infinity>());
  InnerState st = cgd_solve(A, b, x.support, x.values, cfg);
  if (degenerate) *degenerate = st.degenerate;
  SparseSolution out(x.support, st.u, x.ambient);
  out.finalize();
  return out;
}

}  // namespace gmp
