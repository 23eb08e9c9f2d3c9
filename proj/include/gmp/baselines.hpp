#pragma once

#include "gmp/gmp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace gmp {

/// Knobs shared by the comparison solvers.
struct BaselineConfig {
  int k_hat = 0;             // sparsity estimate, typically 1.2 * k
  double eta = 0.7;          // OMPR learning rate
  bool adaptive_eta = false; // OMPRA: exact line search along the gradient
  double ridge_lambda = 0.0;
  int max_iter = 200;
  double tol = 1e-10;
};

struct BaselineResult {
  SparseSolution x;
  std::vector<Index> selection_order;  // OMP only
  int iterations = 0;
  bool degenerate = false;
  bool converged = true;
};

namespace detail {

/// Least-squares coefficients on I via column-pivoted QR; flags rank loss.
inline Eigen::VectorXd ls_refit(const DesignMatrix& A, const Eigen::VectorXd& b,
                                const std::vector<Index>& I, bool* degenerate) {
  Eigen::MatrixXd Ai = A.restricted(I);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Ai);
  if (degenerate && qr.rank() < static_cast<Index>(I.size())) *degenerate = true;
  return qr.solve(b);
}

inline std::vector<Index> top_k_by_magnitude(const Eigen::VectorXd& v, int k) {
  std::vector<Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Index(0));
  auto cmp = [&](Index a, Index b) {
    double ma = std::abs(v[a]), mb = std::abs(v[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  int kk = std::min<int>(k, static_cast<int>(v.size()));
  std::partial_sort(idx.begin(), idx.begin() + kk, idx.end(), cmp);
  idx.resize(static_cast<std::size_t>(kk));
  return idx;
}

}  // namespace detail

/// Textbook OMP: one atom per iteration, exact LS refit, never reselects.
inline BaselineResult omp_solve(const DesignMatrix& A, const Eigen::VectorXd& b,
                                int max_atoms, double residual_tol = 1e-12) {
  if (b.size() != A.rows()) throw std::invalid_argument("omp_solve: rhs length mismatch");
  BaselineResult out;
  out.x.ambient = A.cols();
  if (b.isZero(0.0)) return out;

  std::vector<Index> I;
  std::vector<char> used(static_cast<std::size_t>(A.cols()), 0);
  Eigen::VectorXd r = b;
  Eigen::VectorXd u;
  max_atoms = std::min<int>(max_atoms, static_cast<int>(std::min(A.rows(), A.cols())));

  for (int step = 0; step < max_atoms; ++step) {
    Eigen::VectorXd g = A.data().transpose() * r;
    Index best = -1;
    double best_mag = 0.0;
    for (Index j = 0; j < g.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      double mag = std::abs(g[j]);
      if (mag > best_mag) {
        best_mag = mag;
        best = j;
      }
    }
    if (best < 0 || best_mag <= residual_tol) break;
    I.push_back(best);
    used[static_cast<std::size_t>(best)] = 1;
    out.selection_order.push_back(best);
    u = detail::ls_refit(A, b, I, &out.degenerate);
    r = b - A.restricted(I) * u;
    ++out.iterations;
    if (r.norm() <= residual_tol) break;
  }
  out.x = SparseSolution(I, u, A.cols());
  out.x.finalize();
  return out;
}

/// Classic subspace pursuit; keeps the best-residual iterate since the
/// residual is not monotone off-RIP.
inline BaselineResult sp_solve(const DesignMatrix& A, const Eigen::VectorXd& b,
                               int k_hat, const BaselineConfig& cfg = {}) {
  if (k_hat < 1 || k_hat > A.rows())
    throw std::invalid_argument("sp_solve: k_hat must be in [1, n]");
  BaselineResult out;
  out.x.ambient = A.cols();
  if (b.isZero(0.0)) return out;

  Eigen::VectorXd g0 = A.data().transpose() * b;
  std::vector<Index> I = detail::top_k_by_magnitude(g0, k_hat);
  std::sort(I.begin(), I.end());
  Eigen::VectorXd u = detail::ls_refit(A, b, I, &out.degenerate);
  Eigen::VectorXd r = b - A.restricted(I) * u;

  std::vector<Index> best_I = I;
  Eigen::VectorXd best_u = u;
  double best_res = r.norm();

  for (int it = 0; it < cfg.max_iter; ++it) {
    Eigen::VectorXd g = A.data().transpose() * r;
    std::vector<Index> top = detail::top_k_by_magnitude(g, k_hat);
    std::vector<Index> merged = I;
    merged.insert(merged.end(), top.begin(), top.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

    Eigen::VectorXd um = detail::ls_refit(A, b, merged, &out.degenerate);
    std::vector<Index> keep = detail::top_k_by_magnitude(um, k_hat);
    std::vector<Index> I_next;
    for (Index pos : keep) I_next.push_back(merged[static_cast<std::size_t>(pos)]);
    std::sort(I_next.begin(), I_next.end());

    u = detail::ls_refit(A, b, I_next, &out.degenerate);
    r = b - A.restricted(I_next) * u;
    ++out.iterations;

    double res = r.norm();
    bool same = (I_next == I);
    I = I_next;
    if (res < best_res - 1e-15) {
      best_res = res;
      best_I = I;
      best_u = u;
    } else if (same || res >= best_res) {
      break;  // residual stopped decreasing
    }
    if (res <= cfg.tol) break;
  }
  out.x = SparseSolution(best_I, best_u, A.cols());
  out.x.finalize();
  return out;
}

/// OMPR: z = x + eta A^T (b - A x), hard-threshold to k_hat, LS refit.
/// With adaptive_eta the step is the exact minimizer of the quadratic
/// along the gradient restricted to the merged support (OMPRA).
inline BaselineResult ompr_solve(const DesignMatrix& A, const Eigen::VectorXd& b,
                                 int k_hat, const BaselineConfig& cfg = {}) {
  if (k_hat < 1) throw std::invalid_argument("ompr_solve: k_hat must be >= 1");
  k_hat = std::min<int>(k_hat, static_cast<int>(A.cols()));
  BaselineResult out;
  out.x.ambient = A.cols();
  if (b.isZero(0.0)) return out;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  std::vector<Index> I;

  // The fixed learning rate is calibrated for unit-norm columns; rescale by
  // the largest squared column norm so eta keeps that meaning on raw data.
  double col_scale = 0.0;
  for (Index j = 0; j < A.cols(); ++j)
    col_scale = std::max(col_scale, A.col_norms()[j] * A.col_norms()[j]);
  if (col_scale <= 0) col_scale = 1.0;

  for (int it = 0; it < cfg.max_iter; ++it) {
    Eigen::VectorXd r = b - A.data() * x;
    Eigen::VectorXd g = A.data().transpose() * r;

    double eta = cfg.eta / col_scale;
    if (cfg.adaptive_eta) {
      // Merged support: current atoms plus the strongest k_hat candidates.
      std::vector<Index> merged = I;
      for (Index j : detail::top_k_by_magnitude(g, k_hat)) merged.push_back(j);
      std::sort(merged.begin(), merged.end());
      merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
      Eigen::VectorXd d = Eigen::VectorXd::Zero(A.cols());
      for (Index j : merged) d[j] = g[j];
      Eigen::VectorXd Ad = A.data() * d;
      double curv = Ad.squaredNorm();
      eta = curv > 1e-14 * d.squaredNorm() ? d.squaredNorm() / curv : 0.0;
      if (eta == 0.0) break;
    }

    Eigen::VectorXd z = x + eta * g;
    std::vector<Index> I_next = detail::top_k_by_magnitude(z, k_hat);
    std::sort(I_next.begin(), I_next.end());
    Eigen::VectorXd u = detail::ls_refit(A, b, I_next, &out.degenerate);

    x.setZero();
    for (std::size_t i = 0; i < I_next.size(); ++i)
      x[I_next[i]] = u[static_cast<Index>(i)];
    ++out.iterations;
    bool same = (I_next == I);
    I = I_next;
    if (same) break;
  }
  out.x = SparseSolution::from_dense(x);
  return out;
}

/// Normalized IHT with a step-halving safeguard: x+ = H_k(x + mu A^T r).
/// Stands in for accelerated IHT as a monotone hard-thresholding baseline.
inline BaselineResult niht_solve(const DesignMatrix& A, const Eigen::VectorXd& b,
                                 int k_hat, const BaselineConfig& cfg = {}) {
  if (k_hat < 1) throw std::invalid_argument("niht_solve: k_hat must be >= 1");
  k_hat = std::min<int>(k_hat, static_cast<int>(A.cols()));
  BaselineResult out;
  out.x.ambient = A.cols();
  if (b.isZero(0.0)) return out;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  std::vector<Index> I;
  double f = 0.5 * b.squaredNorm();

  for (int it = 0; it < cfg.max_iter; ++it) {
    Eigen::VectorXd r = b - A.data() * x;
    Eigen::VectorXd g = A.data().transpose() * r;

    // Normalized step from the gradient restricted to the active support
    // (or to the strongest k_hat entries when starting from zero).
    std::vector<Index> S = I.empty() ? detail::top_k_by_magnitude(g, k_hat) : I;
    Eigen::VectorXd gs = Eigen::VectorXd::Zero(A.cols());
    for (Index j : S) gs[j] = g[j];
    double denom = (A.data() * gs).squaredNorm();
    if (denom <= 1e-14 * gs.squaredNorm()) break;
    double mu = gs.squaredNorm() / denom;

    Eigen::VectorXd x_next;
    double f_next = 0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      Eigen::VectorXd z = x + mu * g;
      std::vector<Index> keep = detail::top_k_by_magnitude(z, k_hat);
      x_next = Eigen::VectorXd::Zero(A.cols());
      for (Index j : keep) x_next[j] = z[j];
      f_next = 0.5 * (b - A.data() * x_next).squaredNorm();
      if (f_next <= f + 1e-15 * std::abs(f)) {
        accepted = true;
        break;
      }
      mu /= 2.0;
    }
    if (!accepted) break;

    std::vector<Index> I_next;
    for (Index j = 0; j < x_next.size(); ++j)
      if (x_next[j] != 0.0) I_next.push_back(j);
    bool same = (I_next == I);
    double drop = f - f_next;
    x = x_next;
    f = f_next;
    I = I_next;
    ++out.iterations;
    if (same && drop <= 1e-14 * std::max(1.0, f)) break;  // stalled on a fixed support
    if (f <= cfg.tol) break;
  }
  // Debias on the final support: gradient steps converge only linearly there.
  if (!I.empty()) {
    Eigen::VectorXd u = detail::ls_refit(A, b, I, &out.degenerate);
    Eigen::VectorXd x_refit = Eigen::VectorXd::Zero(A.cols());
    for (std::size_t i = 0; i < I.size(); ++i) x_refit[I[i]] = u[static_cast<Index>(i)];
    if (0.5 * (b - A.data() * x_refit).squaredNorm() <= f) x = x_refit;
  }
  out.x = SparseSolution::from_dense(x);
  return out;
}

/// Full-problem proximal gradient for the LASSO, the in-repo l1 baseline.
inline BaselineResult pg_lasso_full(const DesignMatrix& A, const Eigen::VectorXd& b,
                                    double lambda, double tol = 1e-6,
                                    int max_iter = 10000) {
  if (lambda <= 0) throw std::invalid_argument("pg_lasso_full: lambda must be > 0");
  BaselineResult out;
  out.x.ambient = A.cols();

  Eigen::VectorXd x = Eigen::VectorXd::Zero(A.cols());
  Eigen::VectorXd r = b;
  double phi = 0.5 * r.squaredNorm();
  double L = std::max(A.col_norms().maxCoeff(), 1e-12);
  L = L * L;
  out.converged = false;

  for (int k = 0; k < max_iter; ++k) {
    Eigen::VectorXd g = -(A.data().transpose() * r);
    Eigen::VectorXd G = generalized_gradient(x, g, lambda, L);
    if (G.lpNorm<Eigen::Infinity>() <= tol) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd x_next;
    Eigen::VectorXd r_next;
    double phi_next = 0;
    for (;;) {
      x_next = soft_threshold((x - g / L).eval(), lambda, L);
      r_next = b - A.data() * x_next;
      phi_next = 0.5 * r_next.squaredNorm();
      Eigen::VectorXd d = x_next - x;
      double model = phi + g.dot(d) + 0.5 * L * d.squaredNorm();
      if (phi_next <= model + 1e-12 * std::abs(model)) break;
      L *= 2.0;
      if (L > 1e30) throw std::runtime_error("pg_lasso_full: line search diverged");
    }
    x = x_next;
    r = r_next;
    phi = phi_next;
    ++out.iterations;
    L = std::max(L / 2.0, 1e-12);  // allow recovery between steps
  }
  out.x = SparseSolution::from_dense(x);
  return out;
}

/// Minimum-norm least squares via rank-revealing factorization, with a
/// precomputed-operator mode for many right-hand sides.
class L2Operator {
 public:
  explicit L2Operator(const DesignMatrix& A) {
    // Pseudo-inverse cutoff: singular values below max(n,m)*eps*sigma_max
    // are treated as zero.
    cod_.setThreshold(static_cast<double>(std::max(A.rows(), A.cols())) *
                      std::numeric_limits<double>::epsilon());
    cod_.compute(A.data());
    ill_conditioned_ = cod_.rank() < std::min(A.rows(), A.cols());
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& b) const { return cod_.solve(b); }
  bool ill_conditioned() const { return ill_conditioned_; }
  Index rank() const { return cod_.rank(); }

 private:
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
  bool ill_conditioned_ = false;
};

/// Ridge solve (A^T A + lambda I)^-1 A^T b; factor once, apply to many b.
class RidgeOperator {
 public:
  RidgeOperator(const DesignMatrix& A, double ridge_lambda) : A_(&A) {
    if (ridge_lambda < 0)
      throw std::invalid_argument("RidgeOperator: ridge_lambda must be >= 0");
    Eigen::MatrixXd gram = A.data().transpose() * A.data();
    gram.diagonal().array() += ridge_lambda;
    ldlt_.compute(gram);
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& b) const {
    return ldlt_.solve(A_->data().transpose() * b);
  }

 private:
  const DesignMatrix* A_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

inline Eigen::VectorXd l2_fit(const DesignMatrix& A, const Eigen::VectorXd& b,
                              bool* conditioning_warning = nullptr) {
  L2Operator op(A);
  if (conditioning_warning) *conditioning_warning = op.ill_conditioned();
  return op.apply(b);
}

inline Eigen::VectorXd l2l2_fit(const DesignMatrix& A, const Eigen::VectorXd& b,
                                double ridge_lambda) {
  return RidgeOperator(A, ridge_lambda).apply(b);
}

}  // namespace gmp
