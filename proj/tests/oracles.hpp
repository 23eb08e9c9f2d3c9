// Independent reference implementations used to derive expected values.
// Everything here is deliberately naive: straightforward loops and direct
// factorizations, no shared code paths with the library under test.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

/// Dense product by explicit double loop.
inline Eigen::VectorXd naive_matvec(const Eigen::MatrixXd& A, const Eigen::VectorXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) out[i] += A(i, j) * x[j];
  return out;
}

/// A^T r by explicit double loop.
inline Eigen::VectorXd naive_correlate(const Eigen::MatrixXd& A, const Eigen::VectorXd& r) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) out[j] += A(i, j) * r[i];
  return out;
}

/// Q = A^T A by explicit triple loop.
inline Eigen::MatrixXd naive_gram(const Eigen::MatrixXd& A) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(A.cols(), A.cols());
  for (Eigen::Index a = 0; a < A.cols(); ++a)
    for (Eigen::Index c = 0; c < A.cols(); ++c)
      for (Eigen::Index i = 0; i < A.rows(); ++i) Q(a, c) += A(i, a) * A(i, c);
  return Q;
}

/// Least squares by the normal equations, solved with a dense direct solver.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& M, const Eigen::VectorXd& b) {
  return (M.transpose() * M).fullPivLu().solve(M.transpose() * b);
}

inline double lasso_objective(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                              const Eigen::VectorXd& u, double lambda) {
  return lambda * u.lpNorm<1>() + 0.5 * (b - M * u).squaredNorm();
}

/// Exhaustive sign-pattern LASSO solve over p <= ~10 variables:
/// min lambda ||u||_1 + 0.5 ||b - M u||^2.
/// For every s in {-1, 0, +1}^p, the stationary point with that pattern
/// solves M_S^T M_S u_S = M_S^T b - lambda s_S; each candidate is a feasible
/// point so the minimum objective over all candidates is the global optimum
/// (the true optimum's own pattern is among them).
struct LassoOracle {
  Eigen::VectorXd u;
  double objective = std::numeric_limits<double>::infinity();
};

inline LassoOracle lasso_exhaustive(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                                    double lambda) {
  const Eigen::Index p = M.cols();
  LassoOracle best;
  best.u = Eigen::VectorXd::Zero(p);
  best.objective = lasso_objective(M, b, best.u, lambda);

  std::vector<int> s(static_cast<std::size_t>(p), -1);
  long total = 1;
  for (Eigen::Index i = 0; i < p; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (Eigen::Index i = 0; i < p; ++i) {
      s[static_cast<std::size_t>(i)] = static_cast<int>(c % 3) - 1;
      c /= 3;
    }
    std::vector<Eigen::Index> S;
    for (Eigen::Index i = 0; i < p; ++i)
      if (s[static_cast<std::size_t>(i)] != 0) S.push_back(i);
    if (S.empty()) continue;

    Eigen::MatrixXd Ms(M.rows(), static_cast<Eigen::Index>(S.size()));
    Eigen::VectorXd sign(static_cast<Eigen::Index>(S.size()));
    for (std::size_t i = 0; i < S.size(); ++i) {
      Ms.col(static_cast<Eigen::Index>(i)) = M.col(S[i]);
      sign[static_cast<Eigen::Index>(i)] = s[static_cast<std::size_t>(S[i])];
    }
    Eigen::VectorXd rhs = Ms.transpose() * b - lambda * sign;
    Eigen::VectorXd us = (Ms.transpose() * Ms).fullPivLu().solve(rhs);

    // Only sign-consistent stationary points are KKT candidates; skipping
    // the inconsistent ones keeps candidates at true stationary points.
    bool consistent = true;
    for (Eigen::Index i = 0; i < us.size(); ++i)
      if (us[i] * sign[i] < 0) consistent = false;
    if (!consistent) continue;

    Eigen::VectorXd full = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < S.size(); ++i) full[S[i]] = us[static_cast<Eigen::Index>(i)];
    double f = lasso_objective(M, b, full, lambda);
    if (f < best.objective) {
      best.objective = f;
      best.u = full;
    }
  }
  return best;
}

/// Best k-sparse support by brute force over all C(m, k) supports, using a
/// precomputed Gram matrix; returns the support with the smallest residual.
inline std::vector<Eigen::Index> best_support_exhaustive(const Eigen::MatrixXd& A,
                                                         const Eigen::VectorXd& b,
                                                         Eigen::Index k) {
  const Eigen::Index m = A.cols();
  Eigen::MatrixXd Q = A.transpose() * A;
  Eigen::VectorXd Atb = A.transpose() * b;
  const double b_sq = b.squaredNorm();

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::vector<Eigen::Index> best = idx;
  double best_res = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd Qs(k, k);
  Eigen::VectorXd cs(k);
  for (;;) {
    for (Eigen::Index r = 0; r < k; ++r) {
      cs[r] = Atb[idx[static_cast<std::size_t>(r)]];
      for (Eigen::Index c = 0; c < k; ++c)
        Qs(r, c) = Q(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
    }
    Eigen::VectorXd u = Qs.ldlt().solve(cs);
    double res = b_sq - 2.0 * cs.dot(u) + u.dot(Qs * u);
    if (res < best_res) {
      best_res = res;
      best = idx;
    }
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

}  // namespace oracle
