#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gmp {

using Index = Eigen::Index;

// Coefficients below this magnitude are dropped when a solution is finalized.
inline constexpr double kCoefficientPrune = 1e-12;

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Dense n x m dictionary with cached column norms. Column-major so that
/// atom selection and restricted least squares touch contiguous memory.
template <typename Scalar>
class DesignMatrixT {
 public:
  using Matrix = MatrixT<Scalar>;
  using Vector = VectorT<Scalar>;

  explicit DesignMatrixT(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw std::invalid_argument("DesignMatrix: need at least 1 row and 1 column");
    if (!data_.allFinite())
      throw std::invalid_argument("DesignMatrix: non-finite entry");
    col_norms_ = data_.colwise().norm();
  }

  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  const Matrix& data() const { return data_; }
  const Vector& col_norms() const { return col_norms_; }
  auto col(Index j) const { return data_.col(j); }

  /// Contiguous copy of the columns indexed by I.
  Matrix restricted(const std::vector<Index>& I) const {
    Matrix sub(data_.rows(), static_cast<Index>(I.size()));
    for (std::size_t i = 0; i < I.size(); ++i) {
      if (I[i] < 0 || I[i] >= data_.cols())
        throw std::out_of_range("DesignMatrix: atom index out of range");
      sub.col(static_cast<Index>(i)) = data_.col(I[i]);
    }
    return sub;
  }

 private:
  Matrix data_;
  Vector col_norms_;
};

using DesignMatrix = DesignMatrixT<double>;

/// Support/value pair representation of a sparse vector.
template <typename Scalar>
struct SparseSolutionT {
  using Vector = VectorT<Scalar>;

  std::vector<Index> support;
  Vector values;  // aligned with support
  Index ambient = 0;

  SparseSolutionT() = default;
  SparseSolutionT(std::vector<Index> idx, Vector vals, Index m)
      : support(std::move(idx)), values(std::move(vals)), ambient(m) {
    if (static_cast<Index>(support.size()) != values.size())
      throw std::invalid_argument("SparseSolution: support/value size mismatch");
  }

  Index nnz() const { return static_cast<Index>(support.size()); }
  bool empty() const { return support.empty(); }

  Vector dense() const {
    Vector x = Vector::Zero(ambient);
    for (std::size_t i = 0; i < support.size(); ++i)
      x[support[i]] = values[static_cast<Index>(i)];
    return x;
  }

  static SparseSolutionT from_dense(const Vector& x, Scalar prune = Scalar(kCoefficientPrune)) {
    SparseSolutionT s;
    s.ambient = x.size();
    for (Index j = 0; j < x.size(); ++j) {
      if (std::abs(x[j]) >= prune && x[j] != Scalar(0)) s.support.push_back(j);
    }
    s.values.resize(static_cast<Index>(s.support.size()));
    for (std::size_t i = 0; i < s.support.size(); ++i)
      s.values[static_cast<Index>(i)] = x[s.support[i]];
    return s;
  }

  /// Sort the support ascending and drop near-zero coefficients.
  void finalize(Scalar prune = Scalar(kCoefficientPrune)) {
    std::vector<std::size_t> order(support.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    std::vector<Index> idx;
    std::vector<Scalar> vals;
    idx.reserve(order.size());
    vals.reserve(order.size());
    for (std::size_t i : order) {
      Scalar v = values[static_cast<Index>(i)];
      if (std::abs(v) >= prune && v != Scalar(0)) {
        idx.push_back(support[i]);
        vals.push_back(v);
      }
    }
    support = std::move(idx);
    values = Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
  }
};

using SparseSolution = SparseSolutionT<double>;

/// The residual b - Ax; also the dual variable at optimality.
template <typename Scalar>
struct ResidualT {
  VectorT<Scalar> vec;
};

using Residual = ResidualT<double>;

/// All knobs for the GMP family of solvers.
struct GmpConfig {
  int rho = 1;             // atoms added per outer iteration
  int omega = 1;           // subspace factor; 1 means plain GMP
  double lambda = 0.0;     // l1 weight
  double epsilon = 1e-5;   // relative-improvement tolerance
  int max_outer = 1000;
  int max_inner = 50;      // inner PG/CGD iteration cap per outer step
  int max_atoms = 0;       // 0: resolved to min(n, 600) at solve time
  double inner_tol = 1e-6; // inf-norm tolerance on the (generalized) gradient

  void validate() const {
    if (rho < 1) throw std::invalid_argument("GmpConfig: rho must be >= 1");
    if (omega < 1) throw std::invalid_argument("GmpConfig: omega must be >= 1");
    if (lambda < 0) throw std::invalid_argument("GmpConfig: lambda must be >= 0");
    if (epsilon <= 0) throw std::invalid_argument("GmpConfig: epsilon must be > 0");
    if (max_outer < 1 || max_inner < 1 || max_atoms < 0)
      throw std::invalid_argument("GmpConfig: iteration caps must be positive");
    if (inner_tol <= 0) throw std::invalid_argument("GmpConfig: inner_tol must be > 0");
  }

  int resolved_max_atoms(Index n) const {
    if (max_atoms > 0) return max_atoms;
    return static_cast<int>(std::min<Index>(n, 600));
  }
};

/// Why a solve returned.
enum class StopReason {
  relative_delta,   // 2*delta/||b||^2 <= epsilon
  grad_inf,         // ||A^T xi||_inf <= r_inf
  residual_norm,    // ||xi|| <= r_2
  no_violators,     // selection returned empty: optimality certificate
  atom_cap,         // max_atoms reached
  outer_cap,        // max_outer reached
  zero_rhs,         // b = 0, x = 0 is optimal
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::relative_delta: return "relative_delta";
    case StopReason::grad_inf: return "grad_inf";
    case StopReason::residual_norm: return "residual_norm";
    case StopReason::no_violators: return "no_violators";
    case StopReason::atom_cap: return "atom_cap";
    case StopReason::outer_cap: return "outer_cap";
    case StopReason::zero_rhs: return "zero_rhs";
  }
  return "unknown";
}

/// Per-outer-iteration record of a GMP/SGMP/BGMP run.
struct SolveTrace {
  double theta0 = 0.0;  // f(0) = ||b||^2 / 2
  std::vector<double> objective_per_outer;
  std::vector<double> delta_per_outer;
  std::vector<Index> support_sizes;
  std::vector<int> inner_iterations;
  std::vector<double> wall_times_ms;
  std::vector<std::vector<Index>> rounds;  // J_1, ..., J_t in selection order

  // Instrumentation for the first accepted inner step of each outer round
  // (used to check the selection lower bound sum (|g_i|-lambda)^2 / 2L).
  std::vector<double> selection_gain;
  std::vector<double> first_step_objective;
  std::vector<double> first_step_L;

  StopReason stop_reason = StopReason::outer_cap;
  bool capped = false;
  bool degenerate_inner = false;

  Index outer_iterations() const {
    return static_cast<Index>(objective_per_outer.size());
  }
};

// ---------------------------------------------------------------------------
// Kernels

/// A x restricted to the support, O(n * |support|).
template <typename Scalar>
VectorT<Scalar> matvec(const DesignMatrixT<Scalar>& A, const SparseSolutionT<Scalar>& x) {
  VectorT<Scalar> out = VectorT<Scalar>::Zero(A.rows());
  for (std::size_t i = 0; i < x.support.size(); ++i) {
    Index j = x.support[i];
    if (j < 0 || j >= A.cols())
      throw std::out_of_range("matvec: atom index out of range");
    out.noalias() += x.values[static_cast<Index>(i)] * A.col(j);
  }
  return out;
}

/// g = A^T r.
template <typename Scalar>
VectorT<Scalar> correlate(const DesignMatrixT<Scalar>& A, const ResidualT<Scalar>& r) {
  if (r.vec.size() != A.rows())
    throw std::invalid_argument("correlate: residual length mismatch");
  return A.data().transpose() * r.vec;
}

/// f(x) = lambda ||x||_1 + 0.5 ||b - Ax||^2.
template <typename Scalar>
Scalar objective(const DesignMatrixT<Scalar>& A, const VectorT<Scalar>& b,
                 const SparseSolutionT<Scalar>& x, Scalar lambda) {
  if (b.size() != A.rows())
    throw std::invalid_argument("objective: rhs length mismatch");
  if (lambda < Scalar(0))
    throw std::invalid_argument("objective: lambda must be >= 0");
  VectorT<Scalar> r = b - matvec(A, x);
  return lambda * x.values.template lpNorm<1>() + Scalar(0.5) * r.squaredNorm();
}

}  // namespace gmp
