#pragma once

#include "gmp/baselines.hpp"
#include "gmp/batch.hpp"
#include "gmp/gmp.hpp"
#include "gmp/io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <atomic>
#include <functional>
#include <map>
#include <random>
#include <thread>
#include <tuple>

namespace gmp {

// ---------------------------------------------------------------------------
// Problem generators. All randomness flows through std::mt19937_64 so a
// (n, m, seed) triple always reproduces the same instance.

inline DesignMatrix gen_matrix(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("gen_matrix: n, m must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  return DesignMatrix(std::move(a));
}

enum class SignalKind { zero_one, uniform, gaussian };

inline SignalKind signal_kind_from_string(const std::string& s) {
  if (s == "zero_one") return SignalKind::zero_one;
  if (s == "uniform") return SignalKind::uniform;
  if (s == "gaussian") return SignalKind::gaussian;
  throw std::invalid_argument("unknown signal kind: " + s);
}

struct SignalSpec {
  SignalKind kind = SignalKind::gaussian;
  Index k = 1;
  Index m = 1;
  std::uint64_t seed = 0;
};

inline SparseSolution gen_signal(const SignalSpec& spec) {
  if (spec.k < 1 || spec.k > spec.m)
    throw std::invalid_argument("gen_signal: need 1 <= k <= m");
  std::mt19937_64 rng(spec.seed);

  // k distinct positions by partial Fisher-Yates.
  std::vector<Index> pool(static_cast<std::size_t>(spec.m));
  std::iota(pool.begin(), pool.end(), Index(0));
  std::vector<Index> support;
  for (Index i = 0; i < spec.k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                    pool.size() - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[pick(rng)]);
    support.push_back(pool[static_cast<std::size_t>(i)]);
  }
  std::sort(support.begin(), support.end());

  Eigen::VectorXd values(spec.k);
  switch (spec.kind) {
    case SignalKind::zero_one: {
      std::bernoulli_distribution sign(0.5);
      for (Index i = 0; i < spec.k; ++i) values[i] = sign(rng) ? 1.0 : -1.0;
      break;
    }
    case SignalKind::uniform: {
      std::uniform_real_distribution<double> uni(-1.0, 1.0);
      for (Index i = 0; i < spec.k; ++i) {
        double v = 0.0;
        while (v == 0.0) v = uni(rng);
        values[i] = v;
      }
      break;
    }
    case SignalKind::gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index i = 0; i < spec.k; ++i) {
        double v = 0.0;
        while (v == 0.0) v = normal(rng);
        values[i] = v;
      }
      break;
    }
  }
  return SparseSolution(std::move(support), std::move(values), spec.m);
}

struct NoiseSpec {
  enum class Kind { none, uniform, gaussian };
  Kind kind = Kind::none;
  double amount = 0.0;  // half-width for uniform, sigma for gaussian

  static NoiseSpec none() { return {}; }
  static NoiseSpec uniform(double a) { return {Kind::uniform, a}; }
  static NoiseSpec gaussian(double sigma) { return {Kind::gaussian, sigma}; }
};

inline Eigen::VectorXd gen_noise(const NoiseSpec& spec, Index n, std::uint64_t seed) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  if (spec.kind == NoiseSpec::Kind::none) return e;
  std::mt19937_64 rng(seed);
  if (spec.kind == NoiseSpec::Kind::uniform) {
    std::uniform_real_distribution<double> uni(-spec.amount, spec.amount);
    for (Index i = 0; i < n; ++i) e[i] = uni(rng);
  } else {
    std::normal_distribution<double> normal(0.0, spec.amount);
    for (Index i = 0; i < n; ++i) e[i] = normal(rng);
  }
  return e;
}

/// Duplicated-column stress instance: columns dup..2*dup-1 copy columns
/// 0..dup-1, ground truth is all-ones on the first block, b = A x exactly.
/// The global solution is non-unique; only the residual is certifiable.
inline std::tuple<DesignMatrix, SparseSolution, Eigen::VectorXd> gen_nonrip(
    Index n, Index m, Index dup, std::uint64_t seed) {
  if (dup < 1 || 2 * dup > m)
    throw std::invalid_argument("gen_nonrip: need 1 <= dup and 2*dup <= m");
  DesignMatrix base = gen_matrix(n, m, seed);
  Eigen::MatrixXd a = base.data();
  a.middleCols(dup, dup) = a.leftCols(dup);
  std::vector<Index> support(static_cast<std::size_t>(dup));
  std::iota(support.begin(), support.end(), Index(0));
  SparseSolution x_true(support, Eigen::VectorXd::Ones(dup), m);
  DesignMatrix A(std::move(a));
  Eigen::VectorXd b = matvec(A, x_true);
  return {std::move(A), std::move(x_true), std::move(b)};
}

// ---------------------------------------------------------------------------
// Metrics and parameter defaults

struct TrialRecord {
  std::string solver;
  Index k = 0, n = 0, m = 0;
  bool success = false;
  double mse = 0.0;
  double residual = 0.0;
  Index sparsity_out = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  int trial = 0;
  bool failed = false;  // solver threw; counted as unsuccessful
};

/// Relative recovery error after de-biasing; the uniform success rule.
inline constexpr double kSuccessThreshold = 1e-3;

inline double epsr(const std::vector<TrialRecord>& records) {
  if (records.empty()) throw std::invalid_argument("epsr: empty cell");
  for (const TrialRecord& r : records)
    if (r.solver != records.front().solver || r.k != records.front().k)
      throw std::invalid_argument("epsr: mixed (solver, k) cell");
  std::size_t ok = 0;
  for (const TrialRecord& r : records) ok += r.success ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

/// rho = n / (r ln m), ceiling by default (round-to-nearest also exposed;
/// the two differ at some (n, m) and neither convention is canonical).
inline int default_rho(Index n, Index m, double r, bool round_nearest = false) {
  if (r < 3.0) throw std::invalid_argument("default_rho: r must be >= 3");
  double raw = static_cast<double>(n) / (r * std::log(static_cast<double>(m)));
  double v = round_nearest ? std::round(raw) : std::ceil(raw);
  return std::max(1, static_cast<int>(v));
}

inline double default_lambda(const DesignMatrix& A, const Eigen::VectorXd& b) {
  return 0.005 * (A.data().transpose() * b).lpNorm<Eigen::Infinity>();
}

// ---------------------------------------------------------------------------
// RIP diagnostic oracle (brute force, small m only)

struct RipEstimate {
  double delta_k = 0.0;
  double gamma_minus = 0.0;
  double gamma_plus = 0.0;
  double kappa = 0.0;
};

namespace detail {

inline double binomial(Index m, Index k) {
  double v = 1.0;
  for (Index i = 0; i < k; ++i) v *= static_cast<double>(m - i) / static_cast<double>(i + 1);
  return v;
}

template <typename Fn>
void for_each_support(Index m, Index k, Fn&& fn) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), Index(0));
  for (;;) {
    fn(idx);
    Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace detail

/// Exact restricted eigenvalues over every size-k support of the
/// column-normalized dictionary. Refuses combinatorially infeasible inputs.
inline RipEstimate estimate_rip(const DesignMatrix& A, Index k,
                                double support_cap = 1e5) {
  if (k < 1 || k > std::min(A.rows(), A.cols()))
    throw std::invalid_argument("estimate_rip: k out of range");
  double count = detail::binomial(A.cols(), k);
  if (count > support_cap)
    throw std::invalid_argument(
        "estimate_rip: C(m,k) = " + std::to_string(count) +
        " supports exceed the cap; the enumeration cost is combinatorial");

  // Normalize columns first; delta_k is defined for unit-norm atoms.
  Eigen::MatrixXd U = A.data();
  for (Index j = 0; j < U.cols(); ++j) {
    double norm = U.col(j).norm();
    if (norm > 0) U.col(j) /= norm;
  }

  double gmin = std::numeric_limits<double>::infinity();
  double gmax = 0.0;
  detail::for_each_support(A.cols(), k, [&](const std::vector<Index>& I) {
    Eigen::MatrixXd sub(U.rows(), k);
    for (Index i = 0; i < k; ++i) sub.col(i) = U.col(I[static_cast<std::size_t>(i)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub.transpose() * sub);
    gmin = std::min(gmin, eig.eigenvalues().minCoeff());
    gmax = std::max(gmax, eig.eigenvalues().maxCoeff());
  });
  gmin = std::max(gmin, 0.0);

  RipEstimate est;
  est.gamma_minus = gmin;
  est.gamma_plus = gmax;
  est.delta_k = std::max(1.0 - gmin, gmax - 1.0);
  est.kappa = gmin > 0 ? gmax / gmin : std::numeric_limits<double>::infinity();
  return est;
}

// ---------------------------------------------------------------------------
// Solver registry and experiment plans

struct SolverParams {
  GmpConfig gmp;
  BaselineConfig baseline;
  Index k_true = 0;  // ground-truth sparsity, for k_hat = 1.2 k solvers
  bool use_default_lambda = false;
};

using SolverFn = std::function<SparseSolution(const DesignMatrix&, const Eigen::VectorXd&,
                                              const SolverParams&)>;

inline int khat_for(const SolverParams& p) {
  if (p.baseline.k_hat > 0) return p.baseline.k_hat;
  if (p.k_true > 0) return std::max(1, static_cast<int>(std::ceil(1.2 * p.k_true)));
  throw std::invalid_argument("solver needs k_hat or k_true");
}

/// Every solver the CLI and the sweep engine can address by name.
inline const std::map<std::string, SolverFn>& solver_registry() {
  static const std::map<std::string, SolverFn> registry = [] {
    std::map<std::string, SolverFn> r;
    r["gmp"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      GmpConfig cfg = p.gmp;
      cfg.omega = 1;
      if (p.use_default_lambda) cfg.lambda = default_lambda(A, b);
      return gmp_solve(A, b, cfg, default_stops(cfg.epsilon)).first;
    };
    r["sgmp"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      GmpConfig cfg = p.gmp;
      if (cfg.omega < 2) cfg.omega = 4;
      if (p.use_default_lambda) cfg.lambda = default_lambda(A, b);
      return sgmp_solve(A, b, cfg, default_stops(cfg.epsilon)).first;
    };
    r["bgmp"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      GmpConfig cfg = p.gmp;
      if (p.use_default_lambda) cfg.lambda = default_lambda(A, b);
      GramCache cache(A);
      Eigen::VectorXd Atb = cache.correlations(A, b);
      return bgmp_solve(cache, Atb, b.squaredNorm(), cfg, default_stops(cfg.epsilon)).first;
    };
    r["omp"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      int cap = p.baseline.k_hat > 0 || p.k_true > 0
                    ? khat_for(p)
                    : static_cast<int>(std::min(A.rows(), A.cols()));
      return omp_solve(A, b, cap).x;
    };
    r["bomp"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      int k = p.baseline.k_hat > 0 ? p.baseline.k_hat : 200;
      GramCache cache(A);
      return bomp_solve(cache, cache.correlations(A, b), k);
    };
    r["sp"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      return sp_solve(A, b, khat_for(p), p.baseline).x;
    };
    r["ompr"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      BaselineConfig cfg = p.baseline;
      cfg.adaptive_eta = false;
      return ompr_solve(A, b, khat_for(p), cfg).x;
    };
    r["ompra"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      BaselineConfig cfg = p.baseline;
      cfg.adaptive_eta = true;
      return ompr_solve(A, b, khat_for(p), cfg).x;
    };
    r["niht"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      BaselineConfig cfg = p.baseline;
      if (cfg.max_iter < 500) cfg.max_iter = 500;
      return niht_solve(A, b, khat_for(p), cfg).x;
    };
    r["pg-lasso"] = [](const DesignMatrix& A, const Eigen::VectorXd& b,
                       const SolverParams& p) {
      double lambda = p.use_default_lambda || p.gmp.lambda <= 0 ? default_lambda(A, b)
                                                                : p.gmp.lambda;
      // Gradient tolerance on the scale of ||A^T b||_inf, matching lambda's.
      double scale = std::max(1.0, (A.data().transpose() * b).lpNorm<Eigen::Infinity>());
      return pg_lasso_full(A, b, lambda, p.gmp.inner_tol * scale, 10000).x;
    };
    r["l2"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams&) {
      return SparseSolution::from_dense(l2_fit(A, b));
    };
    r["l2l2"] = [](const DesignMatrix& A, const Eigen::VectorXd& b, const SolverParams& p) {
      double rl = p.baseline.ridge_lambda > 0 ? p.baseline.ridge_lambda : 1e-3;
      return SparseSolution::from_dense(l2l2_fit(A, b, rl));
    };
    return r;
  }();
  return registry;
}

struct ExperimentPlan {
  Index n = 0, m = 0;
  std::string ensemble = "gaussian";  // or "file"
  std::string matrix_file;
  SignalKind signal = SignalKind::zero_one;
  NoiseSpec noise;
  std::vector<std::string> solvers;
  std::map<std::string, SolverParams> params;  // per-solver overrides
  std::vector<Index> k_sweep;
  int trials = 1;
  std::uint64_t base_seed = 0;
  int threads = 0;  // 0: hardware concurrency
  std::string out_prefix = "sweep";

  void validate() const {
    if (trials < 1) throw std::invalid_argument("ExperimentPlan: trials must be >= 1");
    if (k_sweep.empty()) throw std::invalid_argument("ExperimentPlan: empty k sweep");
    if (solvers.empty()) throw std::invalid_argument("ExperimentPlan: no solvers");
    for (const std::string& s : solvers)
      if (!solver_registry().count(s))
        throw std::invalid_argument("ExperimentPlan: unknown solver " + s);
  }
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over the cell coordinates; scheduling-independent.
  std::uint64_t z = base ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xBF58476D1CE4E5B9ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Run one (solver, instance) trial; solver failures are recorded, not thrown.
inline TrialRecord run_trial(const std::string& solver_name, const DesignMatrix& A,
                             const Eigen::VectorXd& b, const SparseSolution& x_true,
                             SolverParams params, std::uint64_t seed, int trial) {
  TrialRecord rec;
  rec.solver = solver_name;
  rec.k = x_true.nnz();
  rec.n = A.rows();
  rec.m = A.cols();
  rec.seed = seed;
  rec.trial = trial;
  params.k_true = x_true.nnz();

  auto tic = std::chrono::steady_clock::now();
  try {
    SparseSolution x = solver_registry().at(solver_name)(A, b, params);
    if (!x.empty()) x = debias(A, b, x);
    Eigen::VectorXd diff = x.dense() - x_true.dense();
    double rel = x_true.values.norm() > 0 ? diff.norm() / x_true.values.norm()
                                          : diff.norm();
    rec.success = rel <= kSuccessThreshold;
    rec.mse = diff.squaredNorm() / static_cast<double>(A.cols());
    rec.residual = (b - matvec(A, x)).norm();
    rec.sparsity_out = x.nnz();
  } catch (const std::exception&) {
    rec.failed = true;
    rec.success = false;
  }
  auto toc = std::chrono::steady_clock::now();
  rec.wall_ms = std::chrono::duration<double, std::milli>(toc - tic).count();
  return rec;
}

struct SweepResult {
  std::vector<TrialRecord> records;
  // (solver, k) -> (EPSR, mean wall ms)
  std::map<std::pair<std::string, Index>, std::pair<double, double>> cells;
};

/// Execute the full (solver, k, trial) grid. Instances are seeded per
/// (k, trial) so every solver sees the same data; records come back in a
/// fixed order regardless of scheduling.
inline SweepResult run_plan(const ExperimentPlan& plan) {
  plan.validate();

  struct Task {
    Index k;
    int trial;
  };
  std::vector<Task> tasks;
  for (Index k : plan.k_sweep)
    for (int t = 0; t < plan.trials; ++t) tasks.push_back({k, t});

  std::vector<std::vector<TrialRecord>> slots(tasks.size());

  auto run_task = [&](std::size_t ti) {
    const Task& task = tasks[ti];
    std::uint64_t inst_seed =
        detail::mix_seed(plan.base_seed, static_cast<std::uint64_t>(task.k),
                         static_cast<std::uint64_t>(task.trial));
    DesignMatrix A = plan.ensemble == "file"
                         ? DesignMatrix(io::read_spmx(plan.matrix_file))
                         : gen_matrix(plan.n, plan.m, inst_seed);
    SparseSolution x_true =
        gen_signal({plan.signal, task.k, A.cols(), inst_seed ^ 0x5151u});
    Eigen::VectorXd b =
        matvec(A, x_true) + gen_noise(plan.noise, A.rows(), inst_seed ^ 0xA0A0u);

    for (const std::string& solver : plan.solvers) {
      SolverParams params;
      if (auto it = plan.params.find(solver); it != plan.params.end())
        params = it->second;
      slots[ti].push_back(run_trial(solver, A, b, x_true, params, inst_seed, task.trial));
    }
  };

  unsigned n_threads = plan.threads > 0 ? static_cast<unsigned>(plan.threads)
                                        : std::max(1u, std::thread::hardware_concurrency());
  if (n_threads <= 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= tasks.size()) return;
          run_task(i);
        }
      });
    for (std::thread& th : pool) th.join();
  }

  SweepResult result;
  for (const auto& slot : slots)
    result.records.insert(result.records.end(), slot.begin(), slot.end());

  std::map<std::pair<std::string, Index>, std::vector<TrialRecord>> cells;
  for (const TrialRecord& r : result.records) cells[{r.solver, r.k}].push_back(r);
  for (const auto& [key, recs] : cells) {
    double mean_ms = 0;
    for (const TrialRecord& r : recs) mean_ms += r.wall_ms;
    mean_ms /= static_cast<double>(recs.size());
    result.cells[key] = {epsr(recs), mean_ms};
  }
  return result;
}

/// Per-trial CSV. Timing is off by default so the output is byte-identical
/// across reruns with the same seeds.
inline void write_records_csv(std::ostream& os, const std::vector<TrialRecord>& records,
                              bool include_timing = false) {
  os.precision(17);
  os << "solver,k,n,m,trial,seed,success,failed,mse,residual,sparsity_out";
  if (include_timing) os << ",wall_ms";
  os << '\n';
  for (const TrialRecord& r : records) {
    os << r.solver << ',' << r.k << ',' << r.n << ',' << r.m << ',' << r.trial << ','
       << r.seed << ',' << (r.success ? 1 : 0) << ',' << (r.failed ? 1 : 0) << ','
       << r.mse << ',' << r.residual << ',' << r.sparsity_out;
    if (include_timing) os << ',' << r.wall_ms;
    os << '\n';
  }
}

inline void write_cells_csv(std::ostream& os, const SweepResult& result) {
  os.precision(17);
  os << "solver,k,epsr,mean_wall_ms\n";
  for (const auto& [key, val] : result.cells)
    os << key.first << ',' << key.second << ',' << val.first << ',' << val.second << '\n';
}

}  // namespace gmp
