#pragma once

#include "gmp/baselines.hpp"
#include "gmp/batch.hpp"
#include "gmp/harness.hpp"

#include <memory>

namespace gmp {

/// Training columns with class labels. Columns are l2-normalized at
/// ingestion so residual comparisons across classes are on equal footing.
class LabeledDictionary {
 public:
  LabeledDictionary(Eigen::MatrixXd samples, std::vector<int> labels)
      : labels_(std::move(labels)) {
    if (static_cast<Index>(labels_.size()) != samples.cols())
      throw std::invalid_argument("LabeledDictionary: one label per column required");
    for (Index j = 0; j < samples.cols(); ++j) {
      double norm = samples.col(j).norm();
      if (norm > 0) samples.col(j) /= norm;
    }
    A_ = std::make_unique<DesignMatrix>(std::move(samples));
    for (Index j = 0; j < A_->cols(); ++j)
      class_index_[labels_[static_cast<std::size_t>(j)]].push_back(j);
    if (class_index_.size() < 2)
      throw std::invalid_argument("LabeledDictionary: need at least 2 classes");
  }

  const DesignMatrix& A() const { return *A_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::map<int, std::vector<Index>>& class_index() const { return class_index_; }

  const GramCache& gram() const {
    if (!gram_) gram_ = std::make_unique<GramCache>(*A_);
    return *gram_;
  }

 private:
  std::unique_ptr<DesignMatrix> A_;
  std::vector<int> labels_;
  std::map<int, std::vector<Index>> class_index_;
  mutable std::unique_ptr<GramCache> gram_;
};

struct ClassifyReport {
  double accuracy = 0.0;
  double mean_sparsity = 0.0;
  std::map<int, double> per_class_accuracy;
  double total_wall_ms = 0.0;
  std::string solver;
};

/// Strided decimation of vectorized h x w grids: keep every ceil(1/rate)-th
/// row and column, re-vectorize.
inline Eigen::MatrixXd downsample(const Eigen::MatrixXd& X, Index h, Index w,
                                  double rate) {
  if (rate <= 0 || rate > 1) throw std::invalid_argument("downsample: rate in (0, 1]");
  if (h * w != X.rows())
    throw std::invalid_argument("downsample: rows must equal h*w");
  if (rate == 1.0) return X;
  Index stride = static_cast<Index>(std::ceil(1.0 / rate));
  Index h2 = (h + stride - 1) / stride;
  Index w2 = (w + stride - 1) / stride;
  if (h2 < 1 || w2 < 1) throw std::invalid_argument("downsample: empty grid");
  Eigen::MatrixXd out(h2 * w2, X.cols());
  for (Index c = 0; c < X.cols(); ++c) {
    Index idx = 0;
    for (Index col = 0; col < w; col += stride)
      for (Index row = 0; row < h; row += stride)
        out(idx++, c) = X(col * h + row, c);
  }
  return out;
}

namespace detail {

/// Class-restricted residual ||y - A delta_c(x)||, computed sparsely.
inline double class_residual(const LabeledDictionary& dict, const Eigen::VectorXd& y,
                             const SparseSolution& code, int cls) {
  Eigen::VectorXd fit = Eigen::VectorXd::Zero(y.size());
  for (std::size_t i = 0; i < code.support.size(); ++i) {
    Index j = code.support[i];
    if (dict.labels()[static_cast<std::size_t>(j)] == cls)
      fit.noalias() += code.values[static_cast<Index>(i)] * dict.A().col(j);
  }
  return (y - fit).norm();
}

}  // namespace detail

struct ClassifyOutcome {
  int predicted = 0;
  SparseSolution code;  // for dense solvers, support is the full column set
};

/// Sparse-code (or regress) y over the training columns, then assign the
/// class whose restricted reconstruction residual is smallest.
inline ClassifyOutcome classify(const LabeledDictionary& dict, const Eigen::VectorXd& y,
                                const std::string& solver, const SolverParams& params) {
  if (y.size() != dict.A().rows())
    throw std::invalid_argument("classify: sample dimension mismatch");

  SparseSolution code;
  if (solver == "bgmp") {
    GmpConfig cfg = params.gmp;
    std::vector<StopRule> stops = default_stops(cfg.epsilon);
    double b_sq = y.squaredNorm();
    // The face-recognition stop: ||b - Ax||^2 / ||b||^2 <= 1e-6 maps to a
    // residual-norm rule; the atom cap wins if both are in play.
    if (b_sq > 0) stops.push_back(StopRule::residual_norm(std::sqrt(1e-6 * b_sq)));
    code = bgmp_solve(dict.gram(), dict.gram().correlations(dict.A(), y), b_sq, cfg,
                      stops)
               .first;
  } else if (solver == "bomp") {
    int k = params.baseline.k_hat > 0 ? params.baseline.k_hat : 200;
    k = std::min<int>(k, static_cast<int>(dict.A().cols()));
    code = bomp_solve(dict.gram(), dict.gram().correlations(dict.A(), y), k);
  } else if (solver == "pg-lasso") {
    double lambda = params.gmp.lambda > 0 ? params.gmp.lambda
                                          : default_lambda(dict.A(), y);
    code = pg_lasso_full(dict.A(), y, lambda).x;
  } else if (solver == "l2") {
    code = SparseSolution::from_dense(l2_fit(dict.A(), y));
  } else if (solver == "l2l2") {
    double rl = params.baseline.ridge_lambda > 0 ? params.baseline.ridge_lambda : 1e-3;
    code = SparseSolution::from_dense(l2l2_fit(dict.A(), y, rl));
  } else {
    throw std::invalid_argument("classify: unsupported solver " + solver);
  }

  ClassifyOutcome out;
  out.code = code;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [cls, cols] : dict.class_index()) {
    double res = detail::class_residual(dict, y, code, cls);
    if (res < best) {
      best = res;
      out.predicted = cls;
    }
  }
  return out;
}

struct TestSample {
  Eigen::VectorXd y;
  int label;
};

inline ClassifyReport evaluate(const LabeledDictionary& dict,
                               const std::vector<TestSample>& test,
                               const std::string& solver, const SolverParams& params,
                               std::vector<int>* predictions = nullptr) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  ClassifyReport report;
  report.solver = solver;

  std::map<int, std::pair<int, int>> per_class;  // class -> (correct, total)
  double total_sparsity = 0;
  int correct = 0;

  auto tic = std::chrono::steady_clock::now();
  for (const TestSample& sample : test) {
    int predicted;
    Index nnz;
    try {
      ClassifyOutcome out = classify(dict, sample.y, solver, params);
      predicted = out.predicted;
      nnz = (solver == "l2" || solver == "l2l2") ? dict.A().cols() : out.code.nnz();
    } catch (const std::exception&) {
      predicted = std::numeric_limits<int>::min();  // counted as a miss
      nnz = 0;
    }
    if (predictions) predictions->push_back(predicted);
    bool ok = predicted == sample.label;
    correct += ok ? 1 : 0;
    auto& cell = per_class[sample.label];
    cell.first += ok ? 1 : 0;
    cell.second += 1;
    total_sparsity += static_cast<double>(nnz);
  }
  auto toc = std::chrono::steady_clock::now();

  report.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  report.mean_sparsity = total_sparsity / static_cast<double>(test.size());
  for (const auto& [cls, cell] : per_class)
    report.per_class_accuracy[cls] =
        static_cast<double>(cell.first) / static_cast<double>(cell.second);
  report.total_wall_ms = std::chrono::duration<double, std::milli>(toc - tic).count();
  return report;
}

}  // namespace gmp
