#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gmp/classifier.hpp"

using gmp::Index;
using gmp::LabeledDictionary;

namespace {

/// Synthetic subspace data: each class spans a random dim-subspace of R^n;
/// samples are random combinations of the basis plus optional noise.
struct SubspaceData {
  Eigen::MatrixXd train;
  std::vector<int> labels;
  std::vector<gmp::TestSample> test;
};

SubspaceData make_subspace_data(Index n, int classes, Index dim, int n_train,
                                int n_test, double noise, std::uint64_t seed,
                                double near_dup_frac = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SubspaceData out;
  out.train.resize(n, classes * n_train);
  Index col = 0;
  for (int c = 0; c < classes; ++c) {
    Eigen::MatrixXd basis(n, dim);
    for (Index j = 0; j < dim; ++j)
      for (Index i = 0; i < n; ++i) basis(i, j) = normal(rng);
    auto sample = [&]() {
      Eigen::VectorXd w(dim);
      for (Index j = 0; j < dim; ++j) w[j] = normal(rng);
      return (basis * w).eval();
    };
    for (int t = 0; t < n_train; ++t) {
      out.train.col(col++) = sample();
      out.labels.push_back(c);
    }
    for (int t = 0; t < n_test; ++t) {
      Eigen::VectorXd y = sample();
      if (noise > 0) {
        Eigen::VectorXd e(n);
        for (Index i = 0; i < n; ++i) e[i] = normal(rng);
        y += noise * y.norm() / std::sqrt(static_cast<double>(n)) * e;
      }
      out.test.push_back({y, c});
    }
  }
  if (near_dup_frac > 0) {
    // Replace a fraction of each class's columns with near-copies of the
    // class's first column, making A^T A ill-conditioned.
    for (int c = 0; c < classes; ++c) {
      Index base = static_cast<Index>(c) * n_train;
      int dups = static_cast<int>(near_dup_frac * n_train);
      for (int d = 1; d <= dups; ++d) {
        Eigen::VectorXd eps(n);
        for (Index i = 0; i < n; ++i) eps[i] = normal(rng);
        out.train.col(base + d) = out.train.col(base) + 1e-8 * eps;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("LabeledDictionary validates and normalizes") {
  Eigen::MatrixXd a(3, 4);
  a << 2, 0, 0, 1, 0, 3, 0, 1, 0, 0, 4, 1;
  LabeledDictionary dict(a, {0, 0, 1, 1});
  for (Index j = 0; j < 4; ++j)
    CHECK(dict.A().col(j).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dict.class_index().at(0) == std::vector<Index>{0, 1});
  CHECK(dict.class_index().at(1) == std::vector<Index>{2, 3});

  CHECK_THROWS_AS(LabeledDictionary(a, {0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(LabeledDictionary(a, {2, 2, 2, 2}), std::invalid_argument);
}

TEST_CASE("downsample: identity, 4x4 stride-2 grid, dimension ratio") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(16, 3);
  CHECK(gmp::downsample(X, 4, 4, 1.0) == X);

  Eigen::MatrixXd grid(16, 1);
  for (Index i = 0; i < 16; ++i) grid(i, 0) = static_cast<double>(i);
  Eigen::MatrixXd half = gmp::downsample(grid, 4, 4, 0.5);
  REQUIRE(half.rows() == 4);
  // Column-major 4x4: keeps (row, col) in {0, 2} x {0, 2} -> entries 0, 2, 8, 10.
  CHECK(half(0, 0) == 0.0);
  CHECK(half(1, 0) == 2.0);
  CHECK(half(2, 0) == 8.0);
  CHECK(half(3, 0) == 10.0);

  Eigen::MatrixXd img = Eigen::MatrixXd::Zero(192 * 168, 1);
  Eigen::MatrixXd ds = gmp::downsample(img, 192, 168, 0.25);
  double ratio = static_cast<double>(ds.rows()) / static_cast<double>(img.rows());
  CHECK(std::abs(ratio - 0.0625) <= 0.1 * 0.0625);  // within 10% of rate^2

  CHECK_THROWS_AS(gmp::downsample(X, 4, 3, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(gmp::downsample(X, 4, 4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gmp::downsample(X, 4, 4, 1.5), std::invalid_argument);
}

TEST_CASE("classify: training column maps to its own class") {
  SubspaceData data = make_subspace_data(40, 3, 3, 8, 0, 0.0, 5);
  LabeledDictionary dict(data.train, data.labels);
  gmp::SolverParams params;
  params.gmp.rho = 2;
  for (Index j : {0, 9, 17}) {
    Eigen::VectorXd y = dict.A().col(j);
    auto out = gmp::classify(dict, y, "bgmp", params);
    CHECK(out.predicted == dict.labels()[static_cast<std::size_t>(j)]);
  }
  CHECK_THROWS_AS(gmp::classify(dict, Eigen::VectorXd::Zero(39), "bgmp", params),
                  std::invalid_argument);
  CHECK_THROWS_AS(gmp::classify(dict, Eigen::VectorXd::Zero(40), "mystery", params),
                  std::invalid_argument);
}

TEST_CASE("classify: orthogonal single-column classes separate cleanly") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 2);
  a(0, 0) = 1.0;
  a(2, 1) = 1.0;
  LabeledDictionary dict(a, {0, 1});
  Eigen::VectorXd y(4);
  y << 1.0, 1e-3, 0.0, 1e-3;
  gmp::SolverParams params;
  for (const char* solver : {"bgmp", "bomp", "l2", "l2l2"}) {
    auto out = gmp::classify(dict, y, solver, params);
    CHECK(out.predicted == 0);
  }
}

TEST_CASE("evaluate: self-test accuracy is 1.0 with bgmp; empty test rejected") {
  SubspaceData data = make_subspace_data(30, 3, 2, 6, 0, 0.0, 8);
  LabeledDictionary dict(data.train, data.labels);
  std::vector<gmp::TestSample> self;
  for (Index j = 0; j < dict.A().cols(); ++j)
    self.push_back({dict.A().col(j), dict.labels()[static_cast<std::size_t>(j)]});
  gmp::SolverParams params;
  params.gmp.rho = 2;
  gmp::ClassifyReport rep = gmp::evaluate(dict, self, "bgmp", params);
  CHECK(rep.accuracy == 1.0);
  CHECK(rep.mean_sparsity <= params.gmp.resolved_max_atoms(dict.A().rows()));
  for (const auto& [cls, acc] : rep.per_class_accuracy) CHECK(acc == 1.0);

  CHECK_THROWS_AS(gmp::evaluate(dict, {}, "bgmp", params), std::invalid_argument);
}

TEST_CASE("dense solvers report full sparsity; sparse solvers stay capped") {
  SubspaceData data = make_subspace_data(30, 2, 2, 6, 4, 0.01, 9);
  LabeledDictionary dict(data.train, data.labels);
  gmp::SolverParams params;
  gmp::ClassifyReport l2 = gmp::evaluate(dict, data.test, "l2", params);
  CHECK(l2.mean_sparsity == static_cast<double>(dict.A().cols()));
  gmp::ClassifyReport bg = gmp::evaluate(dict, data.test, "bgmp", params);
  CHECK(bg.mean_sparsity <= params.gmp.resolved_max_atoms(dict.A().rows()));
}

TEST_CASE("label-permutation equivariance") {
  SubspaceData data = make_subspace_data(40, 3, 3, 8, 6, 0.01, 10);
  LabeledDictionary dict(data.train, data.labels);

  // Permute the training columns (and labels with them).
  std::vector<Index> perm(static_cast<std::size_t>(data.train.cols()));
  std::iota(perm.begin(), perm.end(), Index(0));
  std::mt19937_64 rng(123);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd shuffled(data.train.rows(), data.train.cols());
  std::vector<int> shuffled_labels(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.col(static_cast<Index>(i)) = data.train.col(perm[i]);
    shuffled_labels[i] = data.labels[static_cast<std::size_t>(perm[i])];
  }
  LabeledDictionary dict2(shuffled, shuffled_labels);

  gmp::SolverParams params;
  params.gmp.rho = 2;
  for (const auto& sample : data.test) {
    auto a = gmp::classify(dict, sample.y, "bgmp", params);
    auto b = gmp::classify(dict2, sample.y, "bgmp", params);
    CHECK(a.predicted == b.predicted);
  }
}

TEST_CASE("positive scaling of the query leaves predictions unchanged") {
  SubspaceData data = make_subspace_data(40, 3, 3, 8, 5, 0.01, 11);
  LabeledDictionary dict(data.train, data.labels);
  gmp::SolverParams params;
  params.gmp.rho = 2;
  for (const char* solver : {"l2", "l2l2", "bgmp"}) {
    for (const auto& sample : data.test) {
      auto a = gmp::classify(dict, sample.y, solver, params);
      auto b = gmp::classify(dict, (7.5 * sample.y).eval(), solver, params);
      CHECK(a.predicted == b.predicted);
    }
  }
}

TEST_CASE("near-duplicate training columns: bgmp stays accurate") {
  SubspaceData data = make_subspace_data(200, 5, 4, 40, 5, 0.01, 12, 0.3);
  LabeledDictionary dict(data.train, data.labels);
  gmp::SolverParams params;
  params.gmp.rho = 10;
  gmp::ClassifyReport rep = gmp::evaluate(dict, data.test, "bgmp", params);
  CHECK(rep.accuracy >= 0.95);
}
