#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gmp/core.hpp"
#include "gmp/harness.hpp"
#include "gmp/io.hpp"
#include "oracles.hpp"

#include <cstdio>
#include <sstream>

using gmp::DesignMatrix;
using gmp::Index;
using gmp::SparseSolution;

TEST_CASE("DesignMatrix validates and caches column norms") {
  Eigen::MatrixXd a(2, 3);
  a << 3, 0, 1, 4, 2, 1;
  DesignMatrix A(a);
  CHECK(A.rows() == 2);
  CHECK(A.cols() == 3);
  CHECK(A.col_norms()[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(A.col_norms()[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(A.col_norms()[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(DesignMatrix(Eigen::MatrixXd(0, 3)), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(DesignMatrix{bad}, std::invalid_argument);
}

TEST_CASE("DesignMatrix::restricted copies the requested columns") {
  DesignMatrix A = gmp::gen_matrix(4, 6, 11);
  Eigen::MatrixXd sub = A.restricted({5, 0});
  CHECK(sub.col(0) == A.data().col(5));
  CHECK(sub.col(1) == A.data().col(0));
  CHECK_THROWS_AS(A.restricted({6}), std::out_of_range);
  CHECK_THROWS_AS(A.restricted({-1}), std::out_of_range);
}

TEST_CASE("matvec: identity and zero cases") {
  DesignMatrix I3{Eigen::MatrixXd::Identity(3, 3)};
  SparseSolution x({1}, Eigen::VectorXd::Constant(1, 2.0), 3);
  Eigen::VectorXd v = gmp::matvec(I3, x);
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 2.0);
  CHECK(v[2] == 0.0);

  SparseSolution empty;
  empty.ambient = 3;
  CHECK(gmp::matvec(I3, empty).isZero(0.0));

  SparseSolution oob({7}, Eigen::VectorXd::Ones(1), 3);
  CHECK_THROWS_AS(gmp::matvec(I3, oob), std::out_of_range);
}

TEST_CASE("matvec matches the dense-product oracle") {
  DesignMatrix A = gmp::gen_matrix(5, 8, 42);
  SparseSolution x = gmp::gen_signal({gmp::SignalKind::gaussian, 3, 8, 7});
  Eigen::VectorXd got = gmp::matvec(A, x);
  Eigen::VectorXd want = oracle::naive_matvec(A.data(), x.dense());
  CHECK((got - want).lpNorm<Eigen::Infinity>() <= 1e-12 * want.lpNorm<Eigen::Infinity>());
}

TEST_CASE("correlate: identity, zero, and naive-loop oracle") {
  DesignMatrix I3{Eigen::MatrixXd::Identity(3, 3)};
  Eigen::VectorXd r(3);
  r << 1, -2, 0;
  CHECK(gmp::correlate(I3, gmp::Residual{r}) == r);
  CHECK(gmp::correlate(I3, gmp::Residual{Eigen::VectorXd::Zero(3)}).isZero(0.0));

  DesignMatrix A = gmp::gen_matrix(6, 10, 3);
  Eigen::VectorXd rv = gmp::gen_noise(gmp::NoiseSpec::gaussian(1.0), 6, 9);
  Eigen::VectorXd got = gmp::correlate(A, gmp::Residual{rv});
  Eigen::VectorXd want = oracle::naive_correlate(A.data(), rv);
  CHECK((got - want).lpNorm<Eigen::Infinity>() <= 1e-12 * want.lpNorm<Eigen::Infinity>());

  CHECK_THROWS_AS(gmp::correlate(A, gmp::Residual{Eigen::VectorXd::Zero(5)}),
                  std::invalid_argument);
}

TEST_CASE("objective: theta0, exact fit, dense oracle") {
  DesignMatrix I2{Eigen::MatrixXd::Identity(2, 2)};
  Eigen::VectorXd b(2);
  b << 3, 4;
  SparseSolution zero;
  zero.ambient = 2;
  CHECK(gmp::objective(I2, b, zero, 0.5) == doctest::Approx(12.5).epsilon(1e-15));

  Eigen::VectorXd e1(2);
  e1 << 1, 0;
  SparseSolution x({0}, Eigen::VectorXd::Ones(1), 2);
  CHECK(gmp::objective(I2, e1, x, 0.0) == doctest::Approx(0.0));

  DesignMatrix A = gmp::gen_matrix(7, 9, 5);
  SparseSolution xs = gmp::gen_signal({gmp::SignalKind::uniform, 4, 9, 6});
  Eigen::VectorXd bb = gmp::gen_noise(gmp::NoiseSpec::gaussian(1.0), 7, 8);
  double lambda = 0.3;
  double got = gmp::objective(A, bb, xs, lambda);
  Eigen::VectorXd dense = xs.dense();
  double want = lambda * dense.lpNorm<1>() +
                0.5 * (bb - oracle::naive_matvec(A.data(), dense)).squaredNorm();
  CHECK(got == doctest::Approx(want).epsilon(1e-12));

  Eigen::VectorXd short_b = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(gmp::objective(A, short_b, xs, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(gmp::objective(A, bb, xs, -1.0), std::invalid_argument);
}

TEST_CASE("objective nonnegativity and the Ax = b equality case") {
  DesignMatrix A = gmp::gen_matrix(6, 4, 13);
  SparseSolution x = gmp::gen_signal({gmp::SignalKind::gaussian, 2, 4, 14});
  Eigen::VectorXd b = gmp::matvec(A, x);
  CHECK(gmp::objective(A, b, x, 0.0) <= 1e-20);
  SparseSolution other = gmp::gen_signal({gmp::SignalKind::gaussian, 2, 4, 15});
  CHECK(gmp::objective(A, b, other, 0.0) > 0.0);
}

TEST_CASE("adjointness of matvec and correlate") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DesignMatrix A = gmp::gen_matrix(9, 14, seed);
    SparseSolution x = gmp::gen_signal({gmp::SignalKind::gaussian, 5, 14, seed + 100});
    Eigen::VectorXd r = gmp::gen_noise(gmp::NoiseSpec::gaussian(1.0), 9, seed + 200);
    double lhs = gmp::matvec(A, x).dot(r);
    double rhs = x.dense().dot(gmp::correlate(A, gmp::Residual{r}));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("SparseSolution round-trip and finalize") {
  Eigen::VectorXd vals(2);
  vals << -0.5, 2.0;
  SparseSolution x({4, 1}, vals, 6);
  SparseSolution back = SparseSolution::from_dense(x.dense());
  // from_dense sorts by index; compare as dense.
  CHECK(back.dense() == x.dense());
  CHECK(back.support == std::vector<Index>{1, 4});

  Eigen::VectorXd v2(3);
  v2 << 1.0, 1e-15, -2.0;
  SparseSolution y({5, 2, 0}, v2, 6);
  y.finalize();
  CHECK(y.support == std::vector<Index>{0, 5});
  CHECK(y.values[0] == -2.0);
  CHECK(y.values[1] == 1.0);

  CHECK_THROWS_AS(SparseSolution({0, 1}, Eigen::VectorXd::Ones(1), 3),
                  std::invalid_argument);
}

TEST_CASE("SPMX round-trip preserves the matrix bitwise") {
  DesignMatrix A = gmp::gen_matrix(5, 9, 77);
  const std::string path = "test_core_roundtrip.spmx";
  gmp::io::write_spmx(path, A.data());
  Eigen::MatrixXd back = gmp::io::read_spmx(path);
  CHECK(back == A.data());
  std::remove(path.c_str());

  CHECK_THROWS_AS(gmp::io::read_spmx("no_such_file.spmx"), std::runtime_error);
}

TEST_CASE("read_spmx rejects bad magic") {
  const std::string path = "test_core_bad.spmx";
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE garbage";
  }
  CHECK_THROWS_AS(gmp::io::read_spmx(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("CSV matrix reader") {
  const std::string path = "test_core_mat.csv";
  {
    std::ofstream f(path);
    f << "1,2,3\n4,5,6\n";
  }
  Eigen::MatrixXd a = gmp::io::read_csv_matrix(path);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a(1, 2) == 6.0);
  std::remove(path.c_str());

  {
    std::ofstream f(path);
    f << "1,2\n3\n";
  }
  CHECK_THROWS_AS(gmp::io::read_csv_matrix(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("trace CSV columns match the documented export") {
  gmp::SolveTrace trace;
  trace.theta0 = 1.0;
  trace.objective_per_outer = {0.5};
  trace.delta_per_outer = {0.5};
  trace.support_sizes = {2};
  trace.inner_iterations = {3};
  trace.wall_times_ms = {0.25};
  std::ostringstream os;
  gmp::io::write_trace_csv(os, trace);
  CHECK(os.str().substr(0, os.str().find('\n')) ==
        "outer_iter,objective,delta,support_size,inner_iters,wall_ms");
  CHECK(os.str().find("1,0.5,0.5,2,3,0.25") != std::string::npos);
}

TEST_CASE("GmpConfig validation and atom-cap resolution") {
  gmp::GmpConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.resolved_max_atoms(128) == 128);
  CHECK(cfg.resolved_max_atoms(4096) == 600);
  cfg.max_atoms = 12;
  CHECK(cfg.resolved_max_atoms(4096) == 12);

  gmp::GmpConfig bad = cfg;
  bad.rho = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.lambda = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.epsilon = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.omega = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
