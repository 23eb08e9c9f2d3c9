// Command-line driver for the GMP sparse-recovery library.

#include "gmp/classifier.hpp"
#include "gmp/harness.hpp"
#include "gmp/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

gmp::DesignMatrix load_matrix(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return gmp::DesignMatrix(gmp::io::read_csv_matrix(path));
  return gmp::DesignMatrix(gmp::io::read_spmx(path));
}

gmp::ExperimentPlan parse_plan(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open plan file " + path);
  json j = json::parse(f);

  gmp::ExperimentPlan plan;
  plan.n = j.value("n", 0);
  plan.m = j.value("m", 0);
  plan.ensemble = j.value("ensemble", "gaussian");
  plan.matrix_file = j.value("matrix_file", "");
  plan.signal = gmp::signal_kind_from_string(j.value("signal", "zero_one"));
  if (j.contains("noise")) {
    const auto& nj = j["noise"];
    std::string kind = nj.value("kind", "none");
    if (kind == "uniform") plan.noise = gmp::NoiseSpec::uniform(nj.value("amount", 0.01));
    else if (kind == "gaussian") plan.noise = gmp::NoiseSpec::gaussian(nj.value("amount", 0.01));
  }
  for (const auto& s : j.at("solvers")) {
    if (s.is_string()) {
      plan.solvers.push_back(s.get<std::string>());
    } else {
      std::string name = s.at("name").get<std::string>();
      plan.solvers.push_back(name);
      gmp::SolverParams p;
      p.gmp.rho = s.value("rho", p.gmp.rho);
      p.gmp.omega = s.value("omega", p.gmp.omega);
      p.gmp.lambda = s.value("lambda", p.gmp.lambda);
      p.gmp.epsilon = s.value("epsilon", p.gmp.epsilon);
      p.baseline.k_hat = s.value("k_hat", p.baseline.k_hat);
      p.baseline.eta = s.value("eta", p.baseline.eta);
      p.baseline.ridge_lambda = s.value("ridge_lambda", p.baseline.ridge_lambda);
      p.use_default_lambda = s.value("default_lambda", false);
      plan.params[name] = p;
    }
  }
  for (const auto& k : j.at("k_sweep")) plan.k_sweep.push_back(k.get<gmp::Index>());
  plan.trials = j.value("trials", 1);
  plan.base_seed = j.value("seed", 0ull);
  plan.threads = j.value("threads", 0);
  plan.out_prefix = j.value("out_prefix", "sweep");
  return plan;
}

std::vector<gmp::StopRule> stops_from(const gmp::GmpConfig& cfg) {
  return gmp::default_stops(cfg.epsilon);
}

int cmd_solve(const std::string& matrix_path, gmp::Index n, gmp::Index m,
              std::uint64_t seed, const std::string& signal_kind, gmp::Index k,
              const std::string& solver, gmp::GmpConfig cfg, int k_hat,
              bool use_default_lambda, const std::string& out_prefix) {
  auto A = matrix_path.empty() ? gmp::gen_matrix(n, m, seed) : load_matrix(matrix_path);
  gmp::SparseSolution x_true =
      gmp::gen_signal({gmp::signal_kind_from_string(signal_kind), k, A.cols(), seed + 1});
  Eigen::VectorXd b = gmp::matvec(A, x_true);

  gmp::SolverParams params;
  params.gmp = cfg;
  params.baseline.k_hat = k_hat;
  params.k_true = k;
  params.use_default_lambda = use_default_lambda;

  gmp::TrialRecord rec = gmp::run_trial(solver, A, b, x_true, params, seed, 0);
  std::cout << "solver=" << solver << " success=" << rec.success
            << " residual=" << rec.residual << " mse=" << rec.mse
            << " sparsity=" << rec.sparsity_out << " wall_ms=" << rec.wall_ms << "\n";

  // Detailed trace for the GMP family.
  if (solver == "gmp" || solver == "sgmp") {
    if (use_default_lambda) cfg.lambda = gmp::default_lambda(A, b);
    auto [x, trace] = solver == "sgmp" ? gmp::sgmp_solve(A, b, cfg, stops_from(cfg))
                                       : gmp::gmp_solve(A, b, cfg, stops_from(cfg));
    gmp::io::write_trace_csv(out_prefix + "_trace.csv", trace);
    std::ofstream sol(out_prefix + "_solution.csv");
    gmp::io::write_solution_csv(sol, x);
    std::cout << "stop_reason=" << gmp::to_string(trace.stop_reason)
              << " outer_iters=" << trace.outer_iterations() << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& plan_path) {
  gmp::ExperimentPlan plan = parse_plan(plan_path);
  gmp::SweepResult result = gmp::run_plan(plan);
  {
    std::ofstream f(plan.out_prefix + "_trials.csv");
    gmp::write_records_csv(f, result.records);
  }
  {
    std::ofstream f(plan.out_prefix + "_trials_timed.csv");
    gmp::write_records_csv(f, result.records, /*include_timing=*/true);
  }
  {
    std::ofstream f(plan.out_prefix + "_cells.csv");
    gmp::write_cells_csv(f, result);
  }
  std::cout << "wrote " << plan.out_prefix << "_{trials,trials_timed,cells}.csv ("
            << result.records.size() << " records)\n";
  return 0;
}

int cmd_nonrip(gmp::Index n, gmp::Index m, gmp::Index dup, std::uint64_t seed,
               const std::vector<std::string>& solvers, const std::string& out) {
  auto [A, x_true, b] = gmp::gen_nonrip(n, m, dup, seed);
  std::ofstream f(out);
  f.precision(17);
  f << "solver,residual,residual_over_bsq,sparsity,monotone\n";
  for (const std::string& name : solvers) {
    gmp::SolverParams params;
    params.k_true = dup;
    bool monotone = true;
    double resid = 0;
    gmp::Index nnz = 0;
    try {
      if (name == "gmp" || name == "sgmp") {
        gmp::GmpConfig cfg;
        cfg.rho = std::max(1, static_cast<int>(dup / 4));
        if (name == "sgmp") cfg.omega = 4;
        auto [x, trace] = name == "sgmp"
                              ? gmp::sgmp_solve(A, b, cfg, stops_from(cfg))
                              : gmp::gmp_solve(A, b, cfg, stops_from(cfg));
        for (double d : trace.delta_per_outer)
          if (d < -1e-12) monotone = false;
        resid = (b - gmp::matvec(A, x)).norm();
        nnz = x.nnz();
      } else {
        gmp::SparseSolution x = gmp::solver_registry().at(name)(A, b, params);
        resid = (b - gmp::matvec(A, x)).norm();
        nnz = x.nnz();
        monotone = false;  // not tracked for baselines
      }
      f << name << ',' << resid << ',' << resid * resid / b.squaredNorm() << ',' << nnz
        << ',' << (monotone ? 1 : 0) << '\n';
    } catch (const std::exception& e) {
      std::cerr << name << " failed: " << e.what() << "\n";
    }
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_rip(const std::string& matrix_path, gmp::Index n, gmp::Index m,
            std::uint64_t seed, gmp::Index k) {
  auto A = matrix_path.empty() ? gmp::gen_matrix(n, m, seed) : load_matrix(matrix_path);
  gmp::RipEstimate est = gmp::estimate_rip(A, k);
  std::cout << "k=" << k << " delta_k=" << est.delta_k
            << " gamma_minus=" << est.gamma_minus << " gamma_plus=" << est.gamma_plus
            << " kappa=" << est.kappa << "\n"
            << "(columns normalized to unit l2 norm before estimation)\n";
  return 0;
}

int cmd_batch(const std::string& matrix_path, const std::string& signals_path,
              const std::string& solver, gmp::GmpConfig cfg, int k,
              const std::string& out_prefix) {
  gmp::DesignMatrix A = load_matrix(matrix_path);
  Eigen::MatrixXd B = matrix_path == signals_path ? A.data()
                                                  : load_matrix(signals_path).data();
  if (B.rows() != A.rows())
    throw std::runtime_error("batch: signal rows must match matrix rows");

  gmp::GramCache cache(A);
  std::ofstream results(out_prefix + "_batch.csv");
  results.precision(17);
  results << "signal_id,support_size,residual_norm,wall_ms\n";
  std::ofstream sidecar(out_prefix + "_solutions.csv");
  sidecar.precision(17);
  sidecar << "signal_id,atom_index,value\n";

  for (gmp::Index s = 0; s < B.cols(); ++s) {
    Eigen::VectorXd b = B.col(s);
    Eigen::VectorXd Atb = cache.correlations(A, b);
    auto tic = std::chrono::steady_clock::now();
    gmp::SparseSolution x;
    if (solver == "bomp") {
      x = gmp::bomp_solve(cache, Atb, k);
    } else {
      x = gmp::bgmp_solve(cache, Atb, b.squaredNorm(), cfg, stops_from(cfg)).first;
    }
    auto toc = std::chrono::steady_clock::now();
    double ms = std::chrono::duration<double, std::milli>(toc - tic).count();
    results << s << ',' << x.nnz() << ',' << (b - gmp::matvec(A, x)).norm() << ',' << ms
            << '\n';
    for (gmp::Index i = 0; i < x.nnz(); ++i)
      sidecar << s << ',' << x.support[static_cast<std::size_t>(i)] << ',' << x.values[i]
              << '\n';
  }
  std::cout << "wrote " << out_prefix << "_{batch,solutions}.csv\n";
  return 0;
}

int cmd_classify(const std::string& data_path, const std::string& labels_path,
                 const std::string& solver, double rate, gmp::Index grid_h,
                 gmp::Index grid_w, double train_frac, std::uint64_t seed,
                 const std::string& out_prefix) {
  Eigen::MatrixXd X = load_matrix(data_path).data();

  // Sidecar CSV: column_index, class_id [, split]. Without a split column
  // the train/test partition is drawn per class from train_frac.
  std::vector<int> labels(static_cast<std::size_t>(X.cols()), -1);
  std::vector<int> split(static_cast<std::size_t>(X.cols()), -1);  // 0 train, 1 test
  bool has_split = false;
  {
    std::ifstream f(labels_path);
    if (!f) throw std::runtime_error("cannot open labels file " + labels_path);
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<std::string> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      std::size_t col = static_cast<std::size_t>(std::stoll(cells.at(0)));
      labels.at(col) = std::stoi(cells.at(1));
      if (cells.size() > 2) {
        has_split = true;
        split.at(col) = cells[2] == "train" ? 0 : 1;
      }
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0) throw std::runtime_error("unlabeled column " + std::to_string(i));

  if (rate < 1.0) {
    if (grid_h < 1 || grid_w < 1)
      throw std::runtime_error("classify: --grid h w required when --rate < 1");
    X = gmp::downsample(X, grid_h, grid_w, rate);
  }

  if (!has_split) {
    std::map<int, std::vector<gmp::Index>> by_class;
    for (gmp::Index j = 0; j < X.cols(); ++j)
      by_class[labels[static_cast<std::size_t>(j)]].push_back(j);
    std::mt19937_64 rng(seed);
    for (auto& [cls, cols] : by_class) {
      std::shuffle(cols.begin(), cols.end(), rng);
      std::size_t n_train = std::max<std::size_t>(
          1, static_cast<std::size_t>(train_frac * static_cast<double>(cols.size())));
      for (std::size_t i = 0; i < cols.size(); ++i)
        split[static_cast<std::size_t>(cols[i])] = i < n_train ? 0 : 1;
    }
  }

  std::vector<gmp::Index> train_cols;
  std::vector<gmp::TestSample> test;
  std::vector<gmp::Index> test_cols;
  for (gmp::Index j = 0; j < X.cols(); ++j) {
    if (split[static_cast<std::size_t>(j)] == 0) {
      train_cols.push_back(j);
    } else {
      test.push_back({X.col(j), labels[static_cast<std::size_t>(j)]});
      test_cols.push_back(j);
    }
  }
  Eigen::MatrixXd train(X.rows(), static_cast<gmp::Index>(train_cols.size()));
  std::vector<int> train_labels;
  for (std::size_t i = 0; i < train_cols.size(); ++i) {
    train.col(static_cast<gmp::Index>(i)) = X.col(train_cols[i]);
    train_labels.push_back(labels[static_cast<std::size_t>(train_cols[i])]);
  }

  gmp::LabeledDictionary dict(std::move(train), std::move(train_labels));
  gmp::SolverParams params;
  params.gmp.rho = 10;  // batch-mode classification default
  std::vector<int> predictions;
  gmp::ClassifyReport report = gmp::evaluate(dict, test, solver, params, &predictions);

  {
    std::ofstream f(out_prefix + "_report.csv");
    f.precision(17);
    f << "solver,accuracy,mean_sparsity,total_wall_ms\n";
    f << report.solver << ',' << report.accuracy << ',' << report.mean_sparsity << ','
      << report.total_wall_ms << '\n';
    f << "class,accuracy\n";
    for (const auto& [cls, acc] : report.per_class_accuracy) f << cls << ',' << acc << '\n';
  }
  {
    std::ofstream f(out_prefix + "_predictions.csv");
    f << "column_index,true_class,predicted_class\n";
    for (std::size_t i = 0; i < test.size(); ++i)
      f << test_cols[i] << ',' << test[i].label << ',' << predictions[i] << '\n';
  }
  std::cout << "accuracy=" << report.accuracy << " mean_sparsity=" << report.mean_sparsity
            << " wall_ms=" << report.total_wall_ms << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse recovery with general matching pursuit"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "decode one generated or loaded signal");
  std::string matrix_path, signal_kind = "gaussian", solver = "gmp", out_prefix = "solve";
  gmp::Index n = 64, m = 256, k = 6;
  std::uint64_t seed = 1;
  gmp::GmpConfig cfg;
  int k_hat = 0;
  bool use_default_lambda = false;
  solve->add_option("--matrix", matrix_path, "SPMX or CSV dictionary file");
  solve->add_option("-n", n, "rows when generating");
  solve->add_option("-m", m, "columns when generating");
  solve->add_option("--seed", seed, "instance seed");
  solve->add_option("--signal", signal_kind, "zero_one | uniform | gaussian");
  solve->add_option("-k", k, "ground-truth sparsity");
  solve->add_option("--solver", solver, "registry name (gmp, sgmp, omp, sp, ...)");
  solve->add_option("--rho", cfg.rho, "atoms per outer iteration");
  solve->add_option("--omega", cfg.omega, "subspace factor");
  solve->add_option("--lambda", cfg.lambda, "l1 weight");
  solve->add_option("--epsilon", cfg.epsilon, "relative-improvement stop tolerance");
  solve->add_option("--khat", k_hat, "sparsity estimate for SP/OMPR/NIHT");
  solve->add_flag("--default-lambda", use_default_lambda,
                  "set lambda = 0.005 * ||A^T b||_inf");
  solve->add_option("--out", out_prefix, "output file prefix");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run an experiment plan (JSON)");
  std::string plan_path;
  sweep->add_option("--plan", plan_path, "plan file")->required();

  // nonrip
  auto* nonrip = app.add_subcommand("nonrip", "duplicated-column stress instance");
  gmp::Index nr_n = 128, nr_m = 512, nr_dup = 16;
  std::uint64_t nr_seed = 7;
  std::vector<std::string> nr_solvers = {"gmp", "sgmp", "sp", "niht"};
  std::string nr_out = "nonrip.csv";
  nonrip->add_option("-n", nr_n);
  nonrip->add_option("-m", nr_m);
  nonrip->add_option("--dup", nr_dup, "number of duplicated columns");
  nonrip->add_option("--seed", nr_seed);
  nonrip->add_option("--solvers", nr_solvers, "solvers to run");
  nonrip->add_option("--out", nr_out);

  // rip
  auto* rip = app.add_subcommand("rip", "brute-force restricted-eigenvalue estimate");
  std::string rip_matrix;
  gmp::Index rip_n = 8, rip_m = 12, rip_k = 2;
  std::uint64_t rip_seed = 1;
  rip->add_option("--matrix", rip_matrix);
  rip->add_option("-n", rip_n);
  rip->add_option("-m", rip_m);
  rip->add_option("--seed", rip_seed);
  rip->add_option("-k", rip_k)->required();

  // batch
  auto* batch = app.add_subcommand("batch", "BGMP/BOMP over a signal matrix");
  std::string batch_matrix, batch_signals, batch_solver = "bgmp",
              batch_out = "batch";
  gmp::GmpConfig batch_cfg;
  int batch_k = 200;
  batch->add_option("--matrix", batch_matrix)->required();
  batch->add_option("--signals", batch_signals, "SPMX file, signals as columns")
      ->required();
  batch->add_option("--solver", batch_solver, "bgmp | bomp");
  batch->add_option("--rho", batch_cfg.rho);
  batch->add_option("--lambda", batch_cfg.lambda);
  batch->add_option("--epsilon", batch_cfg.epsilon);
  batch->add_option("-k", batch_k, "BOMP atom budget");
  batch->add_option("--out", batch_out);

  // classify
  auto* classify = app.add_subcommand("classify", "sparse-representation classification");
  std::string cls_data, cls_labels, cls_solver = "bgmp", cls_out = "classify";
  double cls_rate = 1.0, cls_train_frac = 0.5;
  gmp::Index cls_h = 0, cls_w = 0;
  std::uint64_t cls_seed = 1;
  classify->add_option("--data", cls_data, "SPMX matrix, samples as columns")->required();
  classify->add_option("--labels", cls_labels, "CSV: column_index,class_id[,split]")
      ->required();
  classify->add_option("--solver", cls_solver, "bgmp | bomp | pg-lasso | l2 | l2l2");
  classify->add_option("--rate", cls_rate, "down-sampling rate");
  classify->add_option("--grid", [&cls_h, &cls_w](const std::vector<std::string>& v) {
    if (v.size() != 2) return false;
    cls_h = std::stoll(v[0]);
    cls_w = std::stoll(v[1]);
    return true;
  }, "image grid h w")->expected(2);
  classify->add_option("--train-frac", cls_train_frac, "training fraction per class");
  classify->add_option("--seed", cls_seed);
  classify->add_option("--out", cls_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return cmd_solve(matrix_path, n, m, seed, signal_kind, k, solver, cfg, k_hat,
                       use_default_lambda, out_prefix);
    if (sweep->parsed()) return cmd_sweep(plan_path);
    if (nonrip->parsed())
      return cmd_nonrip(nr_n, nr_m, nr_dup, nr_seed, nr_solvers, nr_out);
    if (rip->parsed()) return cmd_rip(rip_matrix, rip_n, rip_m, rip_seed, rip_k);
    if (batch->parsed())
      return cmd_batch(batch_matrix, batch_signals, batch_solver, batch_cfg, batch_k,
                       batch_out);
    if (classify->parsed())
      return cmd_classify(cls_data, cls_labels, cls_solver, cls_rate, cls_h, cls_w,
                          cls_train_frac, cls_seed, cls_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
