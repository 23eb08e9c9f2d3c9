#pragma once

#include "gmp/core.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace gmp::io {

// SPMX binary container: "SPMX" magic, u32 version, u64 n, u64 m, then
// n*m little-endian doubles in column-major order.

inline constexpr std::uint32_t kSpmxVersion = 1;

inline void write_spmx(const std::string& path, const Eigen::MatrixXd& a) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_spmx: cannot open " + path);
  f.write("SPMX", 4);
  std::uint32_t version = kSpmxVersion;
  std::uint64_t n = static_cast<std::uint64_t>(a.rows());
  std::uint64_t m = static_cast<std::uint64_t>(a.cols());
  f.write(reinterpret_cast<const char*>(&version), sizeof version);
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(&m), sizeof m);
  f.write(reinterpret_cast<const char*>(a.data()),
          static_cast<std::streamsize>(sizeof(double) * a.size()));
  if (!f) throw std::runtime_error("write_spmx: write failed for " + path);
}

inline Eigen::MatrixXd read_spmx(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_spmx: cannot open " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "SPMX", 4) != 0)
    throw std::runtime_error("read_spmx: bad magic in " + path);
  std::uint32_t version = 0;
  std::uint64_t n = 0, m = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  f.read(reinterpret_cast<char*>(&n), sizeof n);
  f.read(reinterpret_cast<char*>(&m), sizeof m);
  if (!f || version != kSpmxVersion)
    throw std::runtime_error("read_spmx: unsupported header in " + path);
  Eigen::MatrixXd a(static_cast<Index>(n), static_cast<Index>(m));
  f.read(reinterpret_cast<char*>(a.data()),
         static_cast<std::streamsize>(sizeof(double) * a.size()));
  if (!f) throw std::runtime_error("read_spmx: truncated payload in " + path);
  return a;
}

/// Plain-text CSV matrix, rows = measurements.
inline Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_csv_matrix: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error("read_csv_matrix: ragged row in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("read_csv_matrix: empty file " + path);
  Eigen::MatrixXd a(static_cast<Index>(rows.size()),
                    static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return a;
}

inline void write_trace_csv(std::ostream& os, const SolveTrace& trace) {
  os.precision(17);
  os << "outer_iter,objective,delta,support_size,inner_iters,wall_ms\n";
  for (std::size_t t = 0; t < trace.objective_per_outer.size(); ++t) {
    os << (t + 1) << ',' << trace.objective_per_outer[t] << ','
       << trace.delta_per_outer[t] << ',' << trace.support_sizes[t] << ','
       << trace.inner_iterations[t] << ',' << trace.wall_times_ms[t] << '\n';
  }
}

inline void write_trace_csv(const std::string& path, const SolveTrace& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_trace_csv: cannot open " + path);
  write_trace_csv(f, trace);
}

inline void write_solution_csv(std::ostream& os, const SparseSolution& x) {
  os.precision(17);
  os << "atom_index,value\n";
  for (Index i = 0; i < x.nnz(); ++i)
    os << x.support[static_cast<std::size_t>(i)] << ',' << x.values[i] << '\n';
}

}  // namespace gmp::io
