#include "lqmfg/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

namespace lqmfg {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_header(std::ostream& os, int rows, int cols) {
  os << "t";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) os << ",e" << r << c;
  os << "\n";
}

void write_matrix_row(std::ostream& os, double t, const Eigen::MatrixXd& M) {
  os << format_double(t);
  for (int r = 0; r < M.rows(); ++r)
    for (int c = 0; c < M.cols(); ++c) os << "," << format_double(M(r, c));
  os << "\n";
}

}  // namespace

void write_matrix_path_csv(std::ostream& os, const MatPath& path) {
  const auto& grid = path.grid();
  write_header(os, static_cast<int>(path.node(0).rows()),
               static_cast<int>(path.node(0).cols()));
  for (int k = 0; k < grid.nodes(); ++k)
    write_matrix_row(os, grid.node_time(k), path.node(k));
}

void write_vector_path_csv(std::ostream& os, const VecPath& path) {
  const auto& grid = path.grid();
  write_header(os, static_cast<int>(path.node(0).size()), 1);
  for (int k = 0; k < grid.nodes(); ++k) {
    os << format_double(grid.node_time(k));
    for (int r = 0; r < path.node(k).size(); ++r)
      os << "," << format_double(path.node(k)(r));
    os << "\n";
  }
}

void write_limit_summary_csv(std::ostream& os, const LimitSolution& limit) {
  const auto& grid = limit.grid;
  const int m = static_cast<int>(limit.K1.node(0).rows());
  const int n = static_cast<int>(limit.K1.node(0).cols());
  os << "t";
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) os << ",K1inf" << r << c;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) os << ",K2inf" << r << c;
  for (int r = 0; r < m; ++r) os << ",phi1inf" << r;
  for (int r = 0; r < n; ++r) os << ",xbar" << r;
  os << "\n";
  for (int k = 0; k < grid.nodes(); ++k) {
    os << format_double(grid.node_time(k));
    const auto& K1 = limit.K1.node(k);
    const auto& K2 = limit.K2.node(k);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) os << "," << format_double(K1(r, c));
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) os << "," << format_double(K2(r, c));
    for (int r = 0; r < m; ++r)
      os << "," << format_double(limit.phi1.node(k)(r));
    for (int r = 0; r < n; ++r)
      os << "," << format_double(limit.xbar.node(k)(r));
    os << "\n";
  }
}

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table) {
  os << "N,solvable,gap_group1,gap_group2";
  if (!table.rows.empty())
    for (const auto& [name, _] : table.rows.front().per_quantity)
      os << ",gap_" << name;
  os << "\n";
  for (const auto& row : table.rows) {
    os << row.N << "," << (row.solvable ? 1 : 0) << ","
       << format_double(row.group1) << "," << format_double(row.group2);
    for (const auto& [_, gap] : row.per_quantity)
      os << "," << format_double(gap);
    os << "\n";
  }
}

void write_nash_gap_csv(std::ostream& os, const NashGapReport& report) {
  os << "N,solvable,J_policy,J_star,gap\n";
  for (const auto& row : report.rows) {
    os << row.N << "," << (row.solvable ? 1 : 0) << ","
       << format_double(row.policy_cost) << ","
       << format_double(row.best_response_cost) << ","
       << format_double(row.gap) << "\n";
  }
}

void write_slope_verdict_json(std::ostream& os, const SlopeFit& fit,
                              double slope_lo, double slope_hi,
                              double r2_min) {
  const bool pass =
      fit.exact || (fit.slope >= slope_lo && fit.slope <= slope_hi &&
                    fit.r2 >= r2_min);
  os << "{\"slope\":" << format_double(fit.slope)
     << ",\"r2\":" << format_double(fit.r2)
     << ",\"exact\":" << (fit.exact ? "true" : "false")
     << ",\"pass\":" << (pass ? "true" : "false") << "}\n";
}

void write_mf_deviation_csv(std::ostream& os, const PopulationPaths& paths) {
  const int R = paths.n_paths;
  os << "t,mean_sq_deviation,std_error\n";
  for (int k = 0; k < paths.grid.nodes(); ++k) {
    double mean = 0.0;
    for (int r = 0; r < R; ++r) mean += paths.mf_sq_deviation[r][k];
    mean /= R;
    double ss = 0.0;
    for (int r = 0; r < R; ++r) {
      const double d = paths.mf_sq_deviation[r][k] - mean;
      ss += d * d;
    }
    const double se = R > 1 ? std::sqrt(ss / (R - 1.0) / R) : 0.0;
    os << format_double(paths.grid.node_time(k)) << "," << format_double(mean)
       << "," << format_double(se) << "\n";
  }
}

void write_population_binary(std::ostream& os, const PopulationPaths& paths,
                             int n, int m) {
  const auto put_u32 = [&os](std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  const auto put_u64 = [&os](std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    os.write(reinterpret_cast<const char*>(b), 8);
  };
  const auto put_f64 = [&put_u64](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(bits);
  };
  os.write("LQMFPATH", 8);
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(n));
  put_u32(static_cast<std::uint32_t>(m));
  put_u32(static_cast<std::uint32_t>(paths.N));
  put_u32(static_cast<std::uint32_t>(paths.grid.M));
  put_u32(static_cast<std::uint32_t>(paths.n_paths));
  put_u64(paths.seed);
  for (int r = 0; r < paths.n_paths; ++r) {
    for (int i = 0; i < paths.N; ++i) {
      for (int k = 0; k < paths.grid.nodes(); ++k) {
        for (int d = 0; d < n; ++d) put_f64(paths.states[r][i][k](d));
        for (int d = 0; d < m; ++d) put_f64(paths.controls[r][i][k](d));
      }
    }
  }
}

}  // namespace lqmfg
