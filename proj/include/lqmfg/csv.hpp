#pragma once

#include <ostream>
#include <string>

#include "lqmfg/asymptotics.hpp"
#include "lqmfg/game_eval.hpp"

namespace lqmfg {

// All writers emit the same bytes for the same inputs (fixed %.17g number
// formatting, no timestamps), so reruns are diffable.
std::string format_double(double v);

// Matrix trajectory at grid nodes: header t,e00,e01,... row-major entries.
void write_matrix_path_csv(std::ostream& os, const MatPath& path);
void write_vector_path_csv(std::ostream& os, const VecPath& path);

// t, K1inf, K2inf, phi1inf, xbar columns (row-major matrix entries).
void write_limit_summary_csv(std::ostream& os, const LimitSolution& limit);

void write_convergence_csv(std::ostream& os, const ConvergenceTable& table);
void write_nash_gap_csv(std::ostream& os, const NashGapReport& report);

// {"slope":...,"r2":...,"pass":...} on a single line.
void write_slope_verdict_json(std::ostream& os, const SlopeFit& fit,
                              double slope_lo, double slope_hi, double r2_min);

// Per-node mean-field deviation of one simulation: t, mean |x^(N)-xbar|^2,
// standard error.
void write_mf_deviation_csv(std::ostream& os, const PopulationPaths& paths);

// Little-endian full-path dump. Layout, all little-endian:
//   magic "LQMFPATH" (8 bytes), u32 version=1, u32 n, u32 m, u32 N,
//   u32 M, u32 n_paths, u64 seed, then for each replication, player, node:
//   state (n doubles) followed by control (m doubles).
void write_population_binary(std::ostream& os, const PopulationPaths& paths,
                             int n, int m);

}  // namespace lqmfg
