#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lqmfg/riccati_limit.hpp"

namespace lqmfg {

enum class EquilibriumKind { OpenLoop, ClosedLoop };

// Finite-N solution with the coupling blocks re-scaled by powers of N so
// their population limits are nontrivial:
//   L1 = P1, L2 = N P2, L3 = N^2 P3, L4 = N P4 (open loop only),
//   phi1 = s1, phi2 = N s2.
// Exact arithmetic relations to the source solution, nothing re-solved.
struct RescaledFamily {
  int N = 1;
  TimeGrid grid;
  EquilibriumKind kind = EquilibriumKind::OpenLoop;
  MatPath L1, L2, L3;
  std::optional<MatPath> L4;  // absent for the closed-loop family
  VecPath phi1, phi2;
};

RescaledFamily rescale(const OpenLoopFiniteSolution& sol);
RescaledFamily rescale(const ClosedLoopFiniteSolution& sol);

struct ConvergenceRow {
  int N = 0;
  bool solvable = true;
  double escape_time = 0.0;  // meaningful when !solvable
  double group1 = 0.0;       // sup-node gap of (L1, L2, phi1) to the limit
  double group2 = 0.0;       // sup-node gap of the auxiliary group
  std::vector<std::pair<std::string, double>> per_quantity;
};

struct ConvergenceTable {
  EquilibriumKind kind = EquilibriumKind::OpenLoop;
  std::vector<ConvergenceRow> rows;
  SlopeFit fit1, fit2;
};

// For each N: solve the finite system, rescale, take sup over grid nodes of
// the summed Frobenius gaps to the limit quantities, then fit log(gap)
// against log(N). Rows whose finite solve blows up are marked non-solvable
// and excluded from the fit (an empirical probe of the threshold population
// size). Both kinds are measured against the same LimitSolution instance.
ConvergenceTable convergence_study(const ModelParams& p, const TimeGrid& grid,
                                   const std::vector<int>& Ns,
                                   EquilibriumKind kind,
                                   const LimitSolution& limit);

// Same study at the gain level:
//   sup_t |K1^N - K1inf| + |N K2^N - K2inf| + |v^N - phi1inf|.
// Only group1/fit1 are populated.
ConvergenceTable gain_convergence(const ModelParams& p, const TimeGrid& grid,
                                  const std::vector<int>& Ns,
                                  EquilibriumKind kind,
                                  const LimitSolution& limit);

}  // namespace lqmfg
