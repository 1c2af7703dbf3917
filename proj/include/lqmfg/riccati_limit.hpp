#pragma once

#include "lqmfg/riccati_finite.hpp"

namespace lqmfg {

// Infinite-population limit: the standard Riccati equation (P1), the
// asymmetric Riccati equation (P2), the offset s1, the auxiliary limits of
// the open-loop rescaling (P3_open, P4_open, s2_open) and of the closed-loop
// rescaling (P3_closed, s2_closed), the decentralized gains, and the
// deterministic mean-field trajectory.
struct LimitSolution {
  TimeGrid grid;
  MatPath P1;              // symmetric
  MatPath P2;              // genuinely non-symmetric, integrated as such
  VecPath s1;
  MatPath P3_open, P4_open;
  VecPath s2_open;
  MatPath P3_closed;
  VecPath s2_closed;
  MatPath K1, K2;          // m x n decentralized gains
  VecPath phi1;            // m   decentralized affine term
  VecPath xbar;            // n   mean field, forward from x0_mean
};

// Solve order: (P1, P2) with s1 and all auxiliaries as one coupled backward
// system (the auxiliaries are linear given P1, P2, so no iteration), then
// gains, then the mean field forward. A blow-up in the backward pass is the
// asymptotic-solvability obstruction and is reported with its escape time.
Solved<LimitSolution> solve_limit(const ModelParams& p, const TimeGrid& grid);

// The decentralized law (K1, K2, phi1) packaged as a FeedbackLaw.
FeedbackLaw limit_law(const LimitSolution& sol);

}  // namespace lqmfg
