#pragma once

#include "lqmfg/simulate.hpp"

namespace lqmfg {

struct CostEstimate {
  int player = 0;
  double mean = 0.0;
  double std_error = 0.0;
  int n_paths = 0;
};

// Monte Carlo estimate of one player's cost from simulated paths
// (trapezoidal running term plus terminal term, averaged over replications).
CostEstimate evaluate_cost(const PopulationPaths& paths, const ModelParams& p,
                           int player);

// Closed-loop equilibrium value of one representative player, from the
// completed-square cost identity evaluated at the initial moments
// (E[x0 M x0] = xbar0' M xbar0 + tr(M cov), cross terms by independence)
// with the time integral by trapezoid on the grid.
double value_function(const ClosedLoopFiniteSolution& sol,
                      const ModelParams& p, int N);

// Costate of player i reconstructed algebraically along simulated paths,
// p_i = (P1 - P2) x_i + N P2 x^(N) + s1, together with the stationarity
// residual of the equilibrium control. The relation is an identity of the
// decoupling, so the residual is round-off sized when paths and solution
// come from the same law; a provenance mismatch throws unless explicitly
// allowed (the residual is then a diagnostic of the law gap).
struct CostateReconstruction {
  std::vector<Eigen::VectorXd> costate;  // replication 0, requested player
  double residual = 0.0;  // sup over replications and nodes, max-norm
  double scale = 0.0;     // 1 + sup |R u|, the relative normalization
};

CostateReconstruction reconstruct_costate(const OpenLoopFiniteSolution& sol,
                                          const PopulationPaths& paths,
                                          const ModelParams& p, int player,
                                          bool allow_mismatch = false);
CostateReconstruction reconstruct_costate(const ClosedLoopFiniteSolution& sol,
                                          const PopulationPaths& paths,
                                          const ModelParams& p, int player,
                                          bool allow_mismatch = false);

// One deviating player against N-1 frozen opponents. The opponents'
// average control is affine in (x_i, z) with an exogenous offset, where z
// is the average state of the other N-1 players; so is the deviator's own
// policy when a policy (rather than the optimum) is evaluated. For N = 1
// the z component is absent and the coefficient paths on z are ignored.
struct AffineStrategy {
  MatPath on_own;   // m x n coefficient on x_i
  MatPath on_peer;  // m x n coefficient on z
  VecPath offset;   // m
};

// The deviator-side and opponent-side views of a population policy. The
// policy's law must live on `grid`; the zero policy is materialized there.
AffineStrategy deviator_view(const Policy& policy, int N,
                             const ModelParams& p, const TimeGrid& grid);
AffineStrategy opponent_view(const Policy& policy, int N,
                             const ModelParams& p, const TimeGrid& grid);

// Exact cost of player i when everyone follows the given affine strategies:
// the (x_i, z) system is linear-Gaussian, so the mean and second moment are
// propagated forward and the quadratic cost integrated by trapezoid. No
// Monte Carlo involved.
double policy_cost_moments(const ModelParams& p, int N,
                           const AffineStrategy& deviator,
                           const AffineStrategy& opponents,
                           const TimeGrid& grid);

// Exact best response of player i against frozen opponents: a time-varying
// LQR on the augmented state (x_i, z), solved backward (symmetric Riccati,
// affine offset, scalar constant collecting the noise of player i and of
// the z-aggregate, variance sigma sigma^T / (N-1)).
struct BestResponseSolution {
  int N = 1;
  TimeGrid grid;
  MatPath S;        // augmented Riccati block (2n, or n when N = 1)
  VecPath g;        // affine offset
  std::vector<double> kappa;  // constant term, sampled on the lattice
  AffineStrategy policy;      // optimal affine feedback
  double optimal_cost = 0.0;      // value-function route E V(0, xi0)
  double optimal_cost_mom = 0.0;  // forward-moment route, same machinery as
                                  // policy_cost_moments (used for gap rows
                                  // so both sides share one quadrature)
};

Solved<BestResponseSolution> best_response(const ModelParams& p, int N,
                                           const AffineStrategy& opponents,
                                           const TimeGrid& grid);

struct NashGapRow {
  int N = 0;
  bool solvable = true;
  double policy_cost = 0.0;
  double best_response_cost = 0.0;
  double gap = 0.0;
};

struct NashGapReport {
  PolicyKind policy = PolicyKind::Decentralized;
  std::vector<NashGapRow> rows;
  SlopeFit fit;
};

// For each N: evaluate J_i under the policy profile by moment propagation,
// compute the exact best-response cost against the same frozen opponents,
// tabulate the gap and fit its log-log slope. Centralized kinds re-solve
// the finite-N law per row; the decentralized kind reuses `limit`.
NashGapReport nash_gap_study(const ModelParams& p, const TimeGrid& grid,
                             const std::vector<int>& Ns, PolicyKind kind,
                             const LimitSolution& limit);

}  // namespace lqmfg
