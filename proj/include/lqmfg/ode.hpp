#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "lqmfg/time_grid.hpp"

namespace lqmfg {

// State of a coupled matrix-valued ODE system: an ordered list of blocks.
// Vector blocks are carried as n x 1 matrices.
using BlockState = std::vector<Eigen::MatrixXd>;

struct BlowUp {
  double time = 0.0;  // escape time: first lattice time where the guard trips
  double norm = 0.0;
};

double max_block_norm(const BlockState& y);
bool blocks_finite(const BlockState& y);

// Derivative of the state at lattice sample j (0..2M). Index-based so that
// time-varying coefficients can be read off stored half-step lattices
// exactly, with no floating-point time lookup.
using LatticeRhs = std::function<BlockState(int, const BlockState&)>;

// Optional adjustment applied to every stored sample (e.g. re-symmetrize).
using SampleHook = std::function<void(BlockState&)>;

struct LatticeSolution {
  std::vector<BlockState> samples;  // size 2M+1 when ok
  std::optional<BlowUp> blowup;
  bool ok() const { return !blowup.has_value(); }
};

// Classical fixed-step RK4 from node M down to node 0 (terminal condition at
// t = T). Stage evaluations land on the half-step lattice; half-step samples
// of the solution itself are filled by the 4th-order cubic Hermite dense
// output, so consumers reading half(k) keep full RK4 accuracy. Integration
// stops and reports a BlowUp when any block norm exceeds norm_cap or turns
// non-finite; this is a legitimate outcome for indefinite state weights,
// never a silent NaN.
LatticeSolution integrate_backward(const TimeGrid& grid, const LatticeRhs& rhs,
                                   BlockState terminal, double norm_cap,
                                   const SampleHook& hook = nullptr);

// Same scheme from node 0 up to node M (initial condition at t = 0).
LatticeSolution integrate_forward(const TimeGrid& grid, const LatticeRhs& rhs,
                                  BlockState initial, double norm_cap,
                                  const SampleHook& hook = nullptr);

// Least-squares fit of log(y) against log(x). Used for convergence-rate
// verdicts; `exact` marks tables whose gaps vanish to round-off, where a
// log fit is meaningless.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  bool exact = false;
  int points = 0;
};

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                    double exact_floor = 1e-10);

}  // namespace lqmfg
