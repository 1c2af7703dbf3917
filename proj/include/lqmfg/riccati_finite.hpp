#pragma once

#include <optional>

#include "lqmfg/model.hpp"
#include "lqmfg/ode.hpp"
#include "lqmfg/path.hpp"

namespace lqmfg {

// Outcome wrapper for solves that can legitimately fail in finite time.
template <class T>
struct Solved {
  std::optional<T> value;
  std::optional<BlowUp> blowup;

  bool ok() const { return value.has_value(); }
  const T& operator*() const { return *value; }
  const T* operator->() const { return &*value; }
};

// Finite-N open-loop Riccati/offset system: four matrix trajectories and two
// offset vectors, integrated backward from the terminal conditions. P1 is in
// general not symmetric for N > 1 (the coupling blocks are not).
struct OpenLoopFiniteSolution {
  int N = 1;
  TimeGrid grid;
  MatPath P1, P2, P3, P4;
  VecPath s1, s2;
};

// Finite-N closed-loop system in its reduced three-matrix form (the fourth
// block equals P2^T identically and is not carried). P1 and P3 stay
// symmetric; they are re-symmetrized after every step and the largest drift
// encountered is recorded.
struct ClosedLoopFiniteSolution {
  int N = 1;
  TimeGrid grid;
  MatPath P1, P2, P3;
  VecPath s1, s2;
  double max_symmetry_drift = 0.0;
};

enum class LawKind { OpenLoopFinite, ClosedLoopFinite, Limit };

// Time-varying affine control law u_i = K1 x_i + sum_j K2 x_j + v
// (centralized kinds) or u_i = K1 x_i + K2 xbar + v (limit kind).
struct FeedbackLaw {
  TimeGrid grid;
  LawKind provenance = LawKind::Limit;
  int N = 0;  // 0 for the limit law
  MatPath K1, K2;  // m x n
  VecPath v;       // m
};

constexpr double kRiccatiNormCap = 1e8;

Solved<OpenLoopFiniteSolution> solve_open_loop(const ModelParams& p, int N,
                                               const TimeGrid& grid);
Solved<ClosedLoopFiniteSolution> solve_closed_loop(const ModelParams& p, int N,
                                                   const TimeGrid& grid);

FeedbackLaw open_loop_gains(const OpenLoopFiniteSolution& sol,
                            const ModelParams& p);
FeedbackLaw closed_loop_gains(const ClosedLoopFiniteSolution& sol,
                              const ModelParams& p);

// Verdict on the variational convexity condition: the quadratic form in one
// player's control, assembled on the grid (dimension M*m) by propagating a
// basis impulse through the perturbation dynamics and accumulating the
// state/control weights by trapezoidal quadrature.
struct ConvexityReport {
  double min_eigenvalue = 0.0;
  double form_norm = 0.0;   // Frobenius norm of the assembled form
  double tolerance = 0.0;   // 1e-8 * (1 + form_norm)
  int dim = 0;              // M * m
  bool convex = false;
  Eigen::MatrixXd form;     // the assembled symmetric form (dim x dim)
};

// Throws std::runtime_error("discretization too large") when M*m exceeds
// dim_cap.
ConvexityReport check_convexity(const ModelParams& p, int N,
                                const TimeGrid& grid, int dim_cap = 600);

}  // namespace lqmfg
