#pragma once

namespace lqmfg {

// Uniform partition of [0, T] into M steps. Every solver and the simulator
// share one grid, so trajectories from different pipelines can be compared
// node by node without interpolation. Sampled data lives on the half-step
// lattice (2M+1 samples): integrators read stage values at t + dt/2 directly
// instead of interpolating.
struct TimeGrid {
  double T = 1.0;
  int M = 1;

  double dt() const { return T / M; }
  int nodes() const { return M + 1; }
  int samples() const { return 2 * M + 1; }
  double node_time(int k) const { return (T * k) / M; }
  double sample_time(int j) const { return (T * j) / (2.0 * M); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

}  // namespace lqmfg
