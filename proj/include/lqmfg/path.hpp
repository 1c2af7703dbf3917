#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lqmfg/time_grid.hpp"

namespace lqmfg {

// Time-sampled trajectory on the half-step lattice of a TimeGrid.
// node(k) is the value at t_k = k*dt, half(k) the value at t_k + dt/2.
template <class V>
class Path {
 public:
  Path() = default;
  Path(const TimeGrid& grid, const V& fill)
      : grid_(grid), samples_(grid.samples(), fill) {}

  const TimeGrid& grid() const { return grid_; }
  int nodes() const { return grid_.nodes(); }
  int samples() const { return grid_.samples(); }

  V& sample(int j) { return samples_[j]; }
  const V& sample(int j) const { return samples_[j]; }
  V& node(int k) { return samples_[2 * k]; }
  const V& node(int k) const { return samples_[2 * k]; }
  V& half(int k) { return samples_[2 * k + 1]; }
  const V& half(int k) const { return samples_[2 * k + 1]; }

 private:
  TimeGrid grid_;
  std::vector<V> samples_;
};

using MatPath = Path<Eigen::MatrixXd>;
using VecPath = Path<Eigen::VectorXd>;

}  // namespace lqmfg
