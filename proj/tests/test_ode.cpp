#include <cmath>

#include "doctest.h"
#include "lqmfg/ode.hpp"
#include "test_support.hpp"

using namespace lqmfg;
using Eigen::MatrixXd;

TEST_CASE("lattice RK4 reproduces the exponential to fourth order") {
  // dy/dt = -y, y(T) = 1, integrated backward: y(t) = exp(T - t).
  const auto rhs = [](int, const BlockState& y) {
    BlockState d(1);
    d[0] = -y[0];
    return d;
  };
  BlockState terminal(1);
  terminal[0] = MatrixXd::Constant(1, 1, 1.0);

  double prev_err = 0.0;
  for (int M : {20, 40, 80}) {
    const TimeGrid grid{2.0, M};
    const LatticeSolution sol = integrate_backward(grid, rhs, terminal, 1e8);
    REQUIRE(sol.ok());
    double err = 0.0;
    for (int j = 0; j < grid.samples(); ++j) {
      const double t = grid.sample_time(j);
      err = std::max(err,
                     std::abs(sol.samples[j][0](0, 0) - std::exp(2.0 - t)));
    }
    if (prev_err > 0.0) {
      const double order = std::log2(prev_err / err);
      CHECK(order > 3.5);  // half-step samples included via dense output
    }
    prev_err = err;
  }
}

TEST_CASE("forward and backward integration agree on a linear system") {
  const auto rhs = [](int, const BlockState& y) {
    BlockState d(1);
    MatrixXd A(2, 2);
    A << 0.0, 1.0, -1.0, 0.0;
    d[0] = A * y[0];
    return d;
  };
  const TimeGrid grid{1.0, 50};
  BlockState init(1);
  init[0] = MatrixXd::Identity(2, 2);
  const LatticeSolution fwd = integrate_forward(grid, rhs, init, 1e8);
  REQUIRE(fwd.ok());
  BlockState terminal(1);
  terminal[0] = fwd.samples[grid.samples() - 1][0];
  const LatticeSolution bwd = integrate_backward(grid, rhs, terminal, 1e8);
  REQUIRE(bwd.ok());
  CHECK((bwd.samples[0][0] - MatrixXd::Identity(2, 2)).norm() < 1e-10);
}

TEST_CASE("blow-up guard reports the escape time") {
  // dy/dt = -y^2 backward from y(T) = 1 blows up at t = T - 1.
  const auto rhs = [](int, const BlockState& y) {
    BlockState d(1);
    d[0] = -(y[0] * y[0]);
    return d;
  };
  BlockState terminal(1);
  terminal[0] = MatrixXd::Constant(1, 1, 1.0);
  const TimeGrid grid{2.0, 400};
  const LatticeSolution sol = integrate_backward(grid, rhs, terminal, 1e8);
  REQUIRE(!sol.ok());
  CHECK(sol.blowup->time == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("log-log fit recovers a planted slope") {
  std::vector<double> x, y;
  for (double n : {2.0, 4.0, 8.0, 16.0}) {
    x.push_back(n);
    y.push_back(3.0 / n);
  }
  const SlopeFit fit = fit_loglog(x, y);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(!fit.exact);

  const SlopeFit flat = fit_loglog(x, {0.0, 0.0, 0.0, 0.0});
  CHECK(flat.exact);
}
