#include <cmath>

#include "doctest.h"
#include "lqmfg/riccati_limit.hpp"
#include "test_support.hpp"

using namespace lqmfg;
using namespace testsupport;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double sup_norm(const MatPath& a) {
  double sup = 0.0;
  for (int k = 0; k < a.nodes(); ++k) sup = std::max(sup, a.node(k).norm());
  return sup;
}

double sup_norm(const VecPath& a) {
  double sup = 0.0;
  for (int k = 0; k < a.nodes(); ++k) sup = std::max(sup, a.node(k).norm());
  return sup;
}

}  // namespace

TEST_CASE("decoupled scalar limit equation has the tanh closed form") {
  ModelParams p = benchmark();
  p.A = scalar(0.0);
  p.G = scalar(0.0);
  p.Gamma = scalar(0.0);
  p.Gammaf = scalar(0.0);
  p.Qf = scalar(0.0);
  const TimeGrid grid = benchmark_grid(200);
  const auto sol = solve_limit(p, grid);
  REQUIRE(sol.ok());
  for (int k = 0; k <= grid.M; ++k) {
    const double expected = std::tanh(p.T - grid.node_time(k));
    CHECK(std::abs(sol->P1.node(k)(0, 0) - expected) < 1e-8);
  }
  CHECK(sup_norm(sol->P2) == 0.0);
}

TEST_CASE("no coupling kills P2 and the mean-field gain") {
  ModelParams p = benchmark();
  p.G = scalar(0.0);
  p.Gamma = scalar(0.0);
  p.Gammaf = scalar(0.0);
  const TimeGrid grid = benchmark_grid(100);
  const auto sol = solve_limit(p, grid);
  REQUIRE(sol.ok());
  CHECK(sup_norm(sol->P2) == 0.0);
  CHECK(sup_norm(sol->K2) == 0.0);
  // xbar then solves the closed single-agent mean dynamics
  // dx/dt = (A - Y P1) x - Y s1; cross-checked by step halving.
  const auto fine = solve_limit(p, benchmark_grid(400));
  REQUIRE(fine.ok());
  double gap = 0.0;
  for (int k = 0; k <= grid.M; ++k)
    gap = std::max(gap,
                   (sol->xbar.node(k) - fine->xbar.node(4 * k)).norm());
  CHECK(gap < 1e-6);
}

TEST_CASE("zero offsets give zero affine trajectories") {
  ModelParams p = benchmark();
  p.eta = scalar_vec(0.0);
  p.etaf = scalar_vec(0.0);
  const auto sol = solve_limit(p, benchmark_grid(100));
  REQUIRE(sol.ok());
  CHECK(sup_norm(sol->s1) == 0.0);
  CHECK(sup_norm(sol->phi1) == 0.0);
  CHECK(sup_norm(sol->s2_open) == 0.0);
  CHECK(sup_norm(sol->s2_closed) == 0.0);
}

TEST_CASE("open and closed auxiliary offsets both vanish without targets") {
  ModelParams p = benchmark();
  p.Gamma = scalar(0.0);
  p.eta = scalar_vec(0.0);
  p.etaf = scalar_vec(0.0);
  const auto sol = solve_limit(p, benchmark_grid(100));
  REQUIRE(sol.ok());
  CHECK(sup_norm(sol->s2_open) == 0.0);
  CHECK(sup_norm(sol->s2_closed) == 0.0);
}

TEST_CASE("P1 is monotone in the terminal weight for scalar problems") {
  ModelParams lo = benchmark();
  lo.Qf = scalar(0.0);
  ModelParams hi = benchmark();
  hi.Qf = scalar(1.0);
  const TimeGrid grid = benchmark_grid(100);
  const auto a = solve_limit(lo, grid);
  const auto b = solve_limit(hi, grid);
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  for (int k = 0; k <= grid.M; ++k)
    CHECK(b->P1.node(k)(0, 0) >= a->P1.node(k)(0, 0) - 1e-12);
}

TEST_CASE("limit gains match a naive product and stay symmetric where due") {
  const ModelParams p = benchmark();
  const TimeGrid grid = benchmark_grid(100);
  const auto sol = solve_limit(p, grid);
  REQUIRE(sol.ok());
  const MatrixXd RinvBt = gain_factor(p);
  for (int k = 0; k <= grid.M; k += 10) {
    const MatrixXd expected = -naive_matmul(RinvBt, sol->P1.node(k));
    CHECK((sol->K1.node(k) - expected).norm() < 1e-13);
    CHECK((sol->P1.node(k) - sol->P1.node(k).transpose()).norm() <
          1e-8 * (1.0 + sol->P1.node(k).norm()));
  }
  CHECK(sol->xbar.node(0)(0) == p.x0_mean(0));
}

TEST_CASE("step halving is fourth order on all eight limit trajectories") {
  const ModelParams p = benchmark();
  const auto coarse = solve_limit(p, benchmark_grid(50));
  const auto mid = solve_limit(p, benchmark_grid(100));
  const auto fine = solve_limit(p, benchmark_grid(200));
  REQUIRE(coarse.ok());
  REQUIRE(mid.ok());
  REQUIRE(fine.ok());

  // Errors measured against the finest solve at the shared coarse nodes.
  const auto order_of = [&](auto&& node_at) {
    double e1 = 0.0, e2 = 0.0;
    for (int k = 0; k <= 50; ++k) {
      e1 = std::max(e1,
                    (node_at(*coarse, k) - node_at(*fine, 4 * k)).norm());
      e2 = std::max(e2,
                    (node_at(*mid, 2 * k) - node_at(*fine, 4 * k)).norm());
    }
    return std::log2(e1 / e2);
  };

  const auto check_mat = [&](const MatPath LimitSolution::*field) {
    const double order =
        order_of([&](const LimitSolution& s, int k) -> MatrixXd {
          return (s.*field).node(k);
        });
    CHECK(order > 3.5);
  };
  const auto check_vec = [&](const VecPath LimitSolution::*field) {
    const double order =
        order_of([&](const LimitSolution& s, int k) -> MatrixXd {
          return (s.*field).node(k);
        });
    CHECK(order > 3.5);
  };

  check_mat(&LimitSolution::P1);
  check_mat(&LimitSolution::P2);
  check_vec(&LimitSolution::s1);
  check_mat(&LimitSolution::P3_open);
  check_mat(&LimitSolution::P4_open);
  check_vec(&LimitSolution::s2_open);
  check_mat(&LimitSolution::P3_closed);
  check_vec(&LimitSolution::s2_closed);
}

TEST_CASE("limit blow-up reports non-solvability with an escape time") {
  ModelParams p = benchmark();
  p.Q = scalar(-100.0);
  p.T = 5.0;
  const auto sol = solve_limit(p, TimeGrid{5.0, 500});
  REQUIRE(!sol.ok());
  CHECK(sol.blowup->time > 0.0);
  CHECK(sol.blowup->time < 5.0);
}
