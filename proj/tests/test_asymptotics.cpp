#include <cmath>

#include "doctest.h"
#include "lqmfg/asymptotics.hpp"
#include "test_support.hpp"

using namespace lqmfg;
using namespace testsupport;
using Eigen::MatrixXd;

namespace {

const std::vector<int> kStudyNs{2, 4, 8, 16, 32, 64};

}  // namespace

TEST_CASE("rescaling is the stated family of exact multiples") {
  const ModelParams p = benchmark();
  const TimeGrid grid = benchmark_grid(50);

  SUBCASE("N = 1 leaves the coupling blocks untouched") {
    const auto sol = solve_open_loop(p, 1, grid);
    REQUIRE(sol.ok());
    const RescaledFamily fam = rescale(*sol);
    for (int k = 0; k <= grid.M; ++k) {
      CHECK(fam.L2.node(k) == sol->P2.node(k));
      CHECK(fam.phi2.node(k) == sol->s2.node(k));
    }
  }

  SUBCASE("zero solutions rescale to zero") {
    ModelParams q = p;
    q.Q = scalar(0.0);
    q.Qf = scalar(0.0);
    const auto sol = solve_open_loop(q, 8, grid);
    REQUIRE(sol.ok());
    const RescaledFamily fam = rescale(*sol);
    for (int k = 0; k <= grid.M; ++k) {
      CHECK(fam.L3.node(k).norm() == 0.0);
      CHECK(fam.phi1.node(k).norm() == 0.0);
    }
  }

  SUBCASE("N = 8 third block is 64 P3 entry-wise and inverts bit-for-bit") {
    const auto sol = solve_open_loop(p, 8, grid);
    REQUIRE(sol.ok());
    const RescaledFamily fam = rescale(*sol);
    for (int k = 0; k <= grid.M; ++k) {
      CHECK(fam.L3.node(k)(0, 0) == 64.0 * sol->P3.node(k)(0, 0));
      // powers of two invert exactly in binary floating point
      CHECK(fam.L3.node(k)(0, 0) / 64.0 == sol->P3.node(k)(0, 0));
      CHECK(fam.L2.node(k)(0, 0) / 8.0 == sol->P2.node(k)(0, 0));
      CHECK(fam.phi2.node(k)(0) / 8.0 == sol->s2.node(k)(0));
    }
  }
}

TEST_CASE("benchmark convergence study realizes the 1/N rate") {
  const ModelParams p = benchmark();
  const TimeGrid grid = benchmark_grid(200);
  const auto limit = solve_limit(p, grid);
  REQUIRE(limit.ok());

  const ConvergenceTable open =
      convergence_study(p, grid, kStudyNs, EquilibriumKind::OpenLoop, *limit);
  const ConvergenceTable closed = convergence_study(
      p, grid, kStudyNs, EquilibriumKind::ClosedLoop, *limit);

  for (const ConvergenceTable* t : {&open, &closed}) {
    CHECK(t->fit1.slope > -1.25);
    CHECK(t->fit1.slope < -0.75);
    CHECK(t->fit1.r2 >= 0.98);
    CHECK(t->fit2.slope > -1.25);
    CHECK(t->fit2.slope < -0.75);
    CHECK(t->fit2.r2 >= 0.98);
    for (const auto& row : t->rows) {
      CHECK(row.solvable);
      CHECK(row.group1 >= 0.0);
      CHECK(row.group2 >= 0.0);
    }
  }
  // regression anchors from the first M=200 run
  CHECK(open.fit1.slope == doctest::Approx(-0.98087).epsilon(1e-3));
  CHECK(open.fit2.slope == doctest::Approx(-1.01232).epsilon(1e-3));
  CHECK(closed.fit2.slope == doctest::Approx(-1.0475).epsilon(1e-3));

  // both pipelines converge to the same group-1 limit, so their gaps agree
  // within a factor of two at every N
  for (std::size_t i = 0; i < kStudyNs.size(); ++i) {
    const double a = open.rows[i].group1;
    const double b = closed.rows[i].group1;
    CHECK(a <= 2.0 * b);
    CHECK(b <= 2.0 * a);
  }

  // tail monotonicity of the group-1 gaps (one inversion allowed below N=4)
  for (std::size_t i = 2; i + 1 < kStudyNs.size(); ++i)
    CHECK(open.rows[i + 1].group1 <= open.rows[i].group1 + 1e-12);
}

TEST_CASE("decoupled models converge exactly and skip the fit") {
  ModelParams p = benchmark();
  p.G = scalar(0.0);
  p.Gamma = scalar(0.0);
  p.Gammaf = scalar(0.0);
  const TimeGrid grid = benchmark_grid(100);
  const auto limit = solve_limit(p, grid);
  REQUIRE(limit.ok());
  const ConvergenceTable t =
      convergence_study(p, grid, kStudyNs, EquilibriumKind::OpenLoop, *limit);
  for (const auto& row : t.rows) {
    CHECK(row.group1 <= 1e-10);
    CHECK(row.group2 <= 1e-10);
  }
  CHECK(t.fit1.exact);
  CHECK(t.fit2.exact);
}

TEST_CASE("gain convergence matches the study rate for both kinds") {
  const ModelParams p = benchmark();
  const TimeGrid grid = benchmark_grid(200);
  const auto limit = solve_limit(p, grid);
  REQUIRE(limit.ok());
  for (auto kind : {EquilibriumKind::OpenLoop, EquilibriumKind::ClosedLoop}) {
    const ConvergenceTable t =
        gain_convergence(p, grid, kStudyNs, kind, *limit);
    CHECK(t.fit1.slope > -1.25);
    CHECK(t.fit1.slope < -0.75);
    CHECK(t.fit1.r2 >= 0.98);
  }

  ModelParams dec = p;
  dec.G = scalar(0.0);
  dec.Gamma = scalar(0.0);
  dec.Gammaf = scalar(0.0);
  const auto dec_limit = solve_limit(dec, grid);
  REQUIRE(dec_limit.ok());
  const ConvergenceTable t = gain_convergence(
      dec, grid, kStudyNs, EquilibriumKind::OpenLoop, *dec_limit);
  CHECK(t.fit1.exact);
}

TEST_CASE("non-solvable rows are marked with their escape times") {
  // Strongly negative Q on a horizon where the limit still solves: any
  // finite-N rows that blow up must carry an escape time inside (0, T)
  // instead of failing the whole study.
  ModelParams p = benchmark();
  p.Q = scalar(-3.4);
  p.T = 2.0;
  const TimeGrid grid{2.0, 200};
  const auto limit = solve_limit(p, grid);
  if (!limit.ok()) return;  // nothing to study on this horizon
  const ConvergenceTable t = convergence_study(
      p, grid, {2, 4, 8, 16}, EquilibriumKind::OpenLoop, *limit);
  for (const auto& row : t.rows) {
    if (!row.solvable) {
      CHECK(row.escape_time > 0.0);
      CHECK(row.escape_time < p.T);
    }
  }
}
