#include "lqmfg/asymptotics.hpp"

#include <algorithm>
#include <stdexcept>

#include "lqmfg/parallel.hpp"

namespace lqmfg {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatPath scaled(const MatPath& src, double factor) {
  MatPath out = src;
  for (int j = 0; j < out.samples(); ++j) out.sample(j) *= factor;
  return out;
}

VecPath scaled(const VecPath& src, double factor) {
  VecPath out = src;
  for (int j = 0; j < out.samples(); ++j) out.sample(j) *= factor;
  return out;
}

double sup_node_gap(const MatPath& a, const MatPath& b) {
  double sup = 0.0;
  for (int k = 0; k < a.nodes(); ++k)
    sup = std::max(sup, (a.node(k) - b.node(k)).norm());
  return sup;
}

double sup_node_gap(const VecPath& a, const VecPath& b) {
  double sup = 0.0;
  for (int k = 0; k < a.nodes(); ++k)
    sup = std::max(sup, (a.node(k) - b.node(k)).norm());
  return sup;
}

// sup over nodes of the summed gaps, the form the estimates are stated in.
template <class... Pairs>
double sup_summed(int nodes, const Pairs&... pairs) {
  double sup = 0.0;
  for (int k = 0; k < nodes; ++k) {
    double total = 0.0;
    ((total += (pairs.first.node(k) - pairs.second.node(k)).norm()), ...);
    sup = std::max(sup, total);
  }
  return sup;
}

void check_sorted(const std::vector<int>& Ns) {
  if (Ns.empty()) throw std::invalid_argument("empty N list");
  for (std::size_t i = 1; i < Ns.size(); ++i)
    if (Ns[i] <= Ns[i - 1])
      throw std::invalid_argument("Ns must be strictly increasing");
}

void finish_fits(ConvergenceTable& table, bool has_group2) {
  std::vector<double> ns, g1, g2;
  for (const auto& row : table.rows) {
    if (!row.solvable) continue;
    ns.push_back(static_cast<double>(row.N));
    g1.push_back(row.group1);
    g2.push_back(row.group2);
  }
  table.fit1 = fit_loglog(ns, g1);
  if (has_group2) table.fit2 = fit_loglog(ns, g2);
}

}  // namespace

RescaledFamily rescale(const OpenLoopFiniteSolution& sol) {
  const double N = static_cast<double>(sol.N);
  RescaledFamily fam;
  fam.N = sol.N;
  fam.grid = sol.grid;
  fam.kind = EquilibriumKind::OpenLoop;
  fam.L1 = sol.P1;
  fam.L2 = scaled(sol.P2, N);
  fam.L3 = scaled(sol.P3, N * N);
  fam.L4 = scaled(sol.P4, N);
  fam.phi1 = sol.s1;
  fam.phi2 = scaled(sol.s2, N);
  return fam;
}

RescaledFamily rescale(const ClosedLoopFiniteSolution& sol) {
  const double N = static_cast<double>(sol.N);
  RescaledFamily fam;
  fam.N = sol.N;
  fam.grid = sol.grid;
  fam.kind = EquilibriumKind::ClosedLoop;
  fam.L1 = sol.P1;
  fam.L2 = scaled(sol.P2, N);
  fam.L3 = scaled(sol.P3, N * N);
  fam.phi1 = sol.s1;
  fam.phi2 = scaled(sol.s2, N);
  return fam;
}

ConvergenceTable convergence_study(const ModelParams& p, const TimeGrid& grid,
                                   const std::vector<int>& Ns,
                                   EquilibriumKind kind,
                                   const LimitSolution& limit) {
  check_sorted(Ns);
  ConvergenceTable table;
  table.kind = kind;
  table.rows.resize(Ns.size());

  parallel_for(static_cast<int>(Ns.size()), 0, [&](int i) {
    const int N = Ns[i];
    ConvergenceRow row;
    row.N = N;
    if (kind == EquilibriumKind::OpenLoop) {
      auto sol = solve_open_loop(p, N, grid);
      if (!sol.ok()) {
        row.solvable = false;
        row.escape_time = sol.blowup->time;
      } else {
        const RescaledFamily f = rescale(*sol);
        row.group1 = sup_summed(grid.nodes(), std::pair{f.L1, limit.P1},
                                std::pair{f.L2, limit.P2},
                                std::pair{f.phi1, limit.s1});
        row.group2 = sup_summed(grid.nodes(), std::pair{f.L3, limit.P3_open},
                                std::pair{*f.L4, limit.P4_open},
                                std::pair{f.phi2, limit.s2_open});
        row.per_quantity = {
            {"P1", sup_node_gap(f.L1, limit.P1)},
            {"P2", sup_node_gap(f.L2, limit.P2)},
            {"s1", sup_node_gap(f.phi1, limit.s1)},
            {"P3", sup_node_gap(f.L3, limit.P3_open)},
            {"P4", sup_node_gap(*f.L4, limit.P4_open)},
            {"s2", sup_node_gap(f.phi2, limit.s2_open)},
        };
      }
    } else {
      auto sol = solve_closed_loop(p, N, grid);
      if (!sol.ok()) {
        row.solvable = false;
        row.escape_time = sol.blowup->time;
      } else {
        const RescaledFamily f = rescale(*sol);
        row.group1 = sup_summed(grid.nodes(), std::pair{f.L1, limit.P1},
                                std::pair{f.L2, limit.P2},
                                std::pair{f.phi1, limit.s1});
        row.group2 = sup_summed(grid.nodes(), std::pair{f.L3, limit.P3_closed},
                                std::pair{f.phi2, limit.s2_closed});
        row.per_quantity = {
            {"P1", sup_node_gap(f.L1, limit.P1)},
            {"P2", sup_node_gap(f.L2, limit.P2)},
            {"s1", sup_node_gap(f.phi1, limit.s1)},
            {"P3", sup_node_gap(f.L3, limit.P3_closed)},
            {"s2", sup_node_gap(f.phi2, limit.s2_closed)},
        };
      }
    }
    table.rows[i] = std::move(row);
  });

  finish_fits(table, /*has_group2=*/true);
  return table;
}

ConvergenceTable gain_convergence(const ModelParams& p, const TimeGrid& grid,
                                  const std::vector<int>& Ns,
                                  EquilibriumKind kind,
                                  const LimitSolution& limit) {
  check_sorted(Ns);
  ConvergenceTable table;
  table.kind = kind;
  table.rows.resize(Ns.size());

  parallel_for(static_cast<int>(Ns.size()), 0, [&](int i) {
    const int N = Ns[i];
    ConvergenceRow row;
    row.N = N;
    FeedbackLaw law;
    bool ok = true;
    if (kind == EquilibriumKind::OpenLoop) {
      auto sol = solve_open_loop(p, N, grid);
      ok = sol.ok();
      if (ok)
        law = open_loop_gains(*sol, p);
      else
        row.escape_time = sol.blowup->time;
    } else {
      auto sol = solve_closed_loop(p, N, grid);
      ok = sol.ok();
      if (ok)
        law = closed_loop_gains(*sol, p);
      else
        row.escape_time = sol.blowup->time;
    }
    if (!ok) {
      row.solvable = false;
    } else {
      const MatPath K2scaled = scaled(law.K2, static_cast<double>(N));
      row.group1 = sup_summed(grid.nodes(), std::pair{law.K1, limit.K1},
                              std::pair{K2scaled, limit.K2},
                              std::pair{law.v, limit.phi1});
      row.per_quantity = {
          {"K1", sup_node_gap(law.K1, limit.K1)},
          {"NK2", sup_node_gap(K2scaled, limit.K2)},
          {"v", sup_node_gap(law.v, limit.phi1)},
      };
    }
    table.rows[i] = std::move(row);
  });

  finish_fits(table, /*has_group2=*/false);
  return table;
}

}  // namespace lqmfg
