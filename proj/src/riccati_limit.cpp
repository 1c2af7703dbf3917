#include "lqmfg/riccati_limit.hpp"

#include <stdexcept>

namespace lqmfg {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum Block {
  kP1 = 0,
  kP2,
  kS1,
  kP3Open,
  kP4Open,
  kS2Open,
  kP3Closed,
  kS2Closed,
  kBlockCount
};

}  // namespace

Solved<LimitSolution> solve_limit(const ModelParams& p, const TimeGrid& grid) {
  require_valid(p);
  const MatrixXd Y = control_gram(p);
  const MatrixXd& A = p.A;
  const MatrixXd& G = p.G;
  const MatrixXd AG = A + G;
  const MatrixXd GtQ = p.Gamma.transpose() * p.Q;
  const MatrixXd GtQG = p.Gamma.transpose() * p.Q * p.Gamma;
  const MatrixXd QG = p.Q * p.Gamma;
  const VectorXd Qe = p.Q * p.eta;
  const VectorXd GtQe = GtQ * p.eta;

  // One coupled backward pass: the standard Riccati equation (P1), the
  // asymmetric one (P2, integrated without symmetrization), the offset s1,
  // and the linear auxiliary limits of both rescalings.
  const auto rhs = [&](int, const BlockState& y) {
    const MatrixXd& P1 = y[kP1];
    const MatrixXd& P2 = y[kP2];
    const MatrixXd& s1 = y[kS1];
    const MatrixXd& Pc3 = y[kP3Open];
    const MatrixXd& Pc4 = y[kP4Open];
    const MatrixXd& sc2 = y[kS2Open];
    const MatrixXd& Ph3 = y[kP3Closed];
    const MatrixXd& sh2 = y[kS2Closed];
    BlockState d(kBlockCount);
    d[kP1] = P1 * Y * P1 - P1 * A - A.transpose() * P1 - p.Q;
    d[kP2] = P1 * Y * P2 + P2 * Y * P1 + P2 * Y * P2 - A.transpose() * P2 -
             P2 * AG - P1 * G + QG;
    d[kS1] = -(A.transpose() - P1 * Y - P2 * Y) * s1 + Qe;
    d[kP3Open] = Pc4 * Y * P2 + Pc3 * Y * P1 + Pc3 * Y * P2 - Pc4 * G -
                 G.transpose() * P2 - Pc3 * AG - AG.transpose() * Pc3 - GtQG;
    d[kP4Open] = Pc4 * Y * P1 - Pc4 * A - AG.transpose() * Pc4 -
                 G.transpose() * P1 + GtQ;
    d[kS2Open] = -(G.transpose() - Pc4 * Y - Pc3 * Y) * s1 -
                 AG.transpose() * sc2 - GtQe;
    d[kP3Closed] = P2.transpose() * Y * P2 + Ph3 * Y * (P1 + P2) +
                   (P1 + P2.transpose()) * Y * Ph3 - Ph3 * AG -
                   AG.transpose() * Ph3 - P2.transpose() * G -
                   G.transpose() * P2 - GtQG;
    d[kS2Closed] = -(AG - Y * P1 - Y * P2).transpose() * sh2 -
                   (G - Y * P2 - Y * Ph3).transpose() * s1 - GtQe;
    return d;
  };

  const MatrixXd GftQf = p.Gammaf.transpose() * p.Qf;
  const MatrixXd GftQfGf = p.Gammaf.transpose() * p.Qf * p.Gammaf;
  BlockState terminal(kBlockCount);
  terminal[kP1] = p.Qf;
  terminal[kP2] = -p.Qf * p.Gammaf;
  terminal[kS1] = -p.Qf * p.etaf;
  terminal[kP3Open] = GftQfGf;
  terminal[kP4Open] = -GftQf;
  terminal[kS2Open] = GftQf * p.etaf;
  terminal[kP3Closed] = GftQfGf;
  terminal[kS2Closed] = GftQf * p.etaf;

  LatticeSolution raw =
      integrate_backward(grid, rhs, std::move(terminal), kRiccatiNormCap);
  Solved<LimitSolution> out;
  if (!raw.ok()) {
    out.blowup = raw.blowup;
    return out;
  }

  LimitSolution sol;
  sol.grid = grid;
  sol.P1 = MatPath(grid, MatrixXd{});
  sol.P2 = MatPath(grid, MatrixXd{});
  sol.P3_open = MatPath(grid, MatrixXd{});
  sol.P4_open = MatPath(grid, MatrixXd{});
  sol.P3_closed = MatPath(grid, MatrixXd{});
  sol.s1 = VecPath(grid, VectorXd{});
  sol.s2_open = VecPath(grid, VectorXd{});
  sol.s2_closed = VecPath(grid, VectorXd{});
  sol.K1 = MatPath(grid, MatrixXd{});
  sol.K2 = MatPath(grid, MatrixXd{});
  sol.phi1 = VecPath(grid, VectorXd{});
  const MatrixXd RinvBt = gain_factor(p);
  for (int j = 0; j < grid.samples(); ++j) {
    const BlockState& y = raw.samples[j];
    sol.P1.sample(j) = y[kP1];
    sol.P2.sample(j) = y[kP2];
    sol.s1.sample(j) = y[kS1].col(0);
    sol.P3_open.sample(j) = y[kP3Open];
    sol.P4_open.sample(j) = y[kP4Open];
    sol.s2_open.sample(j) = y[kS2Open].col(0);
    sol.P3_closed.sample(j) = y[kP3Closed];
    sol.s2_closed.sample(j) = y[kS2Closed].col(0);
    sol.K1.sample(j) = -RinvBt * y[kP1];
    sol.K2.sample(j) = -RinvBt * y[kP2];
    sol.phi1.sample(j) = -RinvBt * y[kS1].col(0);
  }

  // Mean field, forward from the common initial mean under the decentralized
  // closed dynamics. The gain coefficients are read off the backward lattice
  // at the exact stage samples.
  const auto mf_rhs = [&](int j, const BlockState& y) {
    const BlockState& bw = raw.samples[j];
    BlockState d(1);
    d[0] = AG * y[0] - Y * ((bw[kP1] + bw[kP2]) * y[0]) - Y * bw[kS1];
    return d;
  };
  BlockState x0(1);
  x0[0] = p.x0_mean;
  LatticeSolution mf =
      integrate_forward(grid, mf_rhs, std::move(x0), kRiccatiNormCap);
  if (!mf.ok()) {
    out.blowup = mf.blowup;
    return out;
  }
  sol.xbar = VecPath(grid, VectorXd{});
  for (int j = 0; j < grid.samples(); ++j)
    sol.xbar.sample(j) = mf.samples[j][0].col(0);

  out.value = std::move(sol);
  return out;
}

FeedbackLaw limit_law(const LimitSolution& sol) {
  FeedbackLaw law;
  law.grid = sol.grid;
  law.provenance = LawKind::Limit;
  law.N = 0;
  law.K1 = sol.K1;
  law.K2 = sol.K2;
  law.v = sol.phi1;
  return law;
}

}  // namespace lqmfg
