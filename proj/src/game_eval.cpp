#include "lqmfg/game_eval.hpp"

#include <cmath>
#include <stdexcept>

namespace lqmfg {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double pairwise_sum(const double* data, int count) {
  if (count <= 4) {
    double s = 0.0;
    for (int i = 0; i < count; ++i) s += data[i];
    return s;
  }
  const int half = count / 2;
  return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

// The world one deviating player lives in: the augmented state is (x_i, z)
// with z the average of the other N-1 states (absent when N = 1). Opponents
// are frozen at an affine strategy; their average control enters the z row.
struct DeviatorWorld {
  int N = 1, n = 0, m = 0, dim = 0;
  MatrixXd base;    // dim x dim drift without any control
  MatrixXd Bdev;    // dim x m deviator control map
  MatrixXd noise;   // dim x dim diffusion covariance rate
  MatrixXd C, Cf;   // n x dim running/terminal deviation maps
  MatrixXd Qbar, Qfbar;  // C'QC, Cf'Qf Cf
  VectorXd qbar, qfbar;  // -C'Q eta, -Cf'Qf etaf
  double cbar = 0.0, cfbar = 0.0;  // eta'Q eta, etaf'Qf etaf
  const AffineStrategy* opp = nullptr;  // null when N = 1

  MatrixXd drift_at(int j) const {
    MatrixXd At = base;
    if (N > 1) {
      At.block(n, 0, n, n) += Bmap * opp->on_own.sample(j);
      At.block(n, n, n, n) += Bmap * opp->on_peer.sample(j);
    }
    return At;
  }
  VectorXd offset_at(int j) const {
    VectorXd b = VectorXd::Zero(dim);
    if (N > 1) b.segment(n, n) = Bmap * opp->offset.sample(j);
    return b;
  }
  MatrixXd Bmap;  // the model's B, kept for the opponent rows
};

DeviatorWorld make_world(const ModelParams& p, int N,
                         const AffineStrategy* opp) {
  DeviatorWorld w;
  w.N = N;
  w.n = p.n();
  w.m = p.m();
  w.dim = N > 1 ? 2 * w.n : w.n;
  w.opp = N > 1 ? opp : nullptr;
  w.Bmap = p.B;
  const double Nr = static_cast<double>(N);

  w.base = MatrixXd::Zero(w.dim, w.dim);
  w.Bdev = MatrixXd::Zero(w.dim, w.m);
  w.noise = MatrixXd::Zero(w.dim, w.dim);
  w.C = MatrixXd::Zero(w.n, w.dim);
  w.Cf = MatrixXd::Zero(w.n, w.dim);
  const MatrixXd I = MatrixXd::Identity(w.n, w.n);
  const MatrixXd sig2 = p.sigma * p.sigma.transpose();

  if (N == 1) {
    w.base = p.A + p.G;
    w.Bdev = p.B;
    w.noise = sig2;
    w.C = I - p.Gamma;
    w.Cf = I - p.Gammaf;
  } else {
    if (!opp) throw std::invalid_argument("opponent strategy required for N > 1");
    w.base.block(0, 0, w.n, w.n) = p.A + p.G / Nr;
    w.base.block(0, w.n, w.n, w.n) = ((Nr - 1.0) / Nr) * p.G;
    w.base.block(w.n, 0, w.n, w.n) = p.G / Nr;
    w.base.block(w.n, w.n, w.n, w.n) = p.A + ((Nr - 1.0) / Nr) * p.G;
    w.Bdev.block(0, 0, w.n, w.m) = p.B;
    w.noise.block(0, 0, w.n, w.n) = sig2;
    w.noise.block(w.n, w.n, w.n, w.n) = sig2 / (Nr - 1.0);
    w.C.block(0, 0, w.n, w.n) = I - p.Gamma / Nr;
    w.C.block(0, w.n, w.n, w.n) = -((Nr - 1.0) / Nr) * p.Gamma;
    w.Cf.block(0, 0, w.n, w.n) = I - p.Gammaf / Nr;
    w.Cf.block(0, w.n, w.n, w.n) = -((Nr - 1.0) / Nr) * p.Gammaf;
  }
  w.Qbar = w.C.transpose() * p.Q * w.C;
  w.Qfbar = w.Cf.transpose() * p.Qf * w.Cf;
  w.qbar = -w.C.transpose() * p.Q * p.eta;
  w.qfbar = -w.Cf.transpose() * p.Qf * p.etaf;
  w.cbar = p.eta.dot(p.Q * p.eta);
  w.cfbar = p.etaf.dot(p.Qf * p.etaf);
  return w;
}

// Initial moments of (x_i, z) under i.i.d. starts: both means are the
// common mean, covariances Sigma0 and Sigma0/(N-1), independent blocks.
void initial_moments(const ModelParams& p, const DeviatorWorld& w,
                     VectorXd& mu0, MatrixXd& cov0) {
  mu0 = VectorXd::Zero(w.dim);
  cov0 = MatrixXd::Zero(w.dim, w.dim);
  mu0.segment(0, w.n) = p.x0_mean;
  cov0.block(0, 0, w.n, w.n) = p.x0_cov;
  if (w.N > 1) {
    mu0.segment(w.n, w.n) = p.x0_mean;
    cov0.block(w.n, w.n, w.n, w.n) = p.x0_cov / (w.N - 1.0);
  }
}

// Gain of the deviator strategy on the augmented state, m x dim.
MatrixXd strategy_gain(const AffineStrategy& s, const DeviatorWorld& w,
                       int j) {
  MatrixXd Psi(w.m, w.dim);
  Psi.block(0, 0, w.m, w.n) = s.on_own.sample(j);
  if (w.N > 1) Psi.block(0, w.n, w.m, w.n) = s.on_peer.sample(j);
  return Psi;
}

AffineStrategy const_strategy(const TimeGrid& grid, const MatrixXd& own,
                              const MatrixXd& peer, const VectorXd& off) {
  AffineStrategy s;
  s.on_own = MatPath(grid, own);
  s.on_peer = MatPath(grid, peer);
  s.offset = VecPath(grid, off);
  return s;
}

}  // namespace

CostEstimate evaluate_cost(const PopulationPaths& paths, const ModelParams& p,
                           int player) {
  if (player < 0 || player >= paths.N)
    throw std::invalid_argument("player index out of range");
  const int R = paths.n_paths;
  std::vector<double> samples(R);
  if (paths.mode == StorageMode::Full) {
    // Recompute the trapezoid from the stored states and controls; an
    // independent route from the simulator's running accumulators.
    const double dt = paths.grid.dt();
    for (int r = 0; r < R; ++r) {
      double cost = 0.0;
      for (int k = 0; k < paths.grid.nodes(); ++k) {
        const Eigen::VectorXd& x = paths.states[r][player][k];
        const Eigen::VectorXd& u = paths.controls[r][player][k];
        const Eigen::VectorXd dev = x - p.Gamma * paths.aggregate[r][k] - p.eta;
        const double w = (k == 0 || k == paths.grid.M) ? 0.5 * dt : dt;
        cost += w * (dev.dot(p.Q * dev) + u.dot(p.R * u));
      }
      const Eigen::VectorXd devf = paths.states[r][player][paths.grid.M] -
                                   p.Gammaf * paths.aggregate[r][paths.grid.M] -
                                   p.etaf;
      samples[r] = cost + devf.dot(p.Qf * devf);
    }
  } else {
    for (int r = 0; r < R; ++r) samples[r] = paths.cost[r][player];
  }
  CostEstimate est;
  est.player = player;
  est.n_paths = R;
  est.mean = pairwise_sum(samples.data(), R) / R;
  if (R > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (R - 1.0) / R);
  }
  return est;
}

double value_function(const ClosedLoopFiniteSolution& sol,
                      const ModelParams& p, int N) {
  require_valid(p);
  if (N != sol.N) throw std::invalid_argument("N differs from the solution");
  const double Nr = static_cast<double>(N);
  const MatrixXd Y = control_gram(p);
  const TimeGrid& grid = sol.grid;

  const MatrixXd& P1_0 = sol.P1.node(0);
  const MatrixXd& P2_0 = sol.P2.node(0);
  const MatrixXd& P3_0 = sol.P3.node(0);
  const VectorXd& s1_0 = sol.s1.node(0);
  const VectorXd& s2_0 = sol.s2.node(0);

  // Initial-state terms from the completed-square identity under
  // independent starts: trace part picks up P1 + (N-1) P3, the mean part
  // keeps the P2/P3 cross terms of the empirical average.
  double v = p.etaf.dot(p.Qf * p.etaf);
  v += ((P1_0 + (Nr - 1.0) * P3_0) * p.x0_cov).trace();
  const MatrixXd mean_weight =
      P1_0 + 2.0 * (Nr - 1.0) * P2_0 + (Nr - 1.0) * (Nr - 1.0) * P3_0;
  v += p.x0_mean.dot(mean_weight * p.x0_mean);
  v += 2.0 * (s1_0 + (Nr - 1.0) * s2_0).dot(p.x0_mean);

  // Running terms: noise injection through P1 + (N-1) P3 and the offset
  // correction, integrated by trapezoid on the grid.
  const double dt = grid.dt();
  double integral = 0.0;
  for (int k = 0; k <= grid.M; ++k) {
    const double w = (k == 0 || k == grid.M) ? 0.5 * dt : dt;
    const MatrixXd& P1 = sol.P1.node(k);
    const MatrixXd& P3 = sol.P3.node(k);
    const VectorXd& s1 = sol.s1.node(k);
    const VectorXd& s2 = sol.s2.node(k);
    double term = p.sigma.dot((P1 + (Nr - 1.0) * P3) * p.sigma);
    term -= (2.0 * (Nr - 1.0) * (Y * s2) + Y * s1).dot(s1);
    term += p.eta.dot(p.Q * p.eta);
    integral += w * term;
  }
  return v + integral;
}

namespace {

CostateReconstruction reconstruct_impl(const MatPath& P1, const MatPath& P2,
                                       const VecPath& s1,
                                       const PopulationPaths& paths,
                                       const ModelParams& p, int player) {
  if (paths.mode != StorageMode::Full)
    throw std::invalid_argument(
        "costate reconstruction requires full path storage");
  if (player < 0 || player >= paths.N)
    throw std::invalid_argument("player index out of range");
  const double Nr = static_cast<double>(paths.N);
  const MatrixXd Bt = p.B.transpose();

  CostateReconstruction rec;
  rec.costate.resize(paths.grid.nodes());
  double scale = 0.0;
  for (int r = 0; r < paths.n_paths; ++r) {
    for (int k = 0; k < paths.grid.nodes(); ++k) {
      const VectorXd& x = paths.states[r][player][k];
      const VectorXd& u = paths.controls[r][player][k];
      const VectorXd& agg = paths.aggregate[r][k];
      const VectorXd costate = (P1.node(k) - P2.node(k)) * x +
                               Nr * (P2.node(k) * agg) + s1.node(k);
      const VectorXd resid = p.R * u + Bt * costate;
      rec.residual =
          std::max(rec.residual, resid.lpNorm<Eigen::Infinity>());
      scale = std::max(scale, (p.R * u).lpNorm<Eigen::Infinity>());
      if (r == 0) rec.costate[k] = costate;
    }
  }
  rec.scale = 1.0 + scale;
  return rec;
}

}  // namespace

CostateReconstruction reconstruct_costate(const OpenLoopFiniteSolution& sol,
                                          const PopulationPaths& paths,
                                          const ModelParams& p, int player,
                                          bool allow_mismatch) {
  if (!(sol.grid == paths.grid) || sol.N != paths.N)
    throw std::invalid_argument("policy/solution mismatch");
  if (!allow_mismatch && paths.policy != PolicyKind::CentralizedOpenLoop)
    throw std::invalid_argument("policy/solution mismatch");
  return reconstruct_impl(sol.P1, sol.P2, sol.s1, paths, p, player);
}

CostateReconstruction reconstruct_costate(const ClosedLoopFiniteSolution& sol,
                                          const PopulationPaths& paths,
                                          const ModelParams& p, int player,
                                          bool allow_mismatch) {
  if (!(sol.grid == paths.grid) || sol.N != paths.N)
    throw std::invalid_argument("policy/solution mismatch");
  if (!allow_mismatch && paths.policy != PolicyKind::CentralizedClosedLoop)
    throw std::invalid_argument("policy/solution mismatch");
  // The closed-loop stationarity residual B'p + R(K1-K2)x + N R K2 agg + R v
  // coincides with R u + B'p along paths generated by the same law, since
  // u = (K1-K2)x + N K2 agg + v node-wise.
  return reconstruct_impl(sol.P1, sol.P2, sol.s1, paths, p, player);
}

AffineStrategy deviator_view(const Policy& policy, int N,
                             const ModelParams& p, const TimeGrid& grid) {
  const int n = p.n();
  const int m = p.m();
  const double Nr = static_cast<double>(N);
  const MatrixXd Zmn = MatrixXd::Zero(m, n);
  const VectorXd Zm = VectorXd::Zero(m);
  if (policy.kind != PolicyKind::Zero &&
      (!policy.law || !(policy.law->grid == grid)))
    throw std::invalid_argument("policy law grid differs from study grid");

  switch (policy.kind) {
    case PolicyKind::Zero:
      return const_strategy(grid, Zmn, Zmn, Zm);
    case PolicyKind::CentralizedOpenLoop:
    case PolicyKind::CentralizedClosedLoop: {
      const FeedbackLaw& law = *policy.law;
      AffineStrategy s;
      s.on_own = law.K1;
      s.on_peer = MatPath(law.grid, Zmn);
      s.offset = law.v;
      for (int j = 0; j < law.grid.samples(); ++j)
        s.on_peer.sample(j) = (Nr - 1.0) * law.K2.sample(j);
      return s;
    }
    case PolicyKind::Decentralized:
    case PolicyKind::Custom: {
      const FeedbackLaw& law = *policy.law;
      AffineStrategy s;
      s.on_own = law.K1;
      s.on_peer = MatPath(law.grid, Zmn);
      s.offset = law.v;
      if (policy.mean_field) {
        for (int j = 0; j < law.grid.samples(); ++j)
          s.offset.sample(j) =
              law.v.sample(j) +
              law.K2.sample(j) * policy.mean_field->sample(j);
      }
      return s;
    }
  }
  throw std::invalid_argument("unknown policy kind");
}

AffineStrategy opponent_view(const Policy& policy, int N,
                             const ModelParams& p, const TimeGrid& grid) {
  const int n = p.n();
  const int m = p.m();
  const double Nr = static_cast<double>(N);
  const MatrixXd Zmn = MatrixXd::Zero(m, n);
  const VectorXd Zm = VectorXd::Zero(m);
  if (policy.kind != PolicyKind::Zero &&
      (!policy.law || !(policy.law->grid == grid)))
    throw std::invalid_argument("policy law grid differs from study grid");

  switch (policy.kind) {
    case PolicyKind::Zero:
      return const_strategy(grid, Zmn, Zmn, Zm);
    case PolicyKind::CentralizedOpenLoop:
    case PolicyKind::CentralizedClosedLoop: {
      // u_j = (K1 - K2) x_j + N K2 x^(N) + v averaged over j != i:
      // coefficient K2 on x_i and K1 + (N-2) K2 on the peer average.
      const FeedbackLaw& law = *policy.law;
      AffineStrategy s;
      s.on_own = law.K2;
      s.on_peer = MatPath(law.grid, Zmn);
      s.offset = law.v;
      for (int j = 0; j < law.grid.samples(); ++j)
        s.on_peer.sample(j) =
            law.K1.sample(j) + (Nr - 2.0) * law.K2.sample(j);
      return s;
    }
    case PolicyKind::Decentralized:
    case PolicyKind::Custom: {
      const FeedbackLaw& law = *policy.law;
      AffineStrategy s;
      s.on_own = MatPath(law.grid, Zmn);
      s.on_peer = law.K1;
      s.offset = law.v;
      if (policy.mean_field) {
        for (int j = 0; j < law.grid.samples(); ++j)
          s.offset.sample(j) =
              law.v.sample(j) +
              law.K2.sample(j) * policy.mean_field->sample(j);
      }
      return s;
    }
  }
  throw std::invalid_argument("unknown policy kind");
}

double policy_cost_moments(const ModelParams& p, int N,
                           const AffineStrategy& deviator,
                           const AffineStrategy& opponents,
                           const TimeGrid& grid) {
  require_valid(p);
  if (!(deviator.on_own.grid() == grid) ||
      !(opponents.on_own.grid() == grid))
    throw std::invalid_argument("strategy grid differs from study grid");
  const DeviatorWorld w = make_world(p, N, &opponents);

  // Closed dynamics blocks: deviator feedback on the x row, opponents on z.
  const auto F_at = [&](int j) {
    MatrixXd F = w.drift_at(j);
    F.topRows(w.n) += p.B * strategy_gain(deviator, w, j);
    return F;
  };
  const auto f_at = [&](int j) {
    VectorXd f = w.offset_at(j);
    f.segment(0, w.n) += p.B * deviator.offset.sample(j);
    return f;
  };

  const auto rhs = [&](int j, const BlockState& y) {
    const MatrixXd F = F_at(j);
    const VectorXd f = f_at(j);
    const MatrixXd& mu = y[0];
    const MatrixXd& M2 = y[1];
    BlockState d(2);
    d[0] = F * mu + f;
    d[1] = F * M2 + M2 * F.transpose() + f * mu.transpose() +
           mu * f.transpose() + w.noise;
    return d;
  };

  VectorXd mu0;
  MatrixXd cov0;
  initial_moments(p, w, mu0, cov0);
  BlockState init(2);
  init[0] = mu0;
  init[1] = cov0 + mu0 * mu0.transpose();
  LatticeSolution fwd =
      integrate_forward(grid, rhs, std::move(init), kRiccatiNormCap);
  if (!fwd.ok())
    throw std::runtime_error("moment propagation blow-up");

  const double dt = grid.dt();
  double cost = 0.0;
  for (int k = 0; k <= grid.M; ++k) {
    const double wq = (k == 0 || k == grid.M) ? 0.5 * dt : dt;
    const int j = 2 * k;
    const VectorXd mu = fwd.samples[j][0].col(0);
    const MatrixXd& M2 = fwd.samples[j][1];
    const MatrixXd Psi = strategy_gain(deviator, w, j);
    const VectorXd psi = deviator.offset.sample(j);
    double l = (w.Qbar * M2).trace() + 2.0 * w.qbar.dot(mu) + w.cbar;
    const MatrixXd RPsi = p.R * Psi;
    l += (Psi.transpose() * RPsi * M2).trace() + 2.0 * psi.dot(RPsi * mu) +
         psi.dot(p.R * psi);
    cost += wq * l;
  }
  const VectorXd muT = fwd.samples[2 * grid.M][0].col(0);
  const MatrixXd& M2T = fwd.samples[2 * grid.M][1];
  cost += (w.Qfbar * M2T).trace() + 2.0 * w.qfbar.dot(muT) + w.cfbar;
  return cost;
}

Solved<BestResponseSolution> best_response(const ModelParams& p, int N,
                                           const AffineStrategy& opponents,
                                           const TimeGrid& grid) {
  require_valid(p);
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (!(opponents.on_own.grid() == grid))
    throw std::invalid_argument("strategy grid differs from study grid");
  const DeviatorWorld w = make_world(p, N, &opponents);
  const MatrixXd RinvBt = gain_factor(p);  // m x n
  MatrixXd RinvBdev(w.m, w.dim);
  RinvBdev.setZero();
  RinvBdev.block(0, 0, w.m, w.n) = RinvBt;
  const MatrixXd Ydev = w.Bdev * RinvBdev;  // dim x dim Gram of the deviator

  const auto rhs = [&](int j, const BlockState& y) {
    const MatrixXd At = w.drift_at(j);
    const VectorXd bt = w.offset_at(j);
    const MatrixXd& S = y[0];
    const MatrixXd& g = y[1];
    BlockState d(3);
    d[0] = -At.transpose() * S - S * At + S * Ydev * S - w.Qbar;
    d[1] = -(At - Ydev * S).transpose() * g - S * bt - w.qbar;
    d[2] = MatrixXd::Constant(
        1, 1,
        -2.0 * bt.dot(g.col(0)) + g.col(0).dot(Ydev * g.col(0)) -
            (w.noise * S).trace() - w.cbar);
    return d;
  };

  // Keep S symmetric against round-off drift.
  const auto hook = [](BlockState& y) {
    y[0] = 0.5 * (y[0] + y[0].transpose()).eval();
  };

  BlockState terminal(3);
  terminal[0] = w.Qfbar;
  terminal[1] = w.qfbar;
  terminal[2] = MatrixXd::Constant(1, 1, w.cfbar);
  LatticeSolution raw =
      integrate_backward(grid, rhs, std::move(terminal), kRiccatiNormCap, hook);

  Solved<BestResponseSolution> out;
  if (!raw.ok()) {
    out.blowup = raw.blowup;
    return out;
  }

  BestResponseSolution br;
  br.N = N;
  br.grid = grid;
  br.S = MatPath(grid, MatrixXd{});
  br.g = VecPath(grid, VectorXd{});
  br.kappa.resize(grid.samples());
  br.policy.on_own = MatPath(grid, MatrixXd{});
  br.policy.on_peer = MatPath(grid, MatrixXd::Zero(w.m, w.n));
  br.policy.offset = VecPath(grid, VectorXd{});
  for (int j = 0; j < grid.samples(); ++j) {
    const MatrixXd& S = raw.samples[j][0];
    const VectorXd g = raw.samples[j][1].col(0);
    br.S.sample(j) = S;
    br.g.sample(j) = g;
    br.kappa[j] = raw.samples[j][2](0, 0);
    const MatrixXd Kfull = -(RinvBdev * S);  // -R^-1 Bdev' S, m x dim
    br.policy.on_own.sample(j) = Kfull.block(0, 0, w.m, w.n);
    if (N > 1) br.policy.on_peer.sample(j) = Kfull.block(0, w.n, w.m, w.n);
    br.policy.offset.sample(j) = -(RinvBdev * g);
  }

  VectorXd mu0;
  MatrixXd cov0;
  initial_moments(p, w, mu0, cov0);
  const MatrixXd& S0 = br.S.node(0);
  br.optimal_cost = (S0 * cov0).trace() + mu0.dot(S0 * mu0) +
                    2.0 * br.g.node(0).dot(mu0) + br.kappa[0];
  br.optimal_cost_mom = policy_cost_moments(p, N, br.policy, opponents, grid);
  out.value = std::move(br);
  return out;
}

NashGapReport nash_gap_study(const ModelParams& p, const TimeGrid& grid,
                             const std::vector<int>& Ns, PolicyKind kind,
                             const LimitSolution& limit) {
  NashGapReport report;
  report.policy = kind;
  for (int N : Ns) {
    NashGapRow row;
    row.N = N;
    Policy policy;
    bool ok = true;
    switch (kind) {
      case PolicyKind::Decentralized:
        policy = Policy::decentralized(limit);
        break;
      case PolicyKind::Zero:
        policy = Policy::zero();
        break;
      case PolicyKind::CentralizedOpenLoop: {
        auto sol = solve_open_loop(p, N, grid);
        if (!sol.ok()) {
          ok = false;
        } else {
          policy = Policy::centralized(open_loop_gains(*sol, p));
        }
        break;
      }
      case PolicyKind::CentralizedClosedLoop: {
        auto sol = solve_closed_loop(p, N, grid);
        if (!sol.ok()) {
          ok = false;
        } else {
          policy = Policy::centralized(closed_loop_gains(*sol, p));
        }
        break;
      }
      case PolicyKind::Custom:
        throw std::invalid_argument("custom policies have no gap study");
    }
    if (!ok) {
      row.solvable = false;
      report.rows.push_back(row);
      continue;
    }
    const AffineStrategy dev = deviator_view(policy, N, p, grid);
    const AffineStrategy opp = opponent_view(policy, N, p, grid);
    row.policy_cost = policy_cost_moments(p, N, dev, opp, grid);
    auto br = best_response(p, N, opp, grid);
    if (!br.ok()) {
      row.solvable = false;
      report.rows.push_back(row);
      continue;
    }
    row.best_response_cost = br->optimal_cost_mom;
    row.gap = row.policy_cost - row.best_response_cost;
    report.rows.push_back(row);
  }

  std::vector<double> ns, gaps;
  for (const auto& row : report.rows) {
    if (!row.solvable) continue;
    ns.push_back(static_cast<double>(row.N));
    gaps.push_back(row.gap);
  }
  report.fit = fit_loglog(ns, gaps);
  return report;
}

}  // namespace lqmfg
