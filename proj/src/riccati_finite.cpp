#include "lqmfg/riccati_finite.hpp"

#include <cmath>
#include <stdexcept>

namespace lqmfg {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Coefficient bundle shared by both finite-N systems.
struct FiniteCoeffs {
  int n;
  double N;     // population size as a real
  double c;     // (N-1)/N
  MatrixXd Y;   // control Gram B R^-1 B^T
  MatrixXd AgN;   // A + G/N
  MatrixXd AgM;   // A + (N-1)/N G
  MatrixXd GN;    // G/N
  MatrixXd G;     // coupling drift
  MatrixXd C1;    // -Q + Gamma'Q/N + Q Gamma/N - Gamma'Q Gamma/N^2
  MatrixXd C2;    // Q Gamma/N - Gamma'Q Gamma/N^2
  MatrixXd C3;    // -Gamma'Q Gamma/N^2
  MatrixXd C4;    // Gamma'Q/N - Gamma'Q Gamma/N^2
  VectorXd qe1;   // (Q - Gamma'Q/N) eta
  VectorXd qe2;   // (Gamma'Q/N) eta
};

FiniteCoeffs make_coeffs(const ModelParams& p, int N) {
  FiniteCoeffs k;
  k.n = p.n();
  k.N = static_cast<double>(N);
  k.c = (k.N - 1.0) / k.N;
  k.Y = control_gram(p);
  k.G = p.G;
  k.GN = p.G / k.N;
  k.AgN = p.A + k.GN;
  k.AgM = p.A + k.c * p.G;
  const MatrixXd GtQ = p.Gamma.transpose() * p.Q;
  const MatrixXd QG = p.Q * p.Gamma;
  const MatrixXd GtQG = p.Gamma.transpose() * p.Q * p.Gamma;
  k.C1 = -p.Q + GtQ / k.N + QG / k.N - GtQG / (k.N * k.N);
  k.C2 = QG / k.N - GtQG / (k.N * k.N);
  k.C3 = -GtQG / (k.N * k.N);
  k.C4 = GtQ / k.N - GtQG / (k.N * k.N);
  k.qe1 = (p.Q - GtQ / k.N) * p.eta;
  k.qe2 = (GtQ / k.N) * p.eta;
  return k;
}

// Terminal data common to both systems (the closed-loop system drops the
// fourth block, which equals P2^T).
struct FiniteTerminal {
  MatrixXd P1, P2, P3, P4;
  VectorXd s1, s2;
};

FiniteTerminal make_terminal(const ModelParams& p, double N) {
  const MatrixXd GftQf = p.Gammaf.transpose() * p.Qf;
  const MatrixXd QfGf = p.Qf * p.Gammaf;
  const MatrixXd GftQfGf = p.Gammaf.transpose() * p.Qf * p.Gammaf;
  FiniteTerminal t;
  t.P1 = p.Qf - GftQf / N - QfGf / N + GftQfGf / (N * N);
  t.P2 = GftQfGf / (N * N) - QfGf / N;
  t.P3 = GftQfGf / (N * N);
  t.P4 = -GftQf / N + GftQfGf / (N * N);
  t.s1 = (GftQf / N - p.Qf) * p.etaf;
  t.s2 = (GftQf / N) * p.etaf;
  return t;
}

template <class V>
Path<V> path_from_samples(const TimeGrid& grid,
                          const std::vector<BlockState>& samples, int block) {
  Path<V> path(grid, V{});
  for (int j = 0; j < grid.samples(); ++j)
    path.sample(j) = samples[j][block];
  return path;
}

VecPath vec_path_from_samples(const TimeGrid& grid,
                              const std::vector<BlockState>& samples,
                              int block) {
  VecPath path(grid, VectorXd{});
  for (int j = 0; j < grid.samples(); ++j)
    path.sample(j) = samples[j][block].col(0);
  return path;
}

FeedbackLaw gains_from(const TimeGrid& grid, LawKind kind, int N,
                       const MatrixXd& RinvBt, const MatPath& P1,
                       const MatPath& P2, const VecPath& s1) {
  FeedbackLaw law;
  law.grid = grid;
  law.provenance = kind;
  law.N = N;
  law.K1 = MatPath(grid, MatrixXd{});
  law.K2 = MatPath(grid, MatrixXd{});
  law.v = VecPath(grid, VectorXd{});
  for (int j = 0; j < grid.samples(); ++j) {
    law.K1.sample(j) = -RinvBt * P1.sample(j);
    law.K2.sample(j) = -RinvBt * P2.sample(j);
    law.v.sample(j) = -RinvBt * s1.sample(j);
  }
  return law;
}

}  // namespace

Solved<OpenLoopFiniteSolution> solve_open_loop(const ModelParams& p, int N,
                                               const TimeGrid& grid) {
  require_valid(p);
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  const FiniteCoeffs k = make_coeffs(p, N);
  const double Nr = k.N;

  const auto rhs = [&k, Nr](int, const BlockState& y) {
    const MatrixXd& P1 = y[0];
    const MatrixXd& P2 = y[1];
    const MatrixXd& P3 = y[2];
    const MatrixXd& P4 = y[3];
    const MatrixXd& s1 = y[4];
    const MatrixXd& s2 = y[5];
    BlockState d(6);
    d[0] = P1 * k.Y * P1 + (Nr - 1.0) * (P2 * k.Y * P2) - P1 * k.AgN -
           k.AgN.transpose() * P1 - k.c * (P2 * k.G) -
           k.c * (k.G.transpose() * P4) + k.C1;
    d[1] = P1 * k.Y * P2 + P2 * k.Y * P1 + (Nr - 2.0) * (P2 * k.Y * P2) -
           P1 * k.GN - k.AgN.transpose() * P2 - P2 * k.AgM -
           k.c * (k.G.transpose() * P3) + k.C2;
    d[2] = P4 * k.Y * P2 + P3 * k.Y * P1 + (Nr - 2.0) * (P3 * k.Y * P2) -
           P3 * k.AgM - P4 * k.GN - k.AgM.transpose() * P3 -
           k.GN.transpose() * P2 + k.C3;
    d[3] = P4 * k.Y * P1 + (Nr - 1.0) * (P3 * k.Y * P2) - P4 * k.AgN -
           k.AgM.transpose() * P4 - k.c * (P3 * k.G) -
           k.GN.transpose() * P1 + k.C4;
    d[4] = -(k.AgN - k.Y * P1.transpose() -
             (Nr - 1.0) * (k.Y * P2.transpose()))
                .transpose() *
               s1 -
           k.c * (k.G.transpose() * s2) + k.qe1;
    d[5] = -(k.GN - k.Y * P4.transpose() -
             (Nr - 1.0) * (k.Y * P3.transpose()))
                .transpose() *
               s1 -
           k.AgM.transpose() * s2 - k.qe2;
    return d;
  };

  const FiniteTerminal t = make_terminal(p, Nr);
  BlockState terminal = {t.P1, t.P2, t.P3, t.P4, t.s1, t.s2};
  LatticeSolution raw =
      integrate_backward(grid, rhs, std::move(terminal), kRiccatiNormCap);

  Solved<OpenLoopFiniteSolution> out;
  if (!raw.ok()) {
    out.blowup = raw.blowup;
    return out;
  }
  OpenLoopFiniteSolution sol;
  sol.N = N;
  sol.grid = grid;
  sol.P1 = path_from_samples<MatrixXd>(grid, raw.samples, 0);
  sol.P2 = path_from_samples<MatrixXd>(grid, raw.samples, 1);
  sol.P3 = path_from_samples<MatrixXd>(grid, raw.samples, 2);
  sol.P4 = path_from_samples<MatrixXd>(grid, raw.samples, 3);
  sol.s1 = vec_path_from_samples(grid, raw.samples, 4);
  sol.s2 = vec_path_from_samples(grid, raw.samples, 5);
  out.value = std::move(sol);
  return out;
}

Solved<ClosedLoopFiniteSolution> solve_closed_loop(const ModelParams& p, int N,
                                                   const TimeGrid& grid) {
  require_valid(p);
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  const FiniteCoeffs k = make_coeffs(p, N);
  const double Nr = k.N;

  const auto rhs = [&k, Nr, &p](int, const BlockState& y) {
    const MatrixXd& P1 = y[0];
    const MatrixXd& P2 = y[1];
    const MatrixXd& P3 = y[2];
    const MatrixXd& s1 = y[3];
    const MatrixXd& s2 = y[4];
    BlockState d(5);
    d[0] = P1 * k.Y * P1 + (Nr - 1.0) * (P2 * k.Y * P2) +
           (Nr - 1.0) * (P2.transpose() * k.Y * P2.transpose()) - P1 * k.AgN -
           k.AgN.transpose() * P1 - k.c * (P2 * k.G) -
           k.c * (k.G.transpose() * P2.transpose()) + k.C1;
    d[1] = P1 * k.Y * P2 + (Nr - 1.0) * (P2.transpose() * k.Y * P3) +
           P2 * k.Y * P1 + (Nr - 2.0) * (P2 * k.Y * P2) - P1 * k.GN -
           k.c * (k.G.transpose() * P3) - P2 * k.AgM -
           k.AgN.transpose() * P2 + k.C2;
    d[2] = P1 * k.Y * P3 + (Nr - 2.0) * (P3 * k.Y * P2) +
           (Nr - 2.0) * (P2.transpose() * k.Y * P3) + P3 * k.Y * P1 +
           P2.transpose() * k.Y * P2 - P2.transpose() * k.GN -
           k.GN.transpose() * P2 - P3 * k.AgM - k.AgM.transpose() * P3 + k.C3;
    d[3] = -(k.AgN - k.Y * P1 - (Nr - 1.0) * (k.Y * P2.transpose()))
                .transpose() *
               s1 -
           (Nr - 1.0) * ((k.GN - k.Y * P2).transpose() * s2) + k.qe1;
    d[4] = -(k.GN - k.Y * P2 - (Nr - 1.0) * (k.Y * P3)).transpose() * s1 -
           (p.A + k.c * k.G - k.Y * P1 - (Nr - 2.0) * (k.Y * P2))
                   .transpose() *
               s2 -
           k.qe2;
    return d;
  };

  // P1 and P3 remain symmetric along the flow; re-symmetrize every sample
  // and keep the worst drift seen as an integration diagnostic.
  double max_drift = 0.0;
  const auto hook = [&max_drift](BlockState& y) {
    for (int b : {0, 2}) {
      const double drift = (y[b] - y[b].transpose()).norm();
      if (drift > max_drift) max_drift = drift;
      y[b] = 0.5 * (y[b] + y[b].transpose()).eval();
    }
  };

  const FiniteTerminal t = make_terminal(p, Nr);
  BlockState terminal = {t.P1, t.P2, t.P3, t.s1, t.s2};
  LatticeSolution raw =
      integrate_backward(grid, rhs, std::move(terminal), kRiccatiNormCap, hook);

  Solved<ClosedLoopFiniteSolution> out;
  if (!raw.ok()) {
    out.blowup = raw.blowup;
    return out;
  }
  ClosedLoopFiniteSolution sol;
  sol.N = N;
  sol.grid = grid;
  sol.P1 = path_from_samples<MatrixXd>(grid, raw.samples, 0);
  sol.P2 = path_from_samples<MatrixXd>(grid, raw.samples, 1);
  sol.P3 = path_from_samples<MatrixXd>(grid, raw.samples, 2);
  sol.s1 = vec_path_from_samples(grid, raw.samples, 3);
  sol.s2 = vec_path_from_samples(grid, raw.samples, 4);
  sol.max_symmetry_drift = max_drift;
  out.value = std::move(sol);
  return out;
}

FeedbackLaw open_loop_gains(const OpenLoopFiniteSolution& sol,
                            const ModelParams& p) {
  return gains_from(sol.grid, LawKind::OpenLoopFinite, sol.N, gain_factor(p),
                    sol.P1, sol.P2, sol.s1);
}

FeedbackLaw closed_loop_gains(const ClosedLoopFiniteSolution& sol,
                              const ModelParams& p) {
  return gains_from(sol.grid, LawKind::ClosedLoopFinite, sol.N, gain_factor(p),
                    sol.P1, sol.P2, sol.s1);
}

ConvexityReport check_convexity(const ModelParams& p, int N,
                                const TimeGrid& grid, int dim_cap) {
  require_valid(p);
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  const int n = p.n();
  const int m = p.m();
  const int dim = grid.M * m;
  if (dim > dim_cap) throw std::runtime_error("discretization too large");

  // Perturbation dynamics of one deviating player. The N-1 bystander
  // responses coincide (same linear ODE, same mean-field input, zero start),
  // so the system reduces to (y, w) with w the common bystander state and
  // y^(N) = (y + (N-1) w)/N.
  const double Nr = static_cast<double>(N);
  const MatrixXd A11 = p.A + p.G / Nr;
  const MatrixXd A12 = ((Nr - 1.0) / Nr) * p.G;
  const MatrixXd A21 = p.G / Nr;
  const MatrixXd A22 = p.A + ((Nr - 1.0) / Nr) * p.G;

  const double dt = grid.dt();
  // Impulse responses at the nodes: basis element (interval a, channel b)
  // applies u = e_b on [t_a, t_a + dt). ys/ws hold the raw pair so both the
  // running (Gamma) and terminal (Gammaf) deviations can be formed.
  std::vector<std::vector<VectorXd>> ys(
      dim, std::vector<VectorXd>(grid.nodes(), VectorXd::Zero(n)));
  std::vector<std::vector<VectorXd>> ws = ys;

  for (int a = 0; a < grid.M; ++a) {
    for (int b = 0; b < m; ++b) {
      const int idx = a * m + b;
      VectorXd y = VectorXd::Zero(n), w = VectorXd::Zero(n);
      const VectorXd Bu = p.B.col(b);
      for (int s = a; s < grid.M; ++s) {
        const bool active = (s == a);
        const auto f = [&](const VectorXd& yy, const VectorXd& ww,
                           VectorXd& dy, VectorXd& dw) {
          dy = A11 * yy + A12 * ww;
          dw = A21 * yy + A22 * ww;
          if (active) dy += Bu;
        };
        VectorXd k1y(n), k1w(n), k2y(n), k2w(n), k3y(n), k3w(n), k4y(n),
            k4w(n);
        f(y, w, k1y, k1w);
        f(y + 0.5 * dt * k1y, w + 0.5 * dt * k1w, k2y, k2w);
        f(y + 0.5 * dt * k2y, w + 0.5 * dt * k2w, k3y, k3w);
        f(y + dt * k3y, w + dt * k3w, k4y, k4w);
        y += (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        w += (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        ys[idx][s + 1] = y;
        ws[idx][s + 1] = w;
      }
    }
  }

  // Assemble the form: trapezoid of the Q term over nodes (impulse responses
  // vanish at node 0), the terminal Qf term, and the exact block-diagonal R
  // term of the piecewise-constant control.
  MatrixXd form = MatrixXd::Zero(dim, dim);
  MatrixXd stacked(dim, n);
  for (int node = 1; node <= grid.M; ++node) {
    const double wq = (node == grid.M) ? 0.5 * dt : dt;
    for (int idx = 0; idx < dim; ++idx) {
      const VectorXd avg = (ys[idx][node] + (Nr - 1.0) * ws[idx][node]) / Nr;
      stacked.row(idx) = (ys[idx][node] - p.Gamma * avg).transpose();
    }
    form += wq * stacked * p.Q * stacked.transpose();
  }
  for (int idx = 0; idx < dim; ++idx) {
    const VectorXd avg =
        (ys[idx][grid.M] + (Nr - 1.0) * ws[idx][grid.M]) / Nr;
    stacked.row(idx) = (ys[idx][grid.M] - p.Gammaf * avg).transpose();
  }
  form += stacked * p.Qf * stacked.transpose();
  for (int a = 0; a < grid.M; ++a)
    form.block(a * m, a * m, m, m) += dt * p.R;
  form = 0.5 * (form + form.transpose()).eval();

  ConvexityReport report;
  report.dim = dim;
  report.form_norm = form.norm();
  report.tolerance = 1e-8 * (1.0 + report.form_norm);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(form);
  report.min_eigenvalue = es.eigenvalues().minCoeff();
  report.convex = report.min_eigenvalue >= -report.tolerance;
  report.form = std::move(form);
  return report;
}

}  // namespace lqmfg
