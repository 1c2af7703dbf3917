#include "lqmfg/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "lqmfg/parallel.hpp"
#include "lqmfg/rng.hpp"

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

// Square root factor of a PSD covariance via the spectral decomposition
// (x0_cov may be singular, so a Cholesky would not do).
MatrixXd psd_sqrt(const MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
  VectorXd lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i) lam(i) = std::sqrt(std::max(lam(i), 0.0));
  return es.eigenvectors() * lam.asDiagonal() *
         es.eigenvectors().transpose();
}

void check_policy(const Policy& policy, int N, const TimeGrid& grid) {
  switch (policy.kind) {
    case PolicyKind::Zero:
      return;
    case PolicyKind::CentralizedOpenLoop:
    case PolicyKind::CentralizedClosedLoop: {
      if (!policy.law) throw std::invalid_argument("policy has no law");
      const LawKind want = policy.kind == PolicyKind::CentralizedOpenLoop
                               ? LawKind::OpenLoopFinite
                               : LawKind::ClosedLoopFinite;
      if (policy.law->provenance != want)
        throw std::invalid_argument("policy/law provenance mismatch");
      if (policy.law->N != N)
        throw std::invalid_argument("policy law solved for a different N");
      if (!(policy.law->grid == grid))
        throw std::invalid_argument("policy law grid differs from simulation grid");
      return;
    }
    case PolicyKind::Decentralized:
      if (!policy.law || policy.law->provenance != LawKind::Limit)
        throw std::invalid_argument("decentralized policy needs the limit law");
      if (!policy.mean_field)
        throw std::invalid_argument("decentralized policy needs the mean field");
      if (!(policy.law->grid == grid) || !(policy.mean_field->grid() == grid))
        throw std::invalid_argument("policy law grid differs from simulation grid");
      return;
    case PolicyKind::Custom:
      if (!policy.law) throw std::invalid_argument("policy has no law");
      if (!(policy.law->grid == grid))
        throw std::invalid_argument("policy law grid differs from simulation grid");
      if (policy.mean_field && !(policy.mean_field->grid() == grid))
        throw std::invalid_argument("mean-field source grid differs from simulation grid");
      return;
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace

const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::CentralizedOpenLoop: return "centralized-open-loop";
    case PolicyKind::CentralizedClosedLoop: return "centralized-closed-loop";
    case PolicyKind::Decentralized: return "decentralized";
    case PolicyKind::Zero: return "zero";
    case PolicyKind::Custom: return "custom";
  }
  return "?";
}

Policy Policy::zero() { return Policy{PolicyKind::Zero, {}, {}}; }

Policy Policy::centralized(FeedbackLaw law) {
  Policy p;
  p.kind = law.provenance == LawKind::OpenLoopFinite
               ? PolicyKind::CentralizedOpenLoop
               : PolicyKind::CentralizedClosedLoop;
  p.law = std::move(law);
  return p;
}

Policy Policy::decentralized(const LimitSolution& limit) {
  Policy p;
  p.kind = PolicyKind::Decentralized;
  p.law = limit_law(limit);
  p.mean_field = limit.xbar;
  return p;
}

Policy Policy::custom(FeedbackLaw law, std::optional<VecPath> mean_field) {
  Policy p;
  p.kind = PolicyKind::Custom;
  p.law = std::move(law);
  p.mean_field = std::move(mean_field);
  return p;
}

SimResult simulate(const ModelParams& p, int N, const Policy& policy,
                   const TimeGrid& grid, const SimOptions& opts,
                   const VecPath* xbar_ref) {
  require_valid(p);
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (opts.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  check_policy(policy, N, grid);
  if (!opts.substreams.empty() &&
      static_cast<int>(opts.substreams.size()) != N)
    throw std::invalid_argument("substream map must have one entry per player");
  if (xbar_ref && !(xbar_ref->grid() == grid))
    throw std::invalid_argument("mean-field reference grid mismatch");

  const int n = p.n();
  const int m = p.m();
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  const MatrixXd init_factor = psd_sqrt(p.x0_cov);
  const CounterRng rng(opts.seed);
  const bool full = opts.storage == StorageMode::Full;
  const double Nr = static_cast<double>(N);

  PopulationPaths out;
  out.N = N;
  out.grid = grid;
  out.policy = policy.kind;
  out.n_paths = opts.n_paths;
  out.seed = opts.seed;
  out.mode = opts.storage;
  out.cost.assign(opts.n_paths, std::vector<double>(N, 0.0));
  if (xbar_ref)
    out.mf_sq_deviation.assign(opts.n_paths,
                               std::vector<double>(grid.nodes(), 0.0));
  if (full) {
    out.states.assign(opts.n_paths, {});
    out.controls.assign(opts.n_paths, {});
    out.aggregate.assign(opts.n_paths, {});
  }

  std::vector<std::optional<SimBlowUp>> bad(opts.n_paths);

  const auto substream = [&](int player) -> std::uint64_t {
    return opts.substreams.empty()
               ? static_cast<std::uint64_t>(player)
               : static_cast<std::uint64_t>(opts.substreams[player]);
  };

  const auto control_at = [&](int k, const VectorXd& x,
                              const VectorXd& agg) -> VectorXd {
    switch (policy.kind) {
      case PolicyKind::Zero:
        return VectorXd::Zero(m);
      case PolicyKind::CentralizedOpenLoop:
      case PolicyKind::CentralizedClosedLoop: {
        const MatrixXd& K1 = policy.law->K1.node(k);
        const MatrixXd& K2 = policy.law->K2.node(k);
        return (K1 - K2) * x + Nr * (K2 * agg) + policy.law->v.node(k);
      }
      case PolicyKind::Decentralized:
        return policy.law->K1.node(k) * x +
               policy.law->K2.node(k) * policy.mean_field->node(k) +
               policy.law->v.node(k);
      case PolicyKind::Custom: {
        VectorXd u = policy.law->K1.node(k) * x + policy.law->v.node(k);
        if (policy.mean_field)
          u += policy.law->K2.node(k) * policy.mean_field->node(k);
        return u;
      }
    }
    return VectorXd::Zero(m);
  };

  const auto run_replication = [&](int rep) {
    std::vector<VectorXd> x(N);
    for (int i = 0; i < N; ++i) {
      VectorXd z(n);
      for (int d = 0; d < n; ++d)
        z(d) = rng.normal(rep, substream(i), static_cast<std::uint64_t>(d));
      x[i] = p.x0_mean + init_factor * z;
    }
    auto& cost = out.cost[rep];
    if (full) {
      out.states[rep].assign(N, std::vector<VectorXd>(grid.nodes()));
      out.controls[rep].assign(N, std::vector<VectorXd>(grid.nodes()));
      out.aggregate[rep].assign(grid.nodes(), VectorXd::Zero(n));
    }

    VectorXd agg(n);
    std::vector<VectorXd> u(N);
    for (int k = 0; k <= grid.M; ++k) {
      agg.setZero();
      for (int i = 0; i < N; ++i) agg += x[i];
      agg /= Nr;

      const double w = (k == 0 || k == grid.M) ? 0.5 * dt : dt;
      for (int i = 0; i < N; ++i) {
        u[i] = control_at(k, x[i], agg);
        const VectorXd dev = x[i] - p.Gamma * agg - p.eta;
        cost[i] += w * (dev.dot(p.Q * dev) + u[i].dot(p.R * u[i]));
      }
      if (xbar_ref)
        out.mf_sq_deviation[rep][k] = (agg - xbar_ref->node(k)).squaredNorm();
      if (full) {
        for (int i = 0; i < N; ++i) {
          out.states[rep][i][k] = x[i];
          out.controls[rep][i][k] = u[i];
        }
        out.aggregate[rep][k] = agg;
      }

      if (k == grid.M) break;
      for (int i = 0; i < N; ++i) {
        const double noise =
            rng.normal(rep, substream(i), static_cast<std::uint64_t>(n + k));
        x[i] += dt * (p.A * x[i] + p.G * agg + p.B * u[i]) +
                (sqdt * noise) * p.sigma;
        if (!x[i].allFinite() || x[i].norm() > kSimNormCap) {
          bad[rep] = SimBlowUp{rep, i, grid.node_time(k + 1)};
          return;
        }
      }
    }
    for (int i = 0; i < N; ++i) {
      const VectorXd dev = x[i] - p.Gammaf * agg - p.etaf;
      cost[i] += dev.dot(p.Qf * dev);
    }
  };

  parallel_for(opts.n_paths, opts.workers, run_replication);

  for (int rep = 0; rep < opts.n_paths; ++rep) {
    if (bad[rep]) {
      SimResult r;
      r.blowup = bad[rep];
      return r;
    }
  }
  SimResult r;
  r.paths = std::move(out);
  return r;
}

MeanFieldErrorResult mean_field_error(const ModelParams& p, int N,
                                      const Policy& policy,
                                      const TimeGrid& grid,
                                      const SimOptions& opts,
                                      const LimitSolution& limit) {
  SimOptions o = opts;
  o.storage = StorageMode::MomentsOnly;
  SimResult sim = simulate(p, N, policy, grid, o, &limit.xbar);
  MeanFieldErrorResult out;
  if (!sim.ok()) {
    out.blowup = sim.blowup;
    return out;
  }
  out.value = summarize_mean_field_deviation(*sim);
  return out;
}

MeanFieldError summarize_mean_field_deviation(const PopulationPaths& paths) {
  if (paths.mf_sq_deviation.empty())
    throw std::invalid_argument(
        "paths were simulated without a mean-field reference");
  const auto& dev = paths.mf_sq_deviation;
  const int R = paths.n_paths;
  const int K = paths.grid.nodes();

  // Column sums with pairwise accumulation, then the sup statistic and its
  // jackknife standard error (leave one replication out).
  std::vector<double> col(R);
  std::vector<double> total(K);
  for (int k = 0; k < K; ++k) {
    for (int r = 0; r < R; ++r) col[r] = dev[r][k];
    total[k] = pairwise_sum(col.data(), R);
  }
  MeanFieldError mfe;
  for (int k = 0; k < K; ++k) {
    const double mean = total[k] / R;
    if (mean > mfe.sup_mean_sq) {
      mfe.sup_mean_sq = mean;
      mfe.argmax_node = k;
    }
  }
  if (R > 1) {
    std::vector<double> loo(R);
    for (int r = 0; r < R; ++r) {
      double sup = 0.0;
      for (int k = 0; k < K; ++k)
        sup = std::max(sup, (total[k] - dev[r][k]) / (R - 1));
      loo[r] = sup;
    }
    const double loo_mean = pairwise_sum(loo.data(), R) / R;
    double ss = 0.0;
    for (int r = 0; r < R; ++r) ss += (loo[r] - loo_mean) * (loo[r] - loo_mean);
    mfe.std_error = std::sqrt(ss * (R - 1.0) / R);
  }
  return mfe;
}

}  // namespace lqmfg
