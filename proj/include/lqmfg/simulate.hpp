#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lqmfg/riccati_limit.hpp"

namespace lqmfg {

enum class PolicyKind {
  CentralizedOpenLoop,    // u_i = (K1 - K2) x_i + N K2 x^(N) + v
  CentralizedClosedLoop,  // same form with the closed-loop gains
  Decentralized,          // u_i = K1inf x_i + K2inf xbar(t) + phi1inf(t)
  Zero,                   // u_i = 0
  Custom,                 // u_i = K1 x_i + K2 mf(t) + v with a supplied source
};

const char* to_string(PolicyKind k);

// A control policy for the whole population. Centralized kinds carry a
// finite-N law; Decentralized and Custom read a precomputed deterministic
// mean-field source instead of the empirical average.
struct Policy {
  PolicyKind kind = PolicyKind::Zero;
  std::optional<FeedbackLaw> law;
  std::optional<VecPath> mean_field;

  static Policy zero();
  static Policy centralized(FeedbackLaw law);
  static Policy decentralized(const LimitSolution& limit);
  static Policy custom(FeedbackLaw law, std::optional<VecPath> mean_field);
};

enum class StorageMode { Full, MomentsOnly };

struct SimOptions {
  int n_paths = 1;
  std::uint64_t seed = 0;
  StorageMode storage = StorageMode::Full;
  int workers = 0;  // 0 = hardware concurrency
  // Test hook: player i draws from substream substreams[i]. Empty = identity.
  std::vector<int> substreams;
};

struct SimBlowUp {
  int replication = 0;
  int player = 0;
  double time = 0.0;
};

constexpr double kSimNormCap = 1e10;

// Seeded Euler-Maruyama ensemble of the N-player population. Per-path cost
// accumulators and mean-field deviations are always kept; full state and
// control storage only in Full mode (memory is N * n_paths * nodes).
struct PopulationPaths {
  int N = 1;
  TimeGrid grid;
  PolicyKind policy = PolicyKind::Zero;
  int n_paths = 0;
  std::uint64_t seed = 0;
  StorageMode mode = StorageMode::Full;

  // Full mode only. Indexed [replication][player][node].
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> states;
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> controls;
  // Indexed [replication][node]: empirical average x^(N).
  std::vector<std::vector<Eigen::VectorXd>> aggregate;

  // Always present. cost[replication][player]: trapezoid of the running
  // cost along the path plus the terminal term.
  std::vector<std::vector<double>> cost;
  // |x^(N)(t_k) - xbar(t_k)|^2 per replication and node; filled when a
  // mean-field reference was supplied.
  std::vector<std::vector<double>> mf_sq_deviation;
};

struct SimResult {
  std::optional<PopulationPaths> paths;
  std::optional<SimBlowUp> blowup;
  bool ok() const { return paths.has_value(); }
  const PopulationPaths& operator*() const { return *paths; }
  const PopulationPaths* operator->() const { return &*paths; }
};

// xbar_ref, when given, enables the mean-field deviation records. Throws
// std::invalid_argument on grid/provenance mismatches between policy and
// grid; dynamic blow-up is reported in the result, not thrown.
SimResult simulate(const ModelParams& p, int N, const Policy& policy,
                   const TimeGrid& grid, const SimOptions& opts,
                   const VecPath* xbar_ref = nullptr);

struct MeanFieldError {
  double sup_mean_sq = 0.0;   // sup over nodes of the MC mean of |x^(N)-xbar|^2
  double std_error = 0.0;     // jackknife standard error of the sup statistic
  int argmax_node = 0;
};

struct MeanFieldErrorResult {
  std::optional<MeanFieldError> value;
  std::optional<SimBlowUp> blowup;
  bool ok() const { return value.has_value(); }
  const MeanFieldError& operator*() const { return *value; }
  const MeanFieldError* operator->() const { return &*value; }
};

MeanFieldErrorResult mean_field_error(const ModelParams& p, int N,
                                      const Policy& policy,
                                      const TimeGrid& grid,
                                      const SimOptions& opts,
                                      const LimitSolution& limit);

// The sup statistic and its jackknife standard error from paths that were
// simulated with a mean-field reference.
MeanFieldError summarize_mean_field_deviation(const PopulationPaths& paths);

}  // namespace lqmfg
