#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lqmfg/asymptotics.hpp"
#include "lqmfg/config.hpp"
#include "lqmfg/csv.hpp"
#include "lqmfg/game_eval.hpp"

namespace fs = std::filesystem;
using namespace lqmfg;

namespace {

// Exit-code contract: 0 pass, 1 usage/config error, 2 mathematical
// non-solvability, 3 acceptance-band failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNonSolvable = 2;
constexpr int kExitBandFail = 3;

struct Cli {
  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

struct Session {
  ExperimentConfig cfg;
  TimeGrid grid;
  fs::path out;
  bool quiet = false;

  void log(const std::string& line) const {
    if (!quiet) std::cout << line << "\n";
  }
};

Session open_session(const Cli& cli) {
  Session s;
  s.cfg = load_experiment_config(cli.config_path);
  if (!cli.out_override.empty()) s.cfg.out = cli.out_override;
  if (cli.seed_override) {
    s.cfg.simulate.seed = *cli.seed_override;
    s.cfg.simulate.has_seed = true;
    s.cfg.verify.seed = *cli.seed_override;
    s.cfg.verify.has_seed = true;
  }
  s.grid = TimeGrid{s.cfg.model.T, s.cfg.M};
  s.out = s.cfg.out;
  s.quiet = cli.quiet;
  fs::create_directories(s.out);
  return s;
}

void write_file(const fs::path& path,
                const std::function<void(std::ostream&)>& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  writer(os);
}

bool fit_passes(const SlopeFit& fit, const double band[2], double r2_min) {
  if (fit.exact) return true;
  return fit.slope >= band[0] && fit.slope <= band[1] && fit.r2 >= r2_min;
}

std::string fit_line(const std::string& name, const SlopeFit& fit,
                     bool pass) {
  std::ostringstream oss;
  if (fit.exact)
    oss << name << ": exact (gaps at round-off)";
  else
    oss << name << ": slope " << fit.slope << " r2 " << fit.r2 << " "
        << (pass ? "pass" : "FAIL");
  return oss.str();
}

Policy make_policy(const ModelParams& p, int N, PolicyKind kind,
                   const TimeGrid& grid, const LimitSolution& limit,
                   std::optional<BlowUp>& blowup) {
  switch (kind) {
    case PolicyKind::Decentralized:
      return Policy::decentralized(limit);
    case PolicyKind::CentralizedOpenLoop: {
      auto sol = solve_open_loop(p, N, grid);
      if (!sol.ok()) {
        blowup = sol.blowup;
        return Policy::zero();
      }
      return Policy::centralized(open_loop_gains(*sol, p));
    }
    case PolicyKind::CentralizedClosedLoop: {
      auto sol = solve_closed_loop(p, N, grid);
      if (!sol.ok()) {
        blowup = sol.blowup;
        return Policy::zero();
      }
      return Policy::centralized(closed_loop_gains(*sol, p));
    }
    case PolicyKind::Zero:
      return Policy::zero();
    case PolicyKind::Custom:
      break;
  }
  throw std::runtime_error("policy kind not available from the command line");
}

int cmd_solve(const Session& s) {
  const ModelParams& p = s.cfg.model;
  const int N = s.cfg.solve.N;

  const auto open = solve_open_loop(p, N, s.grid);
  if (!open.ok()) {
    std::cout << "open-loop system non-solvable: escape time "
              << open.blowup->time << "\n";
    return kExitNonSolvable;
  }
  const auto closed = solve_closed_loop(p, N, s.grid);
  if (!closed.ok()) {
    std::cout << "closed-loop system non-solvable: escape time "
              << closed.blowup->time << "\n";
    return kExitNonSolvable;
  }
  const auto limit = solve_limit(p, s.grid);
  if (!limit.ok()) {
    std::cout << "limit non-solvability: escape time " << limit.blowup->time
              << "\n";
    return kExitNonSolvable;
  }

  const auto mat = [&](const char* name, const MatPath& path) {
    write_file(s.out / name,
               [&](std::ostream& os) { write_matrix_path_csv(os, path); });
  };
  const auto vec = [&](const char* name, const VecPath& path) {
    write_file(s.out / name,
               [&](std::ostream& os) { write_vector_path_csv(os, path); });
  };
  mat("open_P1.csv", open->P1);
  mat("open_P2.csv", open->P2);
  mat("open_P3.csv", open->P3);
  mat("open_P4.csv", open->P4);
  vec("open_s1.csv", open->s1);
  vec("open_s2.csv", open->s2);
  mat("closed_P1.csv", closed->P1);
  mat("closed_P2.csv", closed->P2);
  mat("closed_P3.csv", closed->P3);
  vec("closed_s1.csv", closed->s1);
  vec("closed_s2.csv", closed->s2);

  const FeedbackLaw open_law = open_loop_gains(*open, p);
  const FeedbackLaw closed_law = closed_loop_gains(*closed, p);
  mat("open_K1.csv", open_law.K1);
  mat("open_K2.csv", open_law.K2);
  vec("open_v.csv", open_law.v);
  mat("closed_K1.csv", closed_law.K1);
  mat("closed_K2.csv", closed_law.K2);
  vec("closed_v.csv", closed_law.v);

  mat("limit_P1.csv", limit->P1);
  mat("limit_P2.csv", limit->P2);
  vec("limit_s1.csv", limit->s1);
  mat("limit_P3_open.csv", limit->P3_open);
  mat("limit_P4_open.csv", limit->P4_open);
  vec("limit_s2_open.csv", limit->s2_open);
  mat("limit_P3_closed.csv", limit->P3_closed);
  vec("limit_s2_closed.csv", limit->s2_closed);
  write_file(s.out / "limit_summary.csv", [&](std::ostream& os) {
    write_limit_summary_csv(os, *limit);
  });

  double sym = 0.0;
  for (int k = 0; k <= s.grid.M; ++k)
    sym = std::max(
        sym, (closed->P1.node(k) - closed->P1.node(k).transpose()).norm());
  s.log("solved open, closed (N=" + std::to_string(N) +
        ") and limit systems");
  s.log("closed-loop P1 symmetry check: drift " + format_double(sym) +
        (sym <= 1e-8 ? " pass" : " FAIL"));
  s.log("artifacts in " + s.out.string());
  return kExitOk;
}

int cmd_converge(const Session& s) {
  const ModelParams& p = s.cfg.model;
  const auto limit = solve_limit(p, s.grid);
  if (!limit.ok()) {
    std::cout << "limit non-solvability: escape time " << limit.blowup->time
              << "\n";
    return kExitNonSolvable;
  }
  const auto& Ns = s.cfg.converge.Ns;
  const Tolerances& tol = s.cfg.tol;

  bool all_pass = true;
  const auto emit = [&](const std::string& base, const ConvergenceTable& t,
                        bool has_group2) {
    write_file(s.out / (base + ".csv"),
               [&](std::ostream& os) { write_convergence_csv(os, t); });
    const bool p1 = fit_passes(t.fit1, tol.slope_band, tol.r2_min);
    const bool p2 =
        !has_group2 || fit_passes(t.fit2, tol.slope_band, tol.r2_min);
    write_file(s.out / (base + ".verdict.json"), [&](std::ostream& os) {
      write_slope_verdict_json(os, t.fit1, tol.slope_band[0],
                               tol.slope_band[1], tol.r2_min);
    });
    s.log(fit_line(base, t.fit1, p1));
    if (has_group2) s.log(fit_line(base + " aux", t.fit2, p2));
    all_pass = all_pass && p1 && p2;
  };

  emit("converge_open",
       convergence_study(p, s.grid, Ns, EquilibriumKind::OpenLoop, *limit),
       true);
  emit("converge_closed",
       convergence_study(p, s.grid, Ns, EquilibriumKind::ClosedLoop, *limit),
       true);
  emit("gains_open",
       gain_convergence(p, s.grid, Ns, EquilibriumKind::OpenLoop, *limit),
       false);
  emit("gains_closed",
       gain_convergence(p, s.grid, Ns, EquilibriumKind::ClosedLoop, *limit),
       false);
  return all_pass ? kExitOk : kExitBandFail;
}

int cmd_simulate(const Session& s) {
  const ModelParams& p = s.cfg.model;
  const SimulateConfig& sc = s.cfg.simulate;
  if (!sc.has_seed) {
    std::cerr << "simulate: config must provide a seed\n";
    return kExitConfig;
  }
  const auto limit = solve_limit(p, s.grid);
  if (!limit.ok()) {
    std::cout << "limit non-solvability: escape time " << limit.blowup->time
              << "\n";
    return kExitNonSolvable;
  }

  std::vector<double> ns, errs;
  std::ostringstream table;
  table << "N,sup_mean_sq_deviation,std_error\n";
  for (int N : sc.Ns) {
    std::optional<BlowUp> law_blowup;
    const Policy policy =
        make_policy(p, N, sc.policy, s.grid, *limit, law_blowup);
    if (law_blowup) {
      std::cout << "law non-solvable at N=" << N << ": escape time "
                << law_blowup->time << "\n";
      return kExitNonSolvable;
    }
    SimOptions opts;
    opts.n_paths = sc.n_paths;
    opts.seed = sc.seed;
    opts.workers = sc.workers;
    opts.storage = StorageMode::MomentsOnly;
    const SimResult sim = simulate(p, N, policy, s.grid, opts, &limit->xbar);
    if (!sim.ok()) {
      std::cout << "simulation blow-up at N=" << N << " (replication "
                << sim.blowup->replication << ", player " << sim.blowup->player
                << ", t=" << sim.blowup->time << ")\n";
      return kExitNonSolvable;
    }
    write_file(s.out / ("mf_deviation_N" + std::to_string(N) + ".csv"),
               [&](std::ostream& os) { write_mf_deviation_csv(os, *sim); });
    const MeanFieldError err = summarize_mean_field_deviation(*sim);
    table << N << "," << format_double(err.sup_mean_sq) << ","
          << format_double(err.std_error) << "\n";
    ns.push_back(N);
    errs.push_back(err.sup_mean_sq);
    s.log("N=" + std::to_string(N) + " sup mean-sq deviation " +
          format_double(err.sup_mean_sq));
  }
  write_file(s.out / "mf_error.csv",
             [&](std::ostream& os) { os << table.str(); });

  const SlopeFit fit = fit_loglog(ns, errs);
  const Tolerances& tol = s.cfg.tol;
  const bool pass = fit_passes(fit, tol.mf_slope_band, 0.0);
  write_file(s.out / "mf_error.verdict.json", [&](std::ostream& os) {
    write_slope_verdict_json(os, fit, tol.mf_slope_band[0],
                             tol.mf_slope_band[1], 0.0);
  });
  s.log(fit_line("mean-field error", fit, pass));
  return pass ? kExitOk : kExitBandFail;
}

int cmd_nashgap(const Session& s) {
  const ModelParams& p = s.cfg.model;
  const auto limit = solve_limit(p, s.grid);
  if (!limit.ok()) {
    std::cout << "limit non-solvability: escape time " << limit.blowup->time
              << "\n";
    return kExitNonSolvable;
  }
  const NashGapReport rep = nash_gap_study(p, s.grid, s.cfg.nashgap.Ns,
                                           s.cfg.nashgap.policy, *limit);
  write_file(s.out / "nashgap.csv",
             [&](std::ostream& os) { write_nash_gap_csv(os, rep); });

  bool any_solvable = false;
  bool nonneg = true;
  for (const auto& row : rep.rows) {
    any_solvable = any_solvable || row.solvable;
    if (row.solvable && row.gap < -1e-8) nonneg = false;
    s.log("N=" + std::to_string(row.N) +
          (row.solvable ? " gap " + format_double(row.gap) : " non-solvable"));
  }
  if (!any_solvable) return kExitNonSolvable;

  const Tolerances& tol = s.cfg.tol;
  const bool pass = nonneg && fit_passes(rep.fit, tol.nash_slope_band, 0.0);
  write_file(s.out / "nashgap.verdict.json", [&](std::ostream& os) {
    write_slope_verdict_json(os, rep.fit, tol.nash_slope_band[0],
                             tol.nash_slope_band[1], 0.0);
  });
  s.log(fit_line("best-response gap", rep.fit, pass));
  return pass ? kExitOk : kExitBandFail;
}

int cmd_verify(const Session& s) {
  const ModelParams& p = s.cfg.model;
  const VerifyConfig& vc = s.cfg.verify;
  if (!vc.has_seed) {
    std::cerr << "verify: config must provide a seed\n";
    return kExitConfig;
  }
  const int N = vc.N;
  const Tolerances& tol = s.cfg.tol;

  const auto open = solve_open_loop(p, N, s.grid);
  const auto closed = solve_closed_loop(p, N, s.grid);
  if (!open.ok() || !closed.ok()) {
    std::cout << "finite-N system non-solvable\n";
    return kExitNonSolvable;
  }

  SimOptions opts;
  opts.n_paths = vc.n_paths;
  opts.seed = vc.seed;
  opts.workers = vc.workers;
  opts.storage = StorageMode::Full;

  struct Check {
    std::string name;
    bool pass;
    double value;
  };
  std::vector<Check> checks;

  const SimResult open_paths = simulate(
      p, N, Policy::centralized(open_loop_gains(*open, p)), s.grid, opts);
  const SimResult closed_paths = simulate(
      p, N, Policy::centralized(closed_loop_gains(*closed, p)), s.grid, opts);
  if (!open_paths.ok() || !closed_paths.ok()) {
    std::cout << "simulation blow-up during verification\n";
    return kExitNonSolvable;
  }

  const CostateReconstruction rec =
      reconstruct_costate(*open, *open_paths, p, 0);
  checks.push_back({"costate_residual",
                    rec.residual <= tol.residual_rtol * rec.scale,
                    rec.residual});
  const CostateReconstruction stat =
      reconstruct_costate(*closed, *closed_paths, p, 0);
  checks.push_back({"stationarity_residual",
                    stat.residual <= tol.residual_rtol * stat.scale,
                    stat.residual});

  TimeGrid conv_grid = s.grid;
  const int conv_cap = 600;
  if (conv_grid.M * p.m() > conv_cap) conv_grid.M = conv_cap / p.m();
  const ConvexityReport conv = check_convexity(p, N, conv_grid, conv_cap);
  checks.push_back({"convexity", conv.convex, conv.min_eigenvalue});

  const double V = value_function(*closed, p, N);
  const CostEstimate mc = evaluate_cost(*closed_paths, p, 0);
  const double dev = std::abs(V - mc.mean);
  checks.push_back({"value_function_vs_monte_carlo",
                    dev <= tol.value_mc_sigmas * mc.std_error, dev});

  if (vc.dump_paths) {
    write_file(s.out / "paths_open.bin", [&](std::ostream& os) {
      write_population_binary(os, *open_paths, p.n(), p.m());
    });
  }

  bool all_pass = true;
  std::ostringstream json;
  json << "{";
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& c = checks[i];
    all_pass = all_pass && c.pass;
    s.log(c.name + ": " + format_double(c.value) +
          (c.pass ? " pass" : " FAIL"));
    json << "\"" << c.name << "\":{\"value\":" << format_double(c.value)
         << ",\"pass\":" << (c.pass ? "true" : "false") << "}"
         << (i + 1 < checks.size() ? "," : "");
  }
  json << "}\n";
  write_file(s.out / "verify.json",
             [&](std::ostream& os) { os << json.str(); });
  return all_pass ? kExitOk : kExitBandFail;
}

int cmd_sweep(const Session& s) {
  const SweepConfig& sw = s.cfg.sweep;
  if (sw.scales.empty()) {
    std::cerr << "sweep: config must provide sweep.scales\n";
    return kExitConfig;
  }
  // Empirical solvability map: scales one coefficient and records where the
  // limit pair and the finite systems stop admitting solutions. No analytic
  // characterization is implied.
  std::ostringstream table;
  table << "scale,limit_solvable,limit_escape,open_solvable,open_escape,"
           "closed_solvable,closed_escape\n";
  for (double scale : sw.scales) {
    ModelParams q = s.cfg.model;
    Eigen::MatrixXd* field = nullptr;
    if (sw.field == "Q")
      field = &q.Q;
    else if (sw.field == "Qf")
      field = &q.Qf;
    else if (sw.field == "G")
      field = &q.G;
    else if (sw.field == "Gamma")
      field = &q.Gamma;
    else if (sw.field == "Gammaf")
      field = &q.Gammaf;
    else {
      std::cerr << "sweep: unknown field '" << sw.field << "'\n";
      return kExitConfig;
    }
    *field *= scale;
    const auto limit = solve_limit(q, s.grid);
    const auto open = solve_open_loop(q, sw.N, s.grid);
    const auto closed = solve_closed_loop(q, sw.N, s.grid);
    const auto entry = [&](bool ok, double escape) {
      return std::string(ok ? "1," : "0,") +
             (ok ? "" : format_double(escape));
    };
    table << format_double(scale) << ","
          << entry(limit.ok(), limit.ok() ? 0 : limit.blowup->time) << ","
          << entry(open.ok(), open.ok() ? 0 : open.blowup->time) << ","
          << entry(closed.ok(), closed.ok() ? 0 : closed.blowup->time)
          << "\n";
    s.log("scale " + format_double(scale) + ": limit " +
          (limit.ok() ? "solvable" : "non-solvable"));
  }
  write_file(s.out / "sweep.csv",
             [&](std::ostream& os) { os << table.str(); });
  s.log("empirical solvability map written to sweep.csv");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Linear-quadratic mean field game solver: finite-N open/closed-loop "
      "Riccati systems, population limit, convergence studies, population "
      "simulation and best-response verification"};
  app.require_subcommand(1);

  Cli cli;
  std::uint64_t seed_val = 0;
  bool seed_set = false;
  const auto add_common = [&](CLI::App* sub, bool stochastic) {
    sub->add_option("--config", cli.config_path, "experiment config JSON")
        ->required();
    sub->add_option("--out", cli.out_override, "output directory override");
    sub->add_flag("--quiet", cli.quiet, "suppress progress output");
    if (stochastic)
      sub->add_option("--seed", seed_val, "seed override")
          ->each([&seed_set](const std::string&) { seed_set = true; });
    return sub;
  };

  auto* solve = add_common(
      app.add_subcommand("solve", "solve the finite-N and limit systems, "
                                  "write trajectory CSVs"),
      false);
  auto* converge = add_common(
      app.add_subcommand("converge", "rescaled and gain convergence studies "
                                     "with slope verdicts"),
      false);
  auto* simulate_cmd = add_common(
      app.add_subcommand("simulate", "Monte Carlo mean-field approximation "
                                     "error across N"),
      true);
  auto* nashgap = add_common(
      app.add_subcommand("nashgap",
                         "best-response gap study of a policy across N"),
      false);
  auto* verify = add_common(
      app.add_subcommand("verify", "costate, stationarity, convexity and "
                                   "value-function checks"),
      true);
  auto* sweep = add_common(
      app.add_subcommand("sweep",
                         "empirical solvability map over a scaled coefficient"),
      false);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) cli.seed_override = seed_val;

  try {
    const Session session = open_session(cli);
    if (solve->parsed()) return cmd_solve(session);
    if (converge->parsed()) return cmd_converge(session);
    if (simulate_cmd->parsed()) return cmd_simulate(session);
    if (nashgap->parsed()) return cmd_nashgap(session);
    if (verify->parsed()) return cmd_verify(session);
    if (sweep->parsed()) return cmd_sweep(session);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
