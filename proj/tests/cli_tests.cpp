// End-to-end checks of the command-line front end: exit codes, artifact
// presence, error reporting, and byte-level reproducibility. Run as
//   cli_tests <path-to-lqmfg-binary> <path-to-configs-dir>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", what.c_str());
  if (!ok) ++g_failures;
}

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& cmd) {
  const fs::path log = fs::temp_directory_path() / "lqmfg_cli_test_log.txt";
  const std::string full = cmd + " > " + log.string() + " 2>&1";
  const int status = std::system(full.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: cli_tests <lqmfg-binary> <configs-dir>\n";
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path configs = argv[2];
  const fs::path work =
      fs::temp_directory_path() / ("lqmfg_cli_" + std::to_string(getpid()));
  fs::create_directories(work);

  // smaller copy of the benchmark config for quick end-to-end runs
  const fs::path quick_cfg = work / "quick.json";
  write(quick_cfg, R"({
    "model": {
      "A": 0.2, "G": 0.1, "B": 1.0, "sigma": [0.3],
      "Q": 1.0, "R": 1.0, "Gamma": 0.5, "eta": [1.0],
      "Qf": 1.0, "Gammaf": 0.5, "etaf": [1.0],
      "T": 1.0, "x0_mean": [1.0], "x0_cov": 0.04
    },
    "grid": { "M": 100 },
    "out": ")" + (work / "out").string() + R"(",
    "solve": { "N": 8 },
    "converge": { "Ns": [2, 4, 8, 16] },
    "simulate": { "Ns": [4, 16], "n_paths": 200, "seed": 7, "policy": "decentralized", "workers": 1 },
    "nashgap": { "Ns": [4, 8, 16], "policy": "decentralized" },
    "verify": { "N": 4, "n_paths": 500, "seed": 7 },
    "sweep": { "field": "Q", "N": 4, "scales": [-60.0, 1.0] }
  })");

  // solve: success, artifacts, reproducibility
  {
    const RunResult r = run(bin + " solve --config " + quick_cfg.string());
    check(r.exit_code == 0, "solve exits 0 on the benchmark");
    check(fs::exists(work / "out/open_P1.csv") &&
              fs::exists(work / "out/closed_P1.csv") &&
              fs::exists(work / "out/limit_summary.csv"),
          "solve writes the trajectory artifacts");
    check(r.output.find("symmetry check") != std::string::npos &&
              r.output.find("pass") != std::string::npos,
          "solve logs the closed-loop symmetry check");
    const std::string first = slurp(work / "out/open_P1.csv");
    run(bin + " solve --config " + quick_cfg.string());
    check(slurp(work / "out/open_P1.csv") == first,
          "solve output is byte-identical on rerun");
  }

  // malformed config: exit 1 with line:column
  {
    const fs::path bad = work / "bad.json";
    write(bad, "{ \"model\": { \"A\": [1, \n  ,2] } }");
    const RunResult r = run(bin + " solve --config " + bad.string());
    check(r.exit_code == 1, "malformed JSON exits 1");
    check(r.output.find(":2:") != std::string::npos,
          "parse error carries line and column");
  }

  // model referenced by path
  {
    const RunResult r =
        run(bin + " solve --config " +
            (configs / "benchmark_by_path.json").string() + " --out " +
            (work / "bypath").string());
    check(r.exit_code == 0, "model can be loaded from a referenced path");
  }

  // blow-up probe: exit 2 with escape time
  {
    const RunResult r =
        run(bin + " solve --config " +
            (configs / "blowup_probe.json").string() + " --out " +
            (work / "blowup").string());
    check(r.exit_code == 2, "indefinite long-horizon model exits 2");
    check(r.output.find("escape time") != std::string::npos,
          "blow-up message reports the escape time");
  }

  // converge: pass verdicts, artifacts
  {
    const RunResult r = run(bin + " converge --config " + quick_cfg.string());
    check(r.exit_code == 0, "converge exits 0 on the benchmark");
    check(fs::exists(work / "out/converge_open.csv") &&
              fs::exists(work / "out/converge_open.verdict.json") &&
              fs::exists(work / "out/gains_closed.verdict.json"),
          "converge writes tables and verdicts");
    const std::string verdict = slurp(work / "out/converge_open.verdict.json");
    check(verdict.find("\"pass\":true") != std::string::npos,
          "converge verdict passes");
  }

  // simulate: determinism across worker counts (same seed)
  {
    const RunResult r1 = run(bin + " simulate --config " + quick_cfg.string() +
                             " --out " + (work / "sim1").string());
    check(r1.exit_code == 0, "simulate exits 0 on the benchmark");
    const fs::path cfg4 = work / "quick4.json";
    std::string text = slurp(quick_cfg);
    const auto pos = text.find("\"workers\": 1");
    text.replace(pos, std::string("\"workers\": 1").size(), "\"workers\": 4");
    write(cfg4, text);
    const RunResult r2 = run(bin + " simulate --config " + cfg4.string() +
                             " --out " + (work / "sim4").string());
    check(r2.exit_code == 0, "simulate exits 0 with four workers");
    check(slurp(work / "sim1/mf_error.csv") ==
                  slurp(work / "sim4/mf_error.csv") &&
              slurp(work / "sim1/mf_deviation_N16.csv") ==
                  slurp(work / "sim4/mf_deviation_N16.csv"),
          "simulate output is byte-identical across worker counts");
  }

  // simulate without a seed: config error
  {
    const fs::path noseed = work / "noseed.json";
    std::string text = slurp(quick_cfg);
    const auto pos = text.find("\"seed\": 7,");
    text.replace(pos, std::string("\"seed\": 7,").size(), "");
    write(noseed, text);
    const RunResult r = run(bin + " simulate --config " + noseed.string());
    check(r.exit_code == 1, "stochastic command without a seed exits 1");
  }

  // nashgap: pass verdict
  {
    const RunResult r = run(bin + " nashgap --config " + quick_cfg.string());
    check(r.exit_code == 0, "nashgap exits 0 on the benchmark");
    check(slurp(work / "out/nashgap.verdict.json").find("\"pass\":true") !=
              std::string::npos,
          "nashgap verdict passes");
  }

  // verify: identity checks pass
  {
    const RunResult r = run(bin + " verify --config " + quick_cfg.string());
    check(r.exit_code == 0, "verify exits 0 on the benchmark");
    const std::string verdict = slurp(work / "out/verify.json");
    check(verdict.find("\"costate_residual\"") != std::string::npos &&
              verdict.find("\"pass\":false") == std::string::npos,
          "verify reports all identity checks as passing");
  }

  // acceptance-band failure: an impossible slope band must exit 3
  {
    const fs::path strict = work / "strict.json";
    std::string text = slurp(quick_cfg);
    text.insert(text.rfind('}'),
                R"(, "tolerances": { "slope_band": [-0.2, -0.1] })");
    write(strict, text);
    const RunResult r = run(bin + " converge --config " + strict.string() +
                            " --out " + (work / "strict_out").string());
    check(r.exit_code == 3, "converge exits 3 when the slope band fails");
    check(slurp(work / "strict_out/converge_open.verdict.json")
                  .find("\"pass\":false") != std::string::npos,
          "failing verdict is recorded in the JSON");
  }

  // sweep: empirical solvability map
  {
    const RunResult r = run(bin + " sweep --config " + quick_cfg.string());
    check(r.exit_code == 0, "sweep exits 0");
    const std::string table = slurp(work / "out/sweep.csv");
    check(table.find("\n-60,0,") != std::string::npos,
          "sweep marks the strongly indefinite scale non-solvable");
    check(table.find("\n1,1,") != std::string::npos,
          "sweep marks the unit scale solvable");
  }

  fs::remove_all(work);
  std::printf("%s: %d failure(s)\n", g_failures == 0 ? "OK" : "FAILED",
              g_failures);
  return g_failures == 0 ? 0 : 1;
}
