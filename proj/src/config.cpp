#include "lqmfg/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace lqmfg {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::runtime_error(origin + ": " + what);
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::vector<int> int_list(const json& j, const std::string& origin,
                          const std::string& field) {
  if (!j.is_array() || j.empty())
    fail(origin, "field '" + field + "' must be a non-empty array");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() < 1)
      fail(origin, "field '" + field + "' must hold positive integers");
    out.push_back(v.get<int>());
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1])
      fail(origin, "field '" + field + "' must be strictly increasing");
  return out;
}

void read_band(const json& j, const std::string& origin,
               const std::string& field, double band[2]) {
  if (!j.is_array() || j.size() != 2)
    fail(origin, "field '" + field + "' must be [lo, hi]");
  band[0] = j[0].get<double>();
  band[1] = j[1].get<double>();
  if (band[0] >= band[1]) fail(origin, "field '" + field + "' must be ordered");
}

std::uint64_t read_seed(const json& j, const std::string& origin,
                        const std::string& field) {
  if (!j.is_number_unsigned() && !j.is_number_integer())
    fail(origin, "field '" + field + "' must be an unsigned integer");
  return j.get<std::uint64_t>();
}

}  // namespace

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "centralized-open-loop") return PolicyKind::CentralizedOpenLoop;
  if (name == "centralized-closed-loop")
    return PolicyKind::CentralizedClosedLoop;
  if (name == "decentralized") return PolicyKind::Decentralized;
  if (name == "zero") return PolicyKind::Zero;
  throw std::runtime_error("unknown policy kind '" + name + "'");
}

ExperimentConfig load_experiment_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) fail(file, "cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream oss;
    oss << file << ":" << line << ":" << col << ": " << e.what();
    throw std::runtime_error(oss.str());
  }
  if (!root.is_object()) fail(file, "top level must be an object");

  ExperimentConfig cfg;

  const auto model_it = root.find("model");
  if (model_it == root.end()) fail(file, "missing field 'model'");
  if (model_it->is_string()) {
    const std::filesystem::path base = std::filesystem::path(file).parent_path();
    const std::string model_path =
        (base / model_it->get<std::string>()).string();
    if (!std::filesystem::exists(model_path))
      fail(file, "model file '" + model_path + "' does not exist");
    cfg.model = load_model_json(model_path);
  } else if (model_it->is_object()) {
    cfg.model = parse_model_json(model_it->dump(), file + "#model");
  } else {
    fail(file, "field 'model' must be a path or an object");
  }

  if (auto it = root.find("grid"); it != root.end()) {
    if (!it->is_object() || !it->contains("M"))
      fail(file, "field 'grid' must be an object with 'M'");
    cfg.M = (*it)["M"].get<int>();
    if (cfg.M < 1) fail(file, "grid.M must be >= 1");
  }
  if (auto it = root.find("out"); it != root.end())
    cfg.out = it->get<std::string>();

  if (auto it = root.find("tolerances"); it != root.end()) {
    const json& t = *it;
    if (t.contains("blowup_norm"))
      cfg.tol.blowup_norm = t["blowup_norm"].get<double>();
    if (t.contains("sim_blowup_norm"))
      cfg.tol.sim_blowup_norm = t["sim_blowup_norm"].get<double>();
    if (t.contains("residual_rtol"))
      cfg.tol.residual_rtol = t["residual_rtol"].get<double>();
    if (t.contains("value_mc_sigmas"))
      cfg.tol.value_mc_sigmas = t["value_mc_sigmas"].get<double>();
    if (t.contains("r2_min")) cfg.tol.r2_min = t["r2_min"].get<double>();
    if (t.contains("slope_band"))
      read_band(t["slope_band"], file, "slope_band", cfg.tol.slope_band);
    if (t.contains("mf_slope_band"))
      read_band(t["mf_slope_band"], file, "mf_slope_band",
                cfg.tol.mf_slope_band);
    if (t.contains("nash_slope_band"))
      read_band(t["nash_slope_band"], file, "nash_slope_band",
                cfg.tol.nash_slope_band);
  }

  if (auto it = root.find("solve"); it != root.end()) {
    cfg.solve.N = it->value("N", cfg.solve.N);
    if (cfg.solve.N < 1) fail(file, "solve.N must be >= 1");
  }
  if (auto it = root.find("converge"); it != root.end()) {
    if (it->contains("Ns")) cfg.converge.Ns = int_list((*it)["Ns"], file, "converge.Ns");
  }
  if (auto it = root.find("simulate"); it != root.end()) {
    const json& s = *it;
    if (s.contains("Ns")) cfg.simulate.Ns = int_list(s["Ns"], file, "simulate.Ns");
    cfg.simulate.n_paths = s.value("n_paths", cfg.simulate.n_paths);
    if (s.contains("seed")) {
      cfg.simulate.seed = read_seed(s["seed"], file, "simulate.seed");
      cfg.simulate.has_seed = true;
    }
    if (s.contains("policy"))
      cfg.simulate.policy = parse_policy_kind(s["policy"].get<std::string>());
    cfg.simulate.workers = s.value("workers", 0);
    if (cfg.simulate.n_paths < 1) fail(file, "simulate.n_paths must be >= 1");
  }
  if (auto it = root.find("nashgap"); it != root.end()) {
    const json& s = *it;
    if (s.contains("Ns")) cfg.nashgap.Ns = int_list(s["Ns"], file, "nashgap.Ns");
    if (s.contains("policy"))
      cfg.nashgap.policy = parse_policy_kind(s["policy"].get<std::string>());
  }
  if (auto it = root.find("verify"); it != root.end()) {
    const json& s = *it;
    cfg.verify.N = s.value("N", cfg.verify.N);
    cfg.verify.n_paths = s.value("n_paths", cfg.verify.n_paths);
    if (s.contains("seed")) {
      cfg.verify.seed = read_seed(s["seed"], file, "verify.seed");
      cfg.verify.has_seed = true;
    }
    cfg.verify.workers = s.value("workers", 0);
    cfg.verify.dump_paths = s.value("dump_paths", false);
    if (cfg.verify.N < 2) fail(file, "verify.N must be >= 2");
  }
  if (auto it = root.find("sweep"); it != root.end()) {
    const json& s = *it;
    cfg.sweep.field = s.value("field", cfg.sweep.field);
    cfg.sweep.N = s.value("N", cfg.sweep.N);
    if (s.contains("scales")) {
      for (const auto& v : s["scales"])
        cfg.sweep.scales.push_back(v.get<double>());
    }
  }
  return cfg;
}

}  // namespace lqmfg
