#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lqmfg/model.hpp"

namespace lqmfg {
namespace {

using nlohmann::json;

// nlohmann reports parse errors by byte offset; convert to line:column so
// config mistakes are pinpointed in the file.
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

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::runtime_error(origin + ": " + what);
}

Eigen::MatrixXd as_matrix(const json& j, const std::string& origin,
                          const std::string& field) {
  if (j.is_number()) {  // scalar shorthand for a 1x1 matrix
    Eigen::MatrixXd M(1, 1);
    M(0, 0) = j.get<double>();
    return M;
  }
  if (!j.is_array() || j.empty())
    fail(origin, "field '" + field + "' must be a nested array (rows)");
  const auto& first = j.front();
  if (first.is_number()) {  // flat array = single row
    Eigen::MatrixXd M(1, j.size());
    for (std::size_t c = 0; c < j.size(); ++c) {
      if (!j[c].is_number())
        fail(origin, "field '" + field + "' has a non-numeric entry");
      M(0, c) = j[c].get<double>();
    }
    return M;
  }
  const std::size_t cols = first.size();
  Eigen::MatrixXd M(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      fail(origin, "field '" + field + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number())
        fail(origin, "field '" + field + "' has a non-numeric entry");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

Eigen::VectorXd as_vector(const json& j, const std::string& origin,
                          const std::string& field) {
  if (j.is_number()) {
    Eigen::VectorXd v(1);
    v(0) = j.get<double>();
    return v;
  }
  if (!j.is_array())
    fail(origin, "field '" + field + "' must be an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      fail(origin, "field '" + field + "' has a non-numeric entry");
    v(i) = j[i].get<double>();
  }
  return v;
}

const json& pick(const json& root, const std::string& origin,
                 const std::string& field) {
  auto it = root.find(field);
  if (it == root.end()) fail(origin, "missing field '" + field + "'");
  return *it;
}

}  // namespace

ModelParams parse_model_json(const std::string& text,
                             const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::ostringstream oss;
    oss << origin << ":" << line << ":" << col << ": " << e.what();
    throw std::runtime_error(oss.str());
  }
  if (!root.is_object()) fail(origin, "top level must be an object");

  ModelParams p;
  p.A = as_matrix(pick(root, origin, "A"), origin, "A");
  p.G = as_matrix(pick(root, origin, "G"), origin, "G");
  p.B = as_matrix(pick(root, origin, "B"), origin, "B");
  p.sigma = as_vector(pick(root, origin, "sigma"), origin, "sigma");
  p.Q = as_matrix(pick(root, origin, "Q"), origin, "Q");
  p.R = as_matrix(pick(root, origin, "R"), origin, "R");
  p.Gamma = as_matrix(pick(root, origin, "Gamma"), origin, "Gamma");
  p.eta = as_vector(pick(root, origin, "eta"), origin, "eta");
  p.Qf = as_matrix(pick(root, origin, "Qf"), origin, "Qf");
  p.Gammaf = as_matrix(pick(root, origin, "Gammaf"), origin, "Gammaf");
  p.etaf = as_vector(pick(root, origin, "etaf"), origin, "etaf");
  const json& T = pick(root, origin, "T");
  if (!T.is_number()) fail(origin, "field 'T' must be a number");
  p.T = T.get<double>();
  p.x0_mean = as_vector(pick(root, origin, "x0_mean"), origin, "x0_mean");
  p.x0_cov = as_matrix(pick(root, origin, "x0_cov"), origin, "x0_cov");

  const ValidationReport report = validate(p);
  if (!report.ok()) fail(origin, "invalid model: " + report.summary());
  return p;
}

ModelParams load_model_json(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error(file + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_json(buf.str(), file);
}

}  // namespace lqmfg
