#include "lqmfg/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lqmfg {
namespace {

bool is_symmetric(const Eigen::MatrixXd& M, double scale_tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).norm() <= scale_tol * (1.0 + M.norm());
}

void check_shape(std::vector<std::string>& out, const char* name,
                 const Eigen::MatrixXd& M, int rows, int cols) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream oss;
    oss << "dimension mismatch: " << name << " is " << M.rows() << "x"
        << M.cols() << ", expected " << rows << "x" << cols;
    out.push_back(oss.str());
  }
}

void check_len(std::vector<std::string>& out, const char* name,
               const Eigen::VectorXd& v, int len) {
  if (v.size() != len) {
    std::ostringstream oss;
    oss << "dimension mismatch: " << name << " has length " << v.size()
        << ", expected " << len;
    out.push_back(oss.str());
  }
}

}  // namespace

std::string ValidationReport::summary() const {
  if (ok()) return "pass";
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    s += v;
  }
  return s;
}

ValidationReport validate(const ModelParams& p) {
  ValidationReport report;
  auto& out = report.violations;

  const int n = static_cast<int>(p.A.rows());
  const int m = static_cast<int>(p.B.cols());
  if (n == 0) out.push_back("dimension mismatch: A is empty");
  if (m == 0) out.push_back("dimension mismatch: B has no columns");

  check_shape(out, "A", p.A, n, n);
  check_shape(out, "G", p.G, n, n);
  check_shape(out, "B", p.B, n, m);
  check_shape(out, "Q", p.Q, n, n);
  check_shape(out, "R", p.R, m, m);
  check_shape(out, "Gamma", p.Gamma, n, n);
  check_shape(out, "Qf", p.Qf, n, n);
  check_shape(out, "Gammaf", p.Gammaf, n, n);
  check_shape(out, "x0_cov", p.x0_cov, n, n);
  check_len(out, "sigma", p.sigma, n);
  check_len(out, "eta", p.eta, n);
  check_len(out, "etaf", p.etaf, n);
  check_len(out, "x0_mean", p.x0_mean, n);
  if (!out.empty()) return report;  // shape errors make the rest meaningless

  const double sym_tol = 1e-12;
  if (!is_symmetric(p.Q, sym_tol)) out.push_back("Q not symmetric");
  if (!is_symmetric(p.Qf, sym_tol)) out.push_back("Qf not symmetric");
  if (!is_symmetric(p.R, sym_tol)) out.push_back("R not symmetric");
  if (!is_symmetric(p.x0_cov, sym_tol)) out.push_back("x0_cov not symmetric");

  if (is_symmetric(p.R, sym_tol)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.R);
    const double r_min = 1e-12 * (1.0 + p.R.norm());
    if (es.eigenvalues().minCoeff() <= r_min)
      out.push_back("R not positive definite");
  }
  if (is_symmetric(p.x0_cov, sym_tol)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.x0_cov);
    if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + p.x0_cov.norm()))
      out.push_back("x0_cov not positive semidefinite");
  }
  if (!(p.T > 0.0)) out.push_back("nonpositive T");
  if (!p.A.allFinite() || !p.G.allFinite() || !p.B.allFinite() ||
      !p.Q.allFinite() || !p.R.allFinite() || !p.Gamma.allFinite() ||
      !p.Qf.allFinite() || !p.Gammaf.allFinite() || !p.sigma.allFinite() ||
      !p.eta.allFinite() || !p.etaf.allFinite() || !p.x0_mean.allFinite() ||
      !p.x0_cov.allFinite())
    out.push_back("non-finite coefficient");
  return report;
}

void require_valid(const ModelParams& p) {
  const ValidationReport report = validate(p);
  if (!report.ok())
    throw std::invalid_argument("invalid model parameters: " +
                                report.summary());
}

Eigen::MatrixXd control_gram(const ModelParams& p) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(p.R);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("R inversion failed");
  const Eigen::MatrixXd RinvBt = ldlt.solve(p.B.transpose());
  if (!RinvBt.allFinite()) throw std::runtime_error("R inversion failed");
  Eigen::MatrixXd gram = p.B * RinvBt;
  gram = 0.5 * (gram + gram.transpose()).eval();
  return gram;
}

Eigen::MatrixXd gain_factor(const ModelParams& p) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(p.R);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("R inversion failed");
  Eigen::MatrixXd f = ldlt.solve(p.B.transpose());
  if (!f.allFinite()) throw std::runtime_error("R inversion failed");
  return f;
}

}  // namespace lqmfg
