#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace lqmfg {

// Coefficient data of the linear-quadratic mean field game. Constant in
// time; each player carries one scalar Brownian motion with loading sigma.
// Q and Qf may be indefinite; R must be symmetric positive definite.
struct ModelParams {
  Eigen::MatrixXd A;        // n x n state drift
  Eigen::MatrixXd G;        // n x n mean-field coupling drift
  Eigen::MatrixXd B;        // n x m control map
  Eigen::VectorXd sigma;    // n   diffusion loading (scalar noise per player)
  Eigen::MatrixXd Q;        // n x n running state weight
  Eigen::MatrixXd R;        // m x m control weight
  Eigen::MatrixXd Gamma;    // n x n running mean-field target map
  Eigen::VectorXd eta;      // n   running target offset
  Eigen::MatrixXd Qf;       // n x n terminal weight
  Eigen::MatrixXd Gammaf;   // n x n terminal mean-field target map
  Eigen::VectorXd etaf;     // n   terminal target offset
  double T = 1.0;           // horizon
  Eigen::VectorXd x0_mean;  // n   common initial mean
  Eigen::MatrixXd x0_cov;   // n x n initial covariance, i.i.d. across players

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

// Structural checks shared by every solver: consistent shapes, symmetry of
// Q/Qf/R/x0_cov, positive definite R, PSD x0_cov, positive horizon.
// Side-effect free and idempotent; failures are reported, not thrown.
ValidationReport validate(const ModelParams& p);

// Throws std::invalid_argument listing every violation.
void require_valid(const ModelParams& p);

// Control Gram matrix B R^-1 B^T, symmetrized by averaging with its
// transpose after the solve. Throws std::runtime_error("R inversion failed")
// when R is numerically singular.
Eigen::MatrixXd control_gram(const ModelParams& p);

// R^-1 B^T, the common factor of every feedback-gain formula.
Eigen::MatrixXd gain_factor(const ModelParams& p);

// Loads a ModelParams from a JSON file (matrices as row-major nested
// arrays). Parse errors are reported with line and column; schema errors
// name the offending field. Throws std::runtime_error on failure.
ModelParams load_model_json(const std::string& file);

// Parses a ModelParams from already-parsed JSON text (same contract).
ModelParams parse_model_json(const std::string& text,
                             const std::string& origin = "<string>");

}  // namespace lqmfg
