#pragma once

// Coupled Riccati-like equations for Markov jump linear systems with a hidden
// mode, solved by value iteration on the fixed-point map
//   T_i(M) = S_AA,i - S_AB,i (S_BB,i)^+ S_BA,i + I,
// where S_XY,i = sum_j X_j' p_ij M_j Y_j.

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "feedback_lab/models.hpp"

namespace fbl {

/// Moore-Penrose inverse via SVD; singular values below 1e-10 * sigma_max
/// are treated as zero.
Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& a);

Eigen::MatrixXd riccati_rhs(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec, std::size_t mode);

/// K_i = (S_BB,i)^+ S_BA,i, so that u = -K_i x.
Eigen::MatrixXd riccati_gain(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec, std::size_t mode);

struct RiccatiSolution {
  std::vector<Eigen::MatrixXd> m;
  std::vector<Eigen::MatrixXd> gains;
  std::size_t iterations = 0;
  double residual = 0.0;
};

enum class RiccatiStatus { Converged, NoSolution, Indeterminate };
const char* to_string(RiccatiStatus s);

struct RiccatiOptions {
  double tol = 1e-10;
  std::size_t max_iter = 10000;
  double divergence_norm = 1e12;
  std::size_t growth_window = 100;
};

struct RiccatiOutcome {
  RiccatiStatus status = RiccatiStatus::Indeterminate;
  std::optional<RiccatiSolution> solution;
  std::size_t iterations = 0;
  /// max_i ||M_i||_max at the last iterate.
  double last_norm = 0.0;
};

RiccatiOutcome solve_coupled_riccati(const MjlsSpec& spec, const RiccatiOptions& opts = {});

/// max_i ||T_i(M) - M_i||_max, evaluated from scratch.
double riccati_residual(const RiccatiSolution& sol, const MjlsSpec& spec);
double riccati_residual(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec);

}  // namespace fbl
