#include "feedback_lab/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace fbl {

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return Eigen::MatrixXd(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = 1e-10 * (s.size() > 0 ? s(0) : 0.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

namespace {

struct ModeSums {
  Eigen::MatrixXd aa, ab, bb;
};

ModeSums mode_sums(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec, std::size_t i) {
  const auto n = static_cast<Eigen::Index>(spec.state_dim());
  const auto k = static_cast<Eigen::Index>(spec.input_dim());
  ModeSums s{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, k), Eigen::MatrixXd::Zero(k, k)};
  for (std::size_t j = 0; j < spec.modes(); ++j) {
    const double p = spec.chain(i, j);
    if (p == 0.0) continue;
    const Eigen::MatrixXd pm = p * m[j];
    s.aa.noalias() += spec.a[j].transpose() * pm * spec.a[j];
    s.ab.noalias() += spec.a[j].transpose() * pm * spec.b[j];
    s.bb.noalias() += spec.b[j].transpose() * pm * spec.b[j];
  }
  return s;
}

double max_abs(const Eigen::MatrixXd& x) { return x.cwiseAbs().maxCoeff(); }

}  // namespace

const char* to_string(RiccatiStatus s) {
  switch (s) {
    case RiccatiStatus::Converged: return "CONVERGED";
    case RiccatiStatus::NoSolution: return "NO_SOLUTION";
    case RiccatiStatus::Indeterminate: return "INDETERMINATE";
  }
  return "?";
}

Eigen::MatrixXd riccati_rhs(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec, std::size_t mode) {
  if (m.size() != spec.modes()) throw ConfigError("need one M per mode");
  const auto s = mode_sums(m, spec, mode);
  Eigen::MatrixXd x = s.aa - s.ab * pseudoinverse(s.bb) * s.ab.transpose();
  x += Eigen::MatrixXd::Identity(x.rows(), x.cols());
  return 0.5 * (x + x.transpose());
}

Eigen::MatrixXd riccati_gain(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec, std::size_t mode) {
  const auto s = mode_sums(m, spec, mode);
  return pseudoinverse(s.bb) * s.ab.transpose();
}

double riccati_residual(const std::vector<Eigen::MatrixXd>& m, const MjlsSpec& spec) {
  double r = 0.0;
  for (std::size_t i = 0; i < spec.modes(); ++i) r = std::max(r, max_abs(riccati_rhs(m, spec, i) - m[i]));
  return r;
}

double riccati_residual(const RiccatiSolution& sol, const MjlsSpec& spec) { return riccati_residual(sol.m, spec); }

RiccatiOutcome solve_coupled_riccati(const MjlsSpec& spec, const RiccatiOptions& opts) {
  if (!(opts.tol > 0.0) || opts.max_iter < 1) throw ConfigError("riccati: tol > 0 and max_iter >= 1 required");
  const auto n = static_cast<Eigen::Index>(spec.state_dim());
  std::vector<Eigen::MatrixXd> m(spec.modes(), Eigen::MatrixXd::Identity(n, n));
  std::vector<Eigen::MatrixXd> next(spec.modes());
  std::deque<double> norms;
  RiccatiOutcome out;

  for (std::size_t k = 1; k <= opts.max_iter; ++k) {
    double step = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < spec.modes(); ++i) {
      next[i] = riccati_rhs(m, spec, i);
      step = std::max(step, max_abs(next[i] - m[i]));
      norm = std::max(norm, max_abs(next[i]));
    }
    m.swap(next);
    out.iterations = k;
    out.last_norm = norm;
    if (!std::isfinite(norm) || norm > opts.divergence_norm) {
      out.status = RiccatiStatus::NoSolution;
      return out;
    }
    if (step < opts.tol) {
      RiccatiSolution sol;
      sol.m = m;
      for (std::size_t i = 0; i < spec.modes(); ++i) sol.gains.push_back(riccati_gain(m, spec, i));
      sol.iterations = k;
      sol.residual = riccati_residual(m, spec);
      for (const auto& mi : m) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mi, Eigen::EigenvaluesOnly);
        if (!(eig.eigenvalues().minCoeff() > 0.0)) {
          out.status = RiccatiStatus::Indeterminate;
          return out;
        }
      }
      out.status = RiccatiStatus::Converged;
      out.solution = std::move(sol);
      return out;
    }
    norms.push_back(norm);
    if (norms.size() > opts.growth_window + 1) norms.pop_front();
  }

  bool growing = norms.size() == opts.growth_window + 1;
  for (std::size_t i = 1; growing && i < norms.size(); ++i) growing = norms[i] > norms[i - 1];
  out.status = growing ? RiccatiStatus::NoSolution : RiccatiStatus::Indeterminate;
  return out;
}

}  // namespace fbl
