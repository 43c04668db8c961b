#include "feedback_lab/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fbl {

RlsState::RlsState(const RlsConfig& cfg) : theta_(cfg.theta0), root_info_(std::sqrt(cfg.s0)) {
  if (!(cfg.s0 >= 0.0)) throw ConfigError("RLS prior information must be nonnegative");
}

void RlsState::update(double phi, double z) {
  ++t_;
  if (phi == 0.0) return;
  const double root = std::hypot(root_info_, phi);
  // theta += phi (z - theta phi) / s', split so neither factor overflows.
  theta_ += (phi / root) * ((z - theta_ * phi) / root);
  root_info_ = root;
}

RlsState rls_update(RlsState state, double phi, double z) {
  state.update(phi, z);
  return state;
}

double adaptive_mv_control(const RlsState& state, double fy) { return -state.theta_hat() * fy; }

void NnHistory::append(const Transition& r) {
  if (records_.empty()) {
    lo_ = hi_ = r.y;
  } else {
    lo_ = std::min(lo_, r.y);
    hi_ = std::max(hi_, r.y);
  }
  index_.emplace(r.y, records_.size());  // keeps the first index for repeated y
  records_.push_back(r);
}

std::size_t NnHistory::nearest(double y) const {
  if (records_.empty()) throw std::logic_error("nearest neighbour of an empty history");
  auto above = index_.lower_bound(y);
  if (above == index_.end()) return std::prev(above)->second;
  if (above == index_.begin()) return above->second;
  auto below = std::prev(above);
  const double da = above->first - y;
  const double db = y - below->first;
  if (da < db) return above->second;
  if (db < da) return below->second;
  return std::min(above->second, below->second);
}

double NnHistory::lower(double y) const { return records_.empty() ? y : std::min(lo_, y); }
double NnHistory::upper(double y) const { return records_.empty() ? y : std::max(hi_, y); }

NnEstimate nn_estimate(const NnHistory& hist, double y) {
  const auto i = hist.nearest(y);
  const auto& r = hist[i];
  return {r.y_next - r.u, std::fabs(y - r.y), i};
}

double switching_control(const NnHistory& hist, double y, double eps, double y_star_next) {
  if (hist.empty()) return 0.0;
  const auto est = nn_estimate(hist, y);
  if (est.gap > eps) return -est.fhat + 0.5 * (hist.lower(y) + hist.upper(y));
  return -est.fhat + y_star_next;
}

double sampled_control(const NnHistory& samples, double x, const SampledSpec& spec, double kappa) {
  if (samples.empty()) return 0.0;
  const auto& s = samples[samples.nearest(x)];
  const double h = spec.period;
  const double f_tilde = (s.y_next - s.y) / h - s.u;
  const double bound = kappa * (spec.lipschitz * std::fabs(x) + spec.offset);
  return std::clamp(-f_tilde - x / h, -bound, bound);
}

MjlsControllerState::MjlsControllerState(std::vector<Eigen::MatrixXd> gains, std::size_t modes)
    : gains_(std::move(gains)),
      posterior_(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(modes), 1.0 / static_cast<double>(modes))) {
  if (gains_.size() != modes) throw ConfigError("need one gain per mode");
}

void MjlsControllerState::record(const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  prev_x_ = x;
  prev_u_ = u;
}

std::size_t mjls_estimate_mode(MjlsControllerState& state, const Eigen::VectorXd& x_now, const MjlsSpec& spec) {
  if (!state.prev_x_) throw std::logic_error("mode estimation needs a recorded transition");
  std::size_t best = 0;
  double best_res = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < spec.modes(); ++i) {
    const double r = (x_now - spec.a[i] * *state.prev_x_ - spec.b[i] * *state.prev_u_).norm();
    if (r < best_res) {
      best_res = r;
      best = i;
    }
  }
  state.last_estimate_ = best;
  state.posterior_ = spec.chain.transition().row(static_cast<Eigen::Index>(best)).transpose();
  return best;
}

Eigen::VectorXd mjls_control(const MjlsControllerState& state, const Eigen::VectorXd& x) {
  std::size_t i = 0;
  if (state.last_estimate_) {
    i = *state.last_estimate_;
  } else {
    Eigen::Index best = 0;
    state.posterior_.maxCoeff(&best);
    i = static_cast<std::size_t>(best);
  }
  return -state.gains_[i] * x;
}

AdaptiveMinimumVariance::AdaptiveMinimumVariance(PowerGrowthFn f, RlsConfig cfg) : f_(f), rls_(cfg) {}

double AdaptiveMinimumVariance::next(double y) {
  if (prev_phi_) rls_.update(*prev_phi_, y - prev_u_);
  const double phi = f_(y);
  const double u = adaptive_mv_control(rls_, phi);
  prev_phi_ = phi;
  prev_u_ = u;
  return u;
}

SwitchingFeedback::SwitchingFeedback(double eps, std::function<double(std::size_t)> reference)
    : eps_(eps), reference_(std::move(reference)) {
  if (!(eps > 0.0)) throw ConfigError("switching threshold eps must be positive");
}

double SwitchingFeedback::next(double y) {
  if (prev_y_) hist_.append({*prev_y_, prev_u_, y});
  const double y_star = reference_ ? reference_(t_ + 1) : 0.0;
  const double u = switching_control(hist_, y, eps_, y_star);
  prev_y_ = y;
  prev_u_ = u;
  ++t_;
  return u;
}

SampledFeedback::SampledFeedback(SampledSpec spec, double kappa) : spec_(spec), kappa_(kappa) {
  if (!(kappa > 0.0)) throw ConfigError("clip factor kappa must be positive");
}

double SampledFeedback::next(double x) {
  if (prev_x_) samples_.append({*prev_x_, prev_u_, x});
  const double u = sampled_control(samples_, x, spec_, kappa_);
  prev_x_ = x;
  prev_u_ = u;
  return u;
}

MjlsFeedback::MjlsFeedback(MjlsSpec spec, std::vector<Eigen::MatrixXd> gains)
    : spec_(std::move(spec)), state_(std::move(gains), spec_.modes()) {
  for (const auto& k : state_.gains())
    if (static_cast<std::size_t>(k.rows()) != spec_.input_dim() ||
        static_cast<std::size_t>(k.cols()) != spec_.state_dim())
      throw ConfigError("gain dimensions do not match the MJLS spec");
}

Eigen::VectorXd MjlsFeedback::next(const Eigen::VectorXd& x) {
  if (state_.has_previous()) mjls_estimate_mode(state_, x, spec_);
  Eigen::VectorXd u = mjls_control(state_, x);
  state_.record(x, u);
  return u;
}

}  // namespace fbl
