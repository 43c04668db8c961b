#pragma once

// Feedback laws. Every law sees only the observations up to the current time:
// the streaming laws below receive one new observation per call and keep
// their own append-only history.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedback_lab/models.hpp"
#include "feedback_lab/riccati.hpp"

namespace fbl {

// ---------------------------------------------------------------------------
// Recursive least squares for y_{t+1} = theta f(y_t) + u_t + w_{t+1}.

struct RlsConfig {
  /// Prior information s_0 (Gaussian prior N(theta_0, 1/s_0) up to noise scale).
  double s0 = 1e-6;
  double theta0 = 0.0;

  static RlsConfig bayes(double theta_mean) { return {1.0, theta_mean}; }
};

/// Scalar least-squares state. The information s is carried as its square
/// root so that regressors near the blowup guard do not overflow.
class RlsState {
 public:
  explicit RlsState(const RlsConfig& cfg = {});

  double theta_hat() const { return theta_; }
  double info() const { return root_info_ * root_info_; }
  double root_info() const { return root_info_; }
  std::size_t t() const { return t_; }

  /// phi = f(y_t), z = y_{t+1} - u_t.
  void update(double phi, double z);

 private:
  double theta_;
  double root_info_;
  std::size_t t_ = 0;
};

RlsState rls_update(RlsState state, double phi, double z);
double adaptive_mv_control(const RlsState& state, double fy);

// ---------------------------------------------------------------------------
// Nearest-neighbour history shared by the nonparametric and sampled laws.

struct Transition {
  double y = 0.0;
  double u = 0.0;
  double y_next = 0.0;
};

class NnHistory {
 public:
  void append(const Transition& r);
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const std::vector<Transition>& records() const { return records_; }
  const Transition& operator[](std::size_t i) const { return records_[i]; }

  /// argmin_i |y - y_i|, ties to the smallest index. Requires !empty().
  std::size_t nearest(double y) const;

  /// Running min/max of the stored y_i together with y.
  double lower(double y) const;
  double upper(double y) const;

 private:
  std::vector<Transition> records_;
  std::map<double, std::size_t> index_;  // y_i -> first index with that value
  double lo_ = 0.0;
  double hi_ = 0.0;
};

struct NnEstimate {
  double fhat = 0.0;
  double gap = 0.0;
  std::size_t index = 0;
};

/// fhat = y_{i*+1} - u_{i*} at the nearest stored y_{i*}. Throws on empty history.
NnEstimate nn_estimate(const NnHistory& hist, double y);

/// Stabilizing/tracking switch: far from every visited point (gap > eps)
/// steer to the midpoint of the visited range, otherwise track y_star_next.
double switching_control(const NnHistory& hist, double y, double eps, double y_star_next);

/// Certainty-equivalence law for the sampled-data loop: nearest-neighbour
/// secant estimate of f, then u = -f_tilde - x/h clipped to kappa*(L|x| + c).
double sampled_control(const NnHistory& samples, double x, const SampledSpec& spec, double kappa = 4.0);

// ---------------------------------------------------------------------------
// Hidden-mode MJLS law.

class MjlsControllerState {
 public:
  MjlsControllerState(std::vector<Eigen::MatrixXd> gains, std::size_t modes);

  const std::vector<Eigen::MatrixXd>& gains() const { return gains_; }
  const Eigen::VectorXd& posterior() const { return posterior_; }
  std::optional<std::size_t> last_estimate() const { return last_estimate_; }
  bool has_previous() const { return prev_x_.has_value(); }

  void record(const Eigen::VectorXd& x, const Eigen::VectorXd& u);

 private:
  friend std::size_t mjls_estimate_mode(MjlsControllerState&, const Eigen::VectorXd&, const MjlsSpec&);
  friend Eigen::VectorXd mjls_control(const MjlsControllerState&, const Eigen::VectorXd&);

  std::vector<Eigen::MatrixXd> gains_;
  Eigen::VectorXd posterior_;
  std::optional<std::size_t> last_estimate_;
  std::optional<Eigen::VectorXd> prev_x_;
  std::optional<Eigen::VectorXd> prev_u_;
};

/// Residual-matching estimate of the previous mode; the posterior becomes the
/// transition row of that mode.
std::size_t mjls_estimate_mode(MjlsControllerState& state, const Eigen::VectorXd& x_now, const MjlsSpec& spec);

/// u = -K_i x with i the most recent mode estimate (argmax of the prior
/// before any transition has been observed).
Eigen::VectorXd mjls_control(const MjlsControllerState& state, const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Streaming laws driven by the simulator.

class ScalarFeedbackLaw {
 public:
  virtual ~ScalarFeedbackLaw() = default;
  /// u_t given the newest observation y_t.
  virtual double next(double y) = 0;
  virtual std::string name() const = 0;
};

class ZeroControl final : public ScalarFeedbackLaw {
 public:
  double next(double) override { return 0.0; }
  std::string name() const override { return "zero"; }
};

/// u_t = -theta_t f(y_t), theta_t from RLS on the regressor f(y).
class AdaptiveMinimumVariance final : public ScalarFeedbackLaw {
 public:
  AdaptiveMinimumVariance(PowerGrowthFn f, RlsConfig cfg);
  double next(double y) override;
  std::string name() const override { return "mv-rls"; }
  const RlsState& estimator() const { return rls_; }

 private:
  PowerGrowthFn f_;
  RlsState rls_;
  std::optional<double> prev_phi_;
  double prev_u_ = 0.0;
};

class SwitchingFeedback final : public ScalarFeedbackLaw {
 public:
  /// reference(t) returns y*_{t}; defaults to zero.
  explicit SwitchingFeedback(double eps, std::function<double(std::size_t)> reference = {});
  double next(double y) override;
  std::string name() const override { return "switching"; }
  const NnHistory& history() const { return hist_; }

 private:
  double eps_;
  std::function<double(std::size_t)> reference_;
  NnHistory hist_;
  std::optional<double> prev_y_;
  double prev_u_ = 0.0;
  std::size_t t_ = 0;
};

class SampledFeedback final : public ScalarFeedbackLaw {
 public:
  explicit SampledFeedback(SampledSpec spec, double kappa = 4.0);
  double next(double x) override;
  std::string name() const override { return "sampled-nn"; }

 private:
  SampledSpec spec_;
  double kappa_;
  NnHistory samples_;
  std::optional<double> prev_x_;
  double prev_u_ = 0.0;
};

class VectorFeedbackLaw {
 public:
  virtual ~VectorFeedbackLaw() = default;
  virtual Eigen::VectorXd next(const Eigen::VectorXd& x) = 0;
  virtual std::string name() const = 0;
};

class MjlsFeedback final : public VectorFeedbackLaw {
 public:
  MjlsFeedback(MjlsSpec spec, std::vector<Eigen::MatrixXd> gains);
  Eigen::VectorXd next(const Eigen::VectorXd& x) override;
  std::string name() const override { return "mjls-ce"; }
  const MjlsControllerState& state() const { return state_; }

 private:
  MjlsSpec spec_;
  MjlsControllerState state_;
};

}  // namespace fbl
