#pragma once

// State-transition maps for every system class, plus noise and Markov-chain
// generators. All step functions are pure; randomness only enters through a
// caller-owned engine.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace fbl {

using Rng = std::mt19937_64;

/// Divergence guard applied to every state update.
inline constexpr double kBlowupGuard = 1e150;

/// Thrown for inconsistent dimensions, invalid parameters or mismatched
/// system/controller pairs.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Odd-symmetric power law M*sign(x)*|x|^b.
struct PowerGrowthFn {
  double gain = 1.0;
  double exponent = 1.0;

  PowerGrowthFn() = default;
  PowerGrowthFn(double gain, double exponent);

  double operator()(double x) const;
};

double eval_power(const PowerGrowthFn& f, double x);

/// sign(y)*|y|^b with 0^0 = 1 (only reachable for b = 0).
double signed_power(double y, double b);

/// Exponents b_1 > ... > b_p > 0 and the prior mean of theta.
struct PolyRegressors {
  std::vector<double> exponents;
  std::vector<double> theta_mean;

  PolyRegressors() = default;
  PolyRegressors(std::vector<double> exponents, std::vector<double> theta_mean);

  std::size_t order() const { return exponents.size(); }
};

struct GaussianIid {
  double variance = 1.0;
};
struct BoundedAdversarial {
  double w_bar = 1.0;
};
struct BoundedRandom {
  double w_bar = 1.0;
};
/// Independent Gaussian components with per-component variance sigma_lo.
/// Requires dim*sigma_lo <= sigma_hi so that E[w'w] <= sigma_hi.
struct MartingaleDiffVector {
  double sigma_lo = 1.0;
  double sigma_hi = 1.0;
  std::size_t dim = 1;
};

using NoiseModel = std::variant<GaussianIid, BoundedAdversarial, BoundedRandom, MartingaleDiffVector>;

void validate(const NoiseModel& noise);

/// Draws one scalar noise sample. BoundedAdversarial has no distribution of
/// its own (the adversary picks the value), so sampling it is an error.
double sample_scalar_noise(const NoiseModel& noise, Rng& rng);
Eigen::VectorXd sample_vector_noise(const MartingaleDiffVector& noise, Rng& rng);

/// Finite homogeneous chain over modes 0..N-1, validated irreducible and
/// aperiodic at construction.
class MarkovChain {
 public:
  explicit MarkovChain(Eigen::MatrixXd transition);

  std::size_t size() const { return static_cast<std::size_t>(p_.rows()); }
  const Eigen::MatrixXd& transition() const { return p_; }
  double operator()(std::size_t from, std::size_t to) const { return p_(from, to); }

  static bool is_irreducible(const Eigen::MatrixXd& p);
  /// gcd of cycle lengths through the positive-entry graph (requires irreducible).
  static std::size_t period(const Eigen::MatrixXd& p);

 private:
  Eigen::MatrixXd p_;
};

std::size_t markov_next(std::size_t mode, const MarkovChain& chain, Rng& rng);

struct MjlsSpec {
  MarkovChain chain;
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::MatrixXd> b;
  MartingaleDiffVector noise;

  MjlsSpec(MarkovChain chain, std::vector<Eigen::MatrixXd> a, std::vector<Eigen::MatrixXd> b,
           MartingaleDiffVector noise);

  std::size_t modes() const { return a.size(); }
  std::size_t state_dim() const { return static_cast<std::size_t>(a.front().rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(b.front().cols()); }
};

struct SampledSpec {
  double lipschitz = 1.0;
  double offset = 1.0;
  double period = 1.0;
  int substeps = 64;

  SampledSpec() = default;
  SampledSpec(double lipschitz, double offset, double period, int substeps = 64);

  double lh() const { return lipschitz * period; }
};

using ScalarFn = std::function<double(double)>;
using WindowFn = std::function<double(std::span<const double>)>;

/// Returns nullopt when |result| exceeds kBlowupGuard or is not finite.
std::optional<double> guarded(double value);

std::optional<double> step_parametric(double y, double theta, double u, double w, const PowerGrowthFn& f);
std::optional<double> step_polynomial(double y, std::span<const double> theta, double u, double w,
                                      const PolyRegressors& regs);
std::optional<double> step_nonparametric(double y, const ScalarFn& f, double u, double w);
std::optional<double> step_highorder(std::span<const double> window, const WindowFn& f, double u, double w);

/// One zero-order-hold sampling period of x' = f(x) + u, classical RK4 with
/// spec.substeps uniform steps.
std::optional<double> integrate_sampled(double x0, const ScalarFn& f, double u, const SampledSpec& spec);

Eigen::VectorXd step_mjls(const Eigen::VectorXd& x, std::size_t mode, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& w, const MjlsSpec& spec);

}  // namespace fbl
