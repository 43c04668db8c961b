#include "feedback_lab/models.hpp"

#include <cmath>
#include <numeric>
#include <queue>
#include <string>

namespace fbl {

PowerGrowthFn::PowerGrowthFn(double gain, double exponent) : gain(gain), exponent(exponent) {
  if (!(gain > 0.0)) throw ConfigError("power growth gain must be positive");
  if (!(exponent >= 0.0)) throw ConfigError("power growth exponent must be nonnegative");
}

double signed_power(double y, double b) {
  if (b == 0.0) return y < 0.0 ? -1.0 : 1.0;
  if (y == 0.0) return 0.0;
  return std::copysign(std::pow(std::fabs(y), b), y);
}

double PowerGrowthFn::operator()(double x) const { return gain * signed_power(x, exponent); }

double eval_power(const PowerGrowthFn& f, double x) { return f(x); }

PolyRegressors::PolyRegressors(std::vector<double> exps, std::vector<double> mean)
    : exponents(std::move(exps)), theta_mean(std::move(mean)) {
  if (exponents.empty()) throw ConfigError("polynomial regression needs at least one exponent");
  if (theta_mean.empty()) theta_mean.assign(exponents.size(), 0.0);
  if (theta_mean.size() != exponents.size())
    throw ConfigError("theta_mean length must equal the number of exponents");
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (!(exponents[i] > 0.0)) throw ConfigError("exponents must be positive");
    if (i > 0 && !(exponents[i] < exponents[i - 1]))
      throw ConfigError("exponents must be strictly decreasing");
  }
}

void validate(const NoiseModel& noise) {
  std::visit(
      [](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianIid>) {
          if (!(n.variance > 0.0)) throw ConfigError("noise variance must be positive");
        } else if constexpr (std::is_same_v<T, MartingaleDiffVector>) {
          if (!(n.sigma_lo > 0.0) || !(n.sigma_hi > 0.0) || n.dim == 0)
            throw ConfigError("vector noise bounds must be positive");
          if (static_cast<double>(n.dim) * n.sigma_lo > n.sigma_hi)
            throw ConfigError("vector noise: dim*sigma_lo exceeds sigma_hi");
        } else {
          if (!(n.w_bar > 0.0)) throw ConfigError("noise bound w_bar must be positive");
        }
      },
      noise);
}

double sample_scalar_noise(const NoiseModel& noise, Rng& rng) {
  return std::visit(
      [&rng](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GaussianIid>) {
          std::normal_distribution<double> d(0.0, std::sqrt(n.variance));
          return d(rng);
        } else if constexpr (std::is_same_v<T, BoundedRandom>) {
          std::uniform_real_distribution<double> d(-n.w_bar, n.w_bar);
          return d(rng);
        } else if constexpr (std::is_same_v<T, BoundedAdversarial>) {
          throw ConfigError("adversarial noise is chosen by the adversary, not sampled");
        } else {
          throw ConfigError("vector noise cannot be sampled as a scalar");
        }
      },
      noise);
}

Eigen::VectorXd sample_vector_noise(const MartingaleDiffVector& noise, Rng& rng) {
  std::normal_distribution<double> d(0.0, std::sqrt(noise.sigma_lo));
  Eigen::VectorXd w(static_cast<Eigen::Index>(noise.dim));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = d(rng);
  return w;
}

namespace {

std::vector<std::vector<std::size_t>> positive_graph(const Eigen::MatrixXd& p) {
  std::vector<std::vector<std::size_t>> adj(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) adj[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
  return adj;
}

std::vector<long> bfs_levels(const std::vector<std::vector<std::size_t>>& adj, std::size_t root) {
  std::vector<long> level(adj.size(), -1);
  std::queue<std::size_t> q;
  level[root] = 0;
  q.push(root);
  while (!q.empty()) {
    const auto v = q.front();
    q.pop();
    for (auto w : adj[v]) {
      if (level[w] < 0) {
        level[w] = level[v] + 1;
        q.push(w);
      }
    }
  }
  return level;
}

}  // namespace

bool MarkovChain::is_irreducible(const Eigen::MatrixXd& p) {
  const auto adj = positive_graph(p);
  std::vector<std::vector<std::size_t>> rev(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v)
    for (auto w : adj[v]) rev[w].push_back(v);
  const auto fwd = bfs_levels(adj, 0);
  const auto bwd = bfs_levels(rev, 0);
  for (std::size_t v = 0; v < adj.size(); ++v)
    if (fwd[v] < 0 || bwd[v] < 0) return false;
  return true;
}

std::size_t MarkovChain::period(const Eigen::MatrixXd& p) {
  // For a strongly connected graph the period is the gcd over all edges
  // (v, w) of level(v) + 1 - level(w).
  const auto adj = positive_graph(p);
  const auto level = bfs_levels(adj, 0);
  long g = 0;
  for (std::size_t v = 0; v < adj.size(); ++v)
    for (auto w : adj[v]) g = std::gcd(g, std::labs(level[v] + 1 - level[w]));
  return static_cast<std::size_t>(g);
}

MarkovChain::MarkovChain(Eigen::MatrixXd transition) : p_(std::move(transition)) {
  if (p_.rows() == 0 || p_.rows() != p_.cols()) throw ConfigError("transition matrix must be square and nonempty");
  for (Eigen::Index i = 0; i < p_.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < p_.cols(); ++j) {
      if (!(p_(i, j) >= 0.0)) throw ConfigError("transition probabilities must be nonnegative");
      sum += p_(i, j);
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw ConfigError("transition row " + std::to_string(i) + " does not sum to 1");
  }
  if (!is_irreducible(p_)) throw ConfigError("Markov chain is not irreducible");
  if (period(p_) != 1) throw ConfigError("Markov chain is periodic");
}

std::size_t markov_next(std::size_t mode, const MarkovChain& chain, Rng& rng) {
  if (mode >= chain.size()) throw ConfigError("mode out of range");
  std::uniform_real_distribution<double> d(0.0, 1.0);
  const double r = d(rng);
  const auto& p = chain.transition();
  const auto row = static_cast<Eigen::Index>(mode);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    if (p(row, j) <= 0.0) continue;
    last_positive = static_cast<std::size_t>(j);
    acc += p(row, j);
    if (r < acc) return last_positive;
  }
  return last_positive;
}

MjlsSpec::MjlsSpec(MarkovChain ch, std::vector<Eigen::MatrixXd> as, std::vector<Eigen::MatrixXd> bs,
                   MartingaleDiffVector nz)
    : chain(std::move(ch)), a(std::move(as)), b(std::move(bs)), noise(nz) {
  if (a.size() != chain.size() || b.size() != chain.size())
    throw ConfigError("need one (A, B) pair per Markov mode");
  const auto n = a.front().rows();
  const auto m = b.front().cols();
  if (n == 0 || m == 0) throw ConfigError("empty system matrices");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != n || a[i].cols() != n) throw ConfigError("A matrices must all be n x n");
    if (b[i].rows() != n || b[i].cols() != m) throw ConfigError("B matrices must all be n x m");
  }
  if (noise.dim != static_cast<std::size_t>(n)) throw ConfigError("noise dimension must equal state dimension");
  validate(NoiseModel{noise});
}

SampledSpec::SampledSpec(double l, double c, double h, int n) : lipschitz(l), offset(c), period(h), substeps(n) {
  if (!(l > 0.0) || !(c > 0.0) || !(h > 0.0)) throw ConfigError("sampled spec needs L, c, h > 0");
  if (n < 1) throw ConfigError("substeps must be >= 1");
}

std::optional<double> guarded(double value) {
  if (!std::isfinite(value) || std::fabs(value) > kBlowupGuard) return std::nullopt;
  return value;
}

std::optional<double> step_parametric(double y, double theta, double u, double w, const PowerGrowthFn& f) {
  return guarded(theta * f(y) + u + w);
}

std::optional<double> step_polynomial(double y, std::span<const double> theta, double u, double w,
                                      const PolyRegressors& regs) {
  if (theta.size() != regs.order()) throw ConfigError("theta length must equal regression order");
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) acc += theta[i] * signed_power(y, regs.exponents[i]);
  return guarded(acc + u + w);
}

std::optional<double> step_nonparametric(double y, const ScalarFn& f, double u, double w) {
  return guarded(f(y) + u + w);
}

std::optional<double> step_highorder(std::span<const double> window, const WindowFn& f, double u, double w) {
  return guarded(f(window) + u + w);
}

std::optional<double> integrate_sampled(double x0, const ScalarFn& f, double u, const SampledSpec& spec) {
  const double dt = spec.period / spec.substeps;
  double x = x0;
  for (int s = 0; s < spec.substeps; ++s) {
    const double k1 = f(x) + u;
    const double k2 = f(x + 0.5 * dt * k1) + u;
    const double k3 = f(x + 0.5 * dt * k2) + u;
    const double k4 = f(x + dt * k3) + u;
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!guarded(x)) return std::nullopt;
  }
  return x;
}

Eigen::VectorXd step_mjls(const Eigen::VectorXd& x, std::size_t mode, const Eigen::VectorXd& u,
                          const Eigen::VectorXd& w, const MjlsSpec& spec) {
  if (mode >= spec.modes()) throw ConfigError("mode out of range");
  const auto& a = spec.a[mode];
  const auto& b = spec.b[mode];
  if (x.size() != a.cols() || u.size() != b.cols() || w.size() != a.rows())
    throw ConfigError("dimension mismatch in MJLS step");
  return a * x + b * u + w;
}

}  // namespace fbl
