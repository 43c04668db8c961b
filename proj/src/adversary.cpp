#include "feedback_lab/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbl {

namespace {

Interval clip(Interval iv, double bound) {
  iv.lo = std::max(iv.lo, -bound);
  iv.hi = std::min(iv.hi, bound);
  if (iv.lo > iv.hi) {
    // Envelope and band touch; rounding can leave them a few ulps apart.
    if (iv.lo - iv.hi > consistency_slack(iv.lo, iv.hi)) throw std::logic_error("adversary: empty feasible interval");
    iv.lo = iv.hi = std::clamp(0.5 * (iv.lo + iv.hi), -bound, bound);
  }
  return iv;
}

double sign_plus(double x) { return x < 0.0 ? -1.0 : 1.0; }

double l1_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += std::fabs(v);
  return s;
}

}  // namespace

double pick_endpoint(const Interval& iv, double u) {
  return std::fabs(iv.hi + u) >= std::fabs(iv.lo + u) ? iv.hi : iv.lo;
}

AdversaryChoice adversary_choose(PiecewiseLinearFn& f, double x, double u, double w_bar, double budget_c) {
  const auto iv = clip(f.feasible_interval(x), f.lipschitz() * std::fabs(x) + budget_c);
  AdversaryChoice c;
  c.v = pick_endpoint(iv, u);
  c.w = w_bar * sign_plus(c.v + u);
  f.commit(x, c.v);
  return c;
}

double sampled_adversary_choose(GrowthBoundedFn& f, double x, double u) {
  const auto iv = f.feasible_interval(x);
  const double v = pick_endpoint(iv, u);
  f.commit(x, v);
  return v;
}

Interval highorder_feasible_interval(const LipschitzFnL1& f, std::span<const double> x) {
  return f.feasible_interval(x);
}

AdversaryChoice highorder_adversary_choose(LipschitzFnL1& f, std::span<const double> x, double u, double w_bar,
                                           double budget_c) {
  const auto iv = clip(f.feasible_interval(x), f.lipschitz() * l1_norm(x) + budget_c);
  AdversaryChoice c;
  c.v = pick_endpoint(iv, u);
  c.w = w_bar * sign_plus(c.v + u);
  f.commit(x, c.v);
  return c;
}

PiecewiseLinearFn random_lipschitz_fn(double lipschitz, std::size_t anchors, double range, double budget_c,
                                      Rng& rng) {
  PiecewiseLinearFn f(lipschitz);
  std::uniform_real_distribution<double> pos(-range, range);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < anchors; ++k) {
    const double x = pos(rng);
    const auto iv = clip(f.feasible_interval(x), lipschitz * std::fabs(x) + budget_c);
    if (iv.lo == iv.hi) {
      f.commit(x, iv.lo);
      continue;
    }
    f.commit(x, iv.lo + unit(rng) * (iv.hi - iv.lo));
  }
  return f;
}

GrowthBoundedFn random_growth_bounded_fn(double lipschitz, double offset, std::size_t anchors, double range,
                                         Rng& rng) {
  GrowthBoundedFn f(lipschitz, offset);
  std::uniform_real_distribution<double> pos(-range, range);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < anchors; ++k) {
    const double x = pos(rng);
    const auto iv = f.feasible_interval(x);
    f.commit(x, std::clamp(iv.lo + unit(rng) * (iv.hi - iv.lo), iv.lo, iv.hi));
  }
  return f;
}

}  // namespace fbl
