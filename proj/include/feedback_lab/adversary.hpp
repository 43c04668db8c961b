#pragma once

// Online construction of worst-case uncertain elements. The adversaries are
// greedy one-step heuristics: at each visited state they commit the feasible
// function value that pushes the next state furthest from zero. Every
// commitment stays inside the declared uncertainty class, so the realized
// function is a single fixed member consistent with the whole run.

#include <cstddef>
#include <span>

#include "feedback_lab/lipschitz.hpp"
#include "feedback_lab/models.hpp"

namespace fbl {

struct AdversaryChoice {
  double v = 0.0;
  double w = 0.0;
};

/// Endpoint of `iv` maximizing |v + u|; ties go to the upper endpoint.
double pick_endpoint(const Interval& iv, double u);

/// Feasible interval of f at x clipped to |v| <= L|x| + budget_c, then the
/// worst endpoint and noise w = w_bar * sign(v + u) (sign(0) = +1). Commits
/// (x, v) into f.
AdversaryChoice adversary_choose(PiecewiseLinearFn& f, double x, double u, double w_bar, double budget_c);

/// Same greedy rule inside G^L_c; no noise in continuous time.
double sampled_adversary_choose(GrowthBoundedFn& f, double x, double u);

Interval highorder_feasible_interval(const LipschitzFnL1& f, std::span<const double> x);
AdversaryChoice highorder_adversary_choose(LipschitzFnL1& f, std::span<const double> x, double u, double w_bar,
                                           double budget_c);

/// Random member of F(L): anchors drawn uniformly on [-range, range] with
/// values uniform in the feasible interval clipped to L|x| + budget_c.
PiecewiseLinearFn random_lipschitz_fn(double lipschitz, std::size_t anchors, double range, double budget_c,
                                      Rng& rng);

/// Random member of G^L_c built the same way inside the growth band.
GrowthBoundedFn random_growth_bounded_fn(double lipschitz, double offset, std::size_t anchors, double range,
                                         Rng& rng);

}  // namespace fbl
