#include "feedback_lab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fbl {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Stabilizable: return "STABILIZABLE";
    case Regime::Impossible: return "IMPOSSIBLE";
    case Regime::Gap: return "GAP";
    case Regime::NotTriggered: return "NOT_TRIGGERED";
  }
  return "?";
}

double critical_radius() { return 1.5 + std::sqrt(2.0); }
double sampled_stabilizable_lh() { return std::log(4.0); }

RegimeVerdict parametric_regime(double exponent) {
  if (!(exponent >= 0.0)) throw std::domain_error("growth exponent must be nonnegative");
  RegimeVerdict v;
  v.value = exponent;
  v.boundary = std::fabs(exponent - kCriticalExponent) <= kBoundaryTol;
  v.regime = (exponent >= kCriticalExponent || v.boundary) ? Regime::Impossible : Regime::Stabilizable;
  return v;
}

CharPoly::CharPoly(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw std::invalid_argument("polynomial needs at least one coefficient");
}

double CharPoly::operator()(double z) const {
  double acc = 0.0;
  for (double c : coeffs_) acc = acc * z + c;
  return acc;
}

CharPoly CharPoly::derivative() const {
  const auto n = degree();
  if (n == 0) return CharPoly({0.0});
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = coeffs_[i] * static_cast<double>(n - i);
  return CharPoly(std::move(d));
}

CharPoly characteristic_poly(std::span<const double> exponents) {
  if (exponents.empty()) throw std::domain_error("need at least one exponent");
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (!(exponents[i] > 0.0)) throw std::domain_error("exponents must be positive");
    if (i > 0 && !(exponents[i] < exponents[i - 1])) throw std::domain_error("exponents must be strictly decreasing");
  }
  const auto p = exponents.size();
  // z^{p+1} - b_1 z^p + (b_1 - b_2) z^{p-1} + ... + (b_{p-1} - b_p) z + b_p
  std::vector<double> c(p + 2);
  c[0] = 1.0;
  c[1] = -exponents[0];
  for (std::size_t k = 1; k < p; ++k) c[k + 1] = exponents[k - 1] - exponents[k];
  c[p + 1] = exponents[p - 1];
  return CharPoly(std::move(c));
}

namespace {

double bisect_root(const CharPoly& poly, double lo, double hi) {
  double flo = poly(lo);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = poly(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<double> isolate_roots(const CharPoly& poly, double a, double b) {
  std::vector<double> roots;
  if (poly.degree() == 0) return roots;
  // Between consecutive critical points the polynomial is monotone, so each
  // piece holds at most one root and a sign change brackets it.
  std::vector<double> knots{a};
  for (double c : isolate_roots(poly.derivative(), a, b))
    if (c > knots.back()) knots.push_back(c);
  if (b > knots.back()) knots.push_back(b);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double l = knots[i];
    const double r = knots[i + 1];
    const double fl = poly(l);
    const double fr = poly(r);
    if (fl == 0.0) {
      if (roots.empty() || roots.back() != l) roots.push_back(l);
    } else if (fr != 0.0 && (fl < 0.0) != (fr < 0.0)) {
      roots.push_back(bisect_root(poly, l, r));
    }
  }
  if (poly(b) == 0.0 && (roots.empty() || roots.back() != b)) roots.push_back(b);
  return roots;
}

IntervalMinimum grid_minimum(const CharPoly& poly, double a, double b) {
  constexpr int kGrid = 4096;
  const double step = (b - a) / (kGrid - 1);
  int best = 0;
  double best_val = poly(a);
  for (int k = 1; k < kGrid; ++k) {
    const double v = poly(a + step * k);
    if (v < best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = a + step * std::max(0, best - 1);
  double hi = a + step * std::min(kGrid - 1, best + 1);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = poly(x1);
  double f2 = poly(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(lo)); ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = poly(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = poly(x2);
    }
  }
  IntervalMinimum out{a + step * best, best_val};
  for (double z : {x1, x2, 0.5 * (lo + hi)}) {
    const double v = poly(z);
    if (v < out.value) out = {z, v};
  }
  return out;
}

IntervalMinimum critical_point_minimum(const CharPoly& poly, double a, double b) {
  IntervalMinimum out{a, poly(a)};
  if (poly(b) < out.value) out = {b, poly(b)};
  for (double c : isolate_roots(poly.derivative(), a, b)) {
    const double v = poly(c);
    if (v < out.value) out = {c, v};
  }
  return out;
}

RegimeVerdict poly_impossible(const CharPoly& poly, double b1) {
  RegimeVerdict v;
  v.regime = Regime::NotTriggered;
  if (!(b1 > 1.0)) return v;
  const auto grid = grid_minimum(poly, 1.0, b1);
  const auto crit = critical_point_minimum(poly, 1.0, b1);
  // Root isolation locates critical points to full precision; the grid wins only when strictly lower.
  const auto& best = grid.value < crit.value ? grid : crit;
  v.witness = best.argmin;
  v.value = best.value;
  v.boundary = std::fabs(best.value) <= kBoundaryTol;
  if (best.value < -kBoundaryTol) v.regime = Regime::Impossible;
  return v;
}

RegimeVerdict highorder_impossible(double lipschitz, std::size_t order) {
  if (!(lipschitz > 0.0)) throw std::domain_error("Lipschitz constant must be positive");
  if (order < 1) throw std::domain_error("order must be >= 1");
  const double p = static_cast<double>(order);
  const double lhs = lipschitz + 0.5;
  const double rhs = (1.0 + 1.0 / p) * std::pow(p * lipschitz, 1.0 / (p + 1.0));
  RegimeVerdict v;
  v.value = lhs - rhs;
  v.boundary = std::fabs(lhs - rhs) <= kBoundaryTol;
  v.regime = (lhs >= rhs || v.boundary) ? Regime::Impossible : Regime::NotTriggered;
  return v;
}

double quasi_norm(const PiecewiseLinearFn& f) {
  if (f.empty()) throw std::logic_error("quasi-norm needs a realized function");
  // Bounded-region variation vanishes as alpha grows; only the unbounded
  // pieces survive, and a cross-tail pair is dominated by the steeper tail.
  const auto [left, right] = f.tail_slopes();
  return std::max(std::fabs(left), std::fabs(right));
}

RegimeVerdict sampled_regime(double lipschitz, double period) {
  if (!(lipschitz > 0.0) || !(period > 0.0)) throw std::domain_error("L and h must be positive");
  const double lh = lipschitz * period;
  RegimeVerdict v;
  v.value = lh;
  v.boundary = std::fabs(lh - sampled_stabilizable_lh()) <= kBoundaryTol ||
               std::fabs(lh - kSampledImpossibleLh) <= kBoundaryTol;
  if (lh < sampled_stabilizable_lh())
    v.regime = Regime::Stabilizable;
  else if (lh > kSampledImpossibleLh)
    v.regime = Regime::Impossible;
  else
    v.regime = Regime::Gap;
  return v;
}

RegimeVerdict scalar_mjls_stabilizable(double a1, double a2, double p12) {
  if (!(p12 > 0.0 && p12 < 1.0)) throw std::domain_error("p12 must lie in (0, 1)");
  const double c = (a2 - a1) * (a2 - a1);
  const double p = (1.0 - p12) * p12;
  RegimeVerdict v;
  v.value = c * p;
  v.boundary = std::fabs(c * p - 1.0) <= kBoundaryTol;
  v.regime = (c * p < 1.0 && !v.boundary) ? Regime::Stabilizable : Regime::Impossible;
  return v;
}

std::optional<Eigen::MatrixXd> verify_h2(const MjlsSpec& spec, std::size_t trials, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(spec.state_dim());
  const auto m = static_cast<Eigen::Index>(spec.input_dim());
  if (spec.modes() < 2) return Eigen::MatrixXd::Zero(m, n);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::MatrixXd k(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j) k(i, j) = d(rng);
    bool ok = true;
    for (std::size_t i = 0; i < spec.modes() && ok; ++i)
      for (std::size_t j = i + 1; j < spec.modes() && ok; ++j) {
        const Eigen::MatrixXd diff = (spec.a[i] - spec.a[j]) - (spec.b[i] - spec.b[j]) * k;
        ok = std::fabs(diff.determinant()) > 1e-9;
      }
    if (ok) return k;
  }
  return std::nullopt;
}

}  // namespace fbl
