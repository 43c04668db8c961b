#pragma once

// Closed-form stabilizability oracles: critical values, the characteristic
// polynomial criterion and the threshold inequalities.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedback_lab/lipschitz.hpp"
#include "feedback_lab/models.hpp"

namespace fbl {

enum class Regime {
  Stabilizable,
  Impossible,
  /// Between the known sufficient and impossibility thresholds.
  Gap,
  /// A one-sided impossibility test did not fire; no stabilizability claim.
  NotTriggered,
};

const char* to_string(Regime r);

struct RegimeVerdict {
  Regime regime = Regime::NotTriggered;
  /// Defining quantity equals its critical value within 1e-12.
  bool boundary = false;
  /// e.g. the z with P(z) < 0.
  std::optional<double> witness;
  /// The quantity compared against the threshold (Lh, CP, P(z*), ...).
  std::optional<double> value;
};

inline constexpr double kBoundaryTol = 1e-12;
inline constexpr double kCriticalExponent = 4.0;
inline constexpr double kSampledImpossibleLh = 7.53;

/// 3/2 + sqrt(2).
double critical_radius();
/// ln 4.
double sampled_stabilizable_lh();

RegimeVerdict parametric_regime(double exponent);

/// Monic polynomial, coefficients in descending powers.
class CharPoly {
 public:
  explicit CharPoly(std::vector<double> coeffs);

  std::span<const double> coeffs() const { return coeffs_; }
  std::size_t degree() const { return coeffs_.size() - 1; }
  double operator()(double z) const;
  CharPoly derivative() const;

 private:
  std::vector<double> coeffs_;
};

CharPoly characteristic_poly(std::span<const double> exponents);

/// Minimum of a polynomial over an open interval by two independent routes.
struct IntervalMinimum {
  double argmin = 0.0;
  double value = 0.0;
};

/// 4096-point grid then golden-section refinement on the best bracket.
IntervalMinimum grid_minimum(const CharPoly& poly, double a, double b);
/// Critical points from recursive derivative root isolation (sign-change
/// bisection), compared with the endpoint limits.
IntervalMinimum critical_point_minimum(const CharPoly& poly, double a, double b);
/// Real roots of poly in [a, b], isolated through the derivative chain.
std::vector<double> isolate_roots(const CharPoly& poly, double a, double b);

RegimeVerdict poly_impossible(const CharPoly& poly, double b1);
RegimeVerdict highorder_impossible(double lipschitz, std::size_t order);
double quasi_norm(const PiecewiseLinearFn& f);
RegimeVerdict sampled_regime(double lipschitz, double period);
RegimeVerdict scalar_mjls_stabilizable(double a1, double a2, double p12);

/// Searches for K with det[(A_i - A_j) - (B_i - B_j)K] != 0 for all i != j.
std::optional<Eigen::MatrixXd> verify_h2(const MjlsSpec& spec, std::size_t trials, Rng& rng);

}  // namespace fbl
