#pragma once

// Lipschitz functions represented by committed anchor samples plus an
// extension rule. These double as the adversaries' constraint stores.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace fbl {

struct Anchor {
  double x = 0.0;
  double v = 0.0;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool bounded() const;
  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

enum class Extension {
  McShaneMin,  // min_i (v_i + L|x - x_i|)
  McShaneMax,  // max_i (v_i - L|x - x_i|)
  Midpoint,    // average of the two envelopes
  Linear,      // interpolation, end segments extrapolated
};

const char* to_string(Extension e);
Extension extension_from_string(const char* name);

/// Anchor slack for the pairwise Lipschitz check. Scaled with magnitude since
/// adversarial runs commit values far beyond 1e12.
double consistency_slack(double a, double b);

/// Scalar function in F(L) known through sorted anchors with distinct x.
///
/// Evaluation at an anchor abscissa returns the stored value exactly; between
/// anchors only the two neighbours matter (for a consistent anchor set every
/// other cone is dominated), so evaluation and feasible_interval are
/// O(log n).
class PiecewiseLinearFn {
 public:
  explicit PiecewiseLinearFn(double lipschitz, Extension ext = Extension::McShaneMin);
  PiecewiseLinearFn(double lipschitz, std::vector<Anchor> anchors, Extension ext = Extension::McShaneMin);

  double lipschitz() const { return lipschitz_; }
  Extension extension() const { return ext_; }
  std::span<const Anchor> anchors() const { return anchors_; }
  bool empty() const { return anchors_.empty(); }
  std::size_t size() const { return anchors_.size(); }

  /// Lipschitz-L envelope of the committed anchors at x; (-inf, inf) when empty.
  Interval feasible_interval(double x) const;

  /// Adds (x, v). Re-committing an existing abscissa with the same value is a
  /// no-op; anything inconsistent with the envelope throws std::logic_error.
  void commit(double x, double v);

  /// Value of the realized function. Throws std::logic_error when empty.
  double operator()(double x) const;

  double mcshane_min(double x) const;
  double mcshane_max(double x) const;

  /// Slopes of the two unbounded pieces (left, right).
  std::pair<double, double> tail_slopes() const;

  /// |v_i - v_j| <= L|x_i - x_j| for every anchor pair.
  bool consistent() const;

 private:
  std::size_t lower_index(double x) const;
  double linear(double x) const;

  double lipschitz_;
  Extension ext_;
  std::vector<Anchor> anchors_;
};

/// Total McShaneMin extension of the committed anchors.
PiecewiseLinearFn realize(const PiecewiseLinearFn& f);

/// Member of G^L_c: the McShane extension of the anchors clipped into the
/// growth band |f(x)| <= L|x| + c. Clipping keeps the Lipschitz constant and
/// every anchor already lies inside the band.
class GrowthBoundedFn {
 public:
  GrowthBoundedFn(double lipschitz, double offset);
  GrowthBoundedFn(PiecewiseLinearFn core, double offset);

  double lipschitz() const { return core_.lipschitz(); }
  double offset() const { return c_; }
  const PiecewiseLinearFn& core() const { return core_; }

  double band(double x) const;
  /// Envelope of the anchors intersected with [-band(x), band(x)].
  Interval feasible_interval(double x) const;
  void commit(double x, double v);
  double operator()(double x) const;

 private:
  PiecewiseLinearFn core_;
  double c_;
};

/// Function on R^p that is L-Lipschitz in the l1 norm, known through anchors.
class LipschitzFnL1 {
 public:
  struct Point {
    std::vector<double> x;
    double v = 0.0;
  };

  LipschitzFnL1(std::size_t dim, double lipschitz);

  std::size_t dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }
  std::span<const Point> anchors() const { return anchors_; }

  Interval feasible_interval(std::span<const double> x) const;
  void commit(std::span<const double> x, double v);
  /// McShaneMin value; exact stored value on an anchor.
  double operator()(std::span<const double> x) const;

 private:
  std::size_t dim_;
  double lipschitz_;
  std::vector<Point> anchors_;
};

double l1_distance(std::span<const double> a, std::span<const double> b);

}  // namespace fbl
