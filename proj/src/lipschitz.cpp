#include "feedback_lab/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "feedback_lab/models.hpp"

namespace fbl {

bool Interval::bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

const char* to_string(Extension e) {
  switch (e) {
    case Extension::McShaneMin: return "mcshane-min";
    case Extension::McShaneMax: return "mcshane-max";
    case Extension::Midpoint: return "midpoint";
    case Extension::Linear: return "linear";
  }
  return "?";
}

Extension extension_from_string(const char* name) {
  for (auto e : {Extension::McShaneMin, Extension::McShaneMax, Extension::Midpoint, Extension::Linear})
    if (std::strcmp(name, to_string(e)) == 0) return e;
  throw ConfigError(std::string("unknown extension: ") + name);
}

double consistency_slack(double a, double b) { return 1e-12 * (1.0 + std::fabs(a) + std::fabs(b)); }

PiecewiseLinearFn::PiecewiseLinearFn(double lipschitz, Extension ext) : lipschitz_(lipschitz), ext_(ext) {
  if (!(lipschitz > 0.0)) throw ConfigError("Lipschitz constant must be positive");
}

PiecewiseLinearFn::PiecewiseLinearFn(double lipschitz, std::vector<Anchor> anchors, Extension ext)
    : PiecewiseLinearFn(lipschitz, ext) {
  std::sort(anchors.begin(), anchors.end(), [](const Anchor& a, const Anchor& b) { return a.x < b.x; });
  for (std::size_t i = 1; i < anchors.size(); ++i)
    if (anchors[i].x == anchors[i - 1].x) throw ConfigError("anchor abscissae must be distinct");
  anchors_ = std::move(anchors);
  if (!consistent()) throw ConfigError("anchors violate the Lipschitz bound");
}

std::size_t PiecewiseLinearFn::lower_index(double x) const {
  return static_cast<std::size_t>(
      std::lower_bound(anchors_.begin(), anchors_.end(), x, [](const Anchor& a, double v) { return a.x < v; }) -
      anchors_.begin());
}

Interval PiecewiseLinearFn::feasible_interval(double x) const {
  Interval out;
  const auto i = lower_index(x);
  if (i < anchors_.size() && anchors_[i].x == x) return {anchors_[i].v, anchors_[i].v};
  for (auto j : {i, i - 1}) {
    if (j >= anchors_.size()) continue;  // also catches i - 1 wrapping at 0
    const double d = lipschitz_ * std::fabs(x - anchors_[j].x);
    out.lo = std::max(out.lo, anchors_[j].v - d);
    out.hi = std::min(out.hi, anchors_[j].v + d);
  }
  if (out.lo > out.hi) out.lo = out.hi = 0.5 * (out.lo + out.hi);  // rounding on a tight pair
  return out;
}

void PiecewiseLinearFn::commit(double x, double v) {
  if (!std::isfinite(x) || !std::isfinite(v)) throw std::logic_error("anchor must be finite");
  const auto i = lower_index(x);
  if (i < anchors_.size() && anchors_[i].x == x) {
    if (anchors_[i].v != v) throw std::logic_error("anchor already committed with a different value");
    return;
  }
  const auto iv = feasible_interval(x);
  if (v < iv.lo - consistency_slack(iv.lo, v) || v > iv.hi + consistency_slack(iv.hi, v))
    throw std::logic_error("anchor value outside the Lipschitz envelope");
  anchors_.insert(anchors_.begin() + static_cast<std::ptrdiff_t>(i), Anchor{x, v});
}

double PiecewiseLinearFn::mcshane_min(double x) const {
  const auto i = lower_index(x);
  if (i < anchors_.size() && anchors_[i].x == x) return anchors_[i].v;
  double best = std::numeric_limits<double>::infinity();
  for (auto j : {i, i - 1})
    if (j < anchors_.size()) best = std::min(best, anchors_[j].v + lipschitz_ * std::fabs(x - anchors_[j].x));
  return best;
}

double PiecewiseLinearFn::mcshane_max(double x) const {
  const auto i = lower_index(x);
  if (i < anchors_.size() && anchors_[i].x == x) return anchors_[i].v;
  double best = -std::numeric_limits<double>::infinity();
  for (auto j : {i, i - 1})
    if (j < anchors_.size()) best = std::max(best, anchors_[j].v - lipschitz_ * std::fabs(x - anchors_[j].x));
  return best;
}

double PiecewiseLinearFn::linear(double x) const {
  if (anchors_.size() == 1) return anchors_.front().v;
  auto i = lower_index(x);
  if (i < anchors_.size() && anchors_[i].x == x) return anchors_[i].v;
  i = std::clamp<std::size_t>(i, 1, anchors_.size() - 1);
  const auto& a = anchors_[i - 1];
  const auto& b = anchors_[i];
  return a.v + (b.v - a.v) * (x - a.x) / (b.x - a.x);
}

double PiecewiseLinearFn::operator()(double x) const {
  if (anchors_.empty()) throw std::logic_error("cannot evaluate a function with no anchors");
  switch (ext_) {
    case Extension::McShaneMin: return mcshane_min(x);
    case Extension::McShaneMax: return mcshane_max(x);
    case Extension::Midpoint: {
      const double lo = mcshane_max(x);
      const double hi = mcshane_min(x);
      return lo == hi ? lo : 0.5 * (lo + hi);
    }
    case Extension::Linear: return linear(x);
  }
  return 0.0;
}

std::pair<double, double> PiecewiseLinearFn::tail_slopes() const {
  if (anchors_.empty()) throw std::logic_error("tail slopes of a function with no anchors");
  switch (ext_) {
    case Extension::McShaneMin: return {-lipschitz_, lipschitz_};
    case Extension::McShaneMax: return {lipschitz_, -lipschitz_};
    case Extension::Midpoint: return {0.0, 0.0};
    case Extension::Linear: {
      if (anchors_.size() == 1) return {0.0, 0.0};
      const auto n = anchors_.size();
      const auto slope = [](const Anchor& a, const Anchor& b) { return (b.v - a.v) / (b.x - a.x); };
      return {slope(anchors_[0], anchors_[1]), slope(anchors_[n - 2], anchors_[n - 1])};
    }
  }
  return {0.0, 0.0};
}

bool PiecewiseLinearFn::consistent() const {
  // Consecutive pairs suffice in one dimension: the triangle inequality
  // carries the bound to every other pair.
  for (std::size_t i = 1; i < anchors_.size(); ++i) {
    const auto& a = anchors_[i - 1];
    const auto& b = anchors_[i];
    if (std::fabs(a.v - b.v) > lipschitz_ * (b.x - a.x) + consistency_slack(a.v, b.v)) return false;
  }
  return true;
}

PiecewiseLinearFn realize(const PiecewiseLinearFn& f) {
  if (f.empty()) throw std::logic_error("cannot realize a function with no anchors");
  return PiecewiseLinearFn(f.lipschitz(), std::vector<Anchor>(f.anchors().begin(), f.anchors().end()),
                           Extension::McShaneMin);
}

GrowthBoundedFn::GrowthBoundedFn(double lipschitz, double offset)
    : GrowthBoundedFn(PiecewiseLinearFn(lipschitz), offset) {}

GrowthBoundedFn::GrowthBoundedFn(PiecewiseLinearFn core, double offset) : core_(std::move(core)), c_(offset) {
  if (!(offset > 0.0)) throw ConfigError("growth offset c must be positive");
  for (const auto& a : core_.anchors())
    if (std::fabs(a.v) > band(a.x) + consistency_slack(a.v, 0.0))
      throw ConfigError("anchor outside the growth band |f(x)| <= L|x| + c");
}

double GrowthBoundedFn::band(double x) const { return core_.lipschitz() * std::fabs(x) + c_; }

Interval GrowthBoundedFn::feasible_interval(double x) const {
  auto iv = core_.feasible_interval(x);
  const double b = band(x);
  iv.lo = std::max(iv.lo, -b);
  iv.hi = std::min(iv.hi, b);
  // Collapse inside the band so a clamped evaluation returns the anchor unchanged.
  if (iv.lo > iv.hi) iv.lo = iv.hi = std::clamp(0.5 * (iv.lo + iv.hi), -b, b);
  return iv;
}

void GrowthBoundedFn::commit(double x, double v) {
  if (std::fabs(v) > band(x) + consistency_slack(v, 0.0)) throw std::logic_error("anchor outside the growth band");
  core_.commit(x, v);
}

double GrowthBoundedFn::operator()(double x) const {
  const double b = band(x);
  if (core_.empty()) return b;
  const double v = core_.mcshane_min(x);
  return std::clamp(v, -b, b);
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
  return d;
}

LipschitzFnL1::LipschitzFnL1(std::size_t dim, double lipschitz) : dim_(dim), lipschitz_(lipschitz) {
  if (dim == 0) throw ConfigError("dimension must be >= 1");
  if (!(lipschitz > 0.0)) throw ConfigError("Lipschitz constant must be positive");
}

Interval LipschitzFnL1::feasible_interval(std::span<const double> x) const {
  if (x.size() != dim_) throw ConfigError("point dimension mismatch");
  Interval out;
  for (const auto& a : anchors_) {
    const double d = lipschitz_ * l1_distance(x, a.x);
    out.lo = std::max(out.lo, a.v - d);
    out.hi = std::min(out.hi, a.v + d);
  }
  if (out.lo > out.hi) out.lo = out.hi = 0.5 * (out.lo + out.hi);
  return out;
}

void LipschitzFnL1::commit(std::span<const double> x, double v) {
  if (x.size() != dim_) throw ConfigError("point dimension mismatch");
  for (const auto& a : anchors_) {
    if (std::equal(a.x.begin(), a.x.end(), x.begin())) {
      if (a.v != v) throw std::logic_error("anchor already committed with a different value");
      return;
    }
  }
  const auto iv = feasible_interval(x);
  if (v < iv.lo - consistency_slack(iv.lo, v) || v > iv.hi + consistency_slack(iv.hi, v))
    throw std::logic_error("anchor value outside the Lipschitz envelope");
  anchors_.push_back(Point{std::vector<double>(x.begin(), x.end()), v});
}

double LipschitzFnL1::operator()(std::span<const double> x) const {
  if (anchors_.empty()) throw std::logic_error("cannot evaluate a function with no anchors");
  if (x.size() != dim_) throw ConfigError("point dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& a : anchors_) {
    if (std::equal(a.x.begin(), a.x.end(), x.begin())) return a.v;
    best = std::min(best, a.v + lipschitz_ * l1_distance(x, a.x));
  }
  return best;
}

}  // namespace fbl
