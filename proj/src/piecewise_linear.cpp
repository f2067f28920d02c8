#include "gapsi/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <stdexcept>

namespace gapsi {

PwlScalar::PwlScalar(double constant) : value0_(constant) {}

PwlScalar PwlScalar::variable(double slope) {
  PwlScalar f;
  f.right_slope_ = slope;
  return f;
}

double PwlScalar::operator()(double h) const {
  if (h < 0.0 || std::isnan(h))
    throw std::invalid_argument("PwlScalar: evaluation point must be >= 0");
  auto it = std::lower_bound(knots_.begin(), knots_.end(), h);
  if (it != knots_.end() && *it == h)
    return values_[static_cast<std::size_t>(it - knots_.begin())];
  if (it == knots_.end()) {
    if (knots_.empty()) return value0_ + h * right_slope_;
    return values_.back() + (h - knots_.back()) * right_slope_;
  }
  const std::size_t j = static_cast<std::size_t>(it - knots_.begin());
  const double xb = knots_[j], vb = values_[j];
  const double xa = j == 0 ? 0.0 : knots_[j - 1];
  const double va = j == 0 ? value0_ : values_[j - 1];
  return va + (h - xa) * ((vb - va) / (xb - xa));
}

PwlScalar::Minimum PwlScalar::minimize(double hi) const {
  if (!(hi >= 0.0) || std::isinf(hi))
    throw std::invalid_argument("PwlScalar: minimize needs a finite upper end");
  Minimum best{0.0, value0_};
  for (std::size_t i = 0; i < knots_.size() && knots_[i] <= hi; ++i)
    if (values_[i] < best.value) best = {knots_[i], values_[i]};
  const double tail = (*this)(hi);
  if (tail < best.value) best = {hi, tail};
  return best;
}

PwlScalar operator+(const PwlScalar& a, const PwlScalar& b) {
  PwlScalar out;
  out.value0_ = a.value0_ + b.value0_;
  std::merge(a.knots_.begin(), a.knots_.end(), b.knots_.begin(), b.knots_.end(),
             std::back_inserter(out.knots_));
  out.knots_.erase(std::unique(out.knots_.begin(), out.knots_.end()), out.knots_.end());
  out.values_.reserve(out.knots_.size());
  for (double x : out.knots_) out.values_.push_back(a(x) + b(x));
  out.right_slope_ = a.right_slope_ + b.right_slope_;
  return out;
}

PwlScalar operator-(const PwlScalar& a) { return -1.0 * a; }

PwlScalar operator-(const PwlScalar& a, const PwlScalar& b) { return a + (-b); }

PwlScalar operator*(double c, const PwlScalar& a) {
  PwlScalar out = a;
  out.value0_ *= c;
  for (double& v : out.values_) v *= c;
  out.right_slope_ *= c;
  return out;
}

PwlScalar operator/(const PwlScalar& a, double c) {
  PwlScalar out = a;
  out.value0_ /= c;
  for (double& v : out.values_) v /= c;
  out.right_slope_ /= c;
  return out;
}

PwlScalar positive_part(const PwlScalar& a) {
  PwlScalar out;
  out.value0_ = std::max(a.value0_, 0.0);
  out.knots_.reserve(a.knots_.size() + 2);
  out.values_.reserve(a.knots_.size() + 2);
  double px = 0.0, pv = a.value0_;
  auto push = [&out](double x, double v) {
    out.knots_.push_back(x);
    out.values_.push_back(v);
  };
  for (std::size_t i = 0; i < a.knots_.size(); ++i) {
    const double x = a.knots_[i], v = a.values_[i];
    if ((pv < 0.0 && v > 0.0) || (pv > 0.0 && v < 0.0)) {
      const double cross = px + (x - px) * (pv / (pv - v));
      if (cross > px && cross < x) push(cross, 0.0);  // rounding may hit an endpoint
    }
    push(x, std::max(v, 0.0));
    px = x;
    pv = v;
  }
  // tail ray from the last breakpoint (or from zero)
  if (pv > 0.0 && a.right_slope_ < 0.0) {
    const double cross = px + pv / -a.right_slope_;
    if (cross > px) push(cross, 0.0);
    out.right_slope_ = 0.0;
  } else if (pv < 0.0 && a.right_slope_ > 0.0) {
    const double cross = px + -pv / a.right_slope_;
    if (cross > px) push(cross, 0.0);
    out.right_slope_ = a.right_slope_;
  } else if (pv < 0.0 || (pv == 0.0 && a.right_slope_ <= 0.0)) {
    out.right_slope_ = 0.0;  // stays clipped
  } else {
    out.right_slope_ = a.right_slope_;
  }
  return out;
}

}  // namespace gapsi
