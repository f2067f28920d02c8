#pragma once

#include <vector>

// Piecewise-linear functions of one nonnegative scalar, closed under the
// operations the period kernels use (affine combinations and positive parts).
// Instantiating the kernels on this type turns one simulated rollout into an
// explicit cost curve in a single order quantity, whose minimum over an
// interval sits at a breakpoint or an endpoint; the planner exploits that for
// line searches with no grid error.

namespace gapsi {

class PwlScalar {
 public:
  PwlScalar() : PwlScalar(0.0) {}
  PwlScalar(double constant);  // NOLINT: implicit, mixed arithmetic relies on it

  // f(h) = slope * h on [0, inf)
  static PwlScalar variable(double slope = 1.0);

  double operator()(double h) const;  // h >= 0

  // breakpoints, strictly ascending, all > 0
  const std::vector<double>& knots() const { return knots_; }
  double value_at_zero() const { return value0_; }
  double tail_slope() const { return right_slope_; }

  struct Minimum {
    double arg = 0.0;
    double value = 0.0;
  };
  // Minimum over [0, hi]; among equal values the smallest argument wins.
  Minimum minimize(double hi) const;

  friend PwlScalar operator+(const PwlScalar& a, const PwlScalar& b);
  friend PwlScalar operator-(const PwlScalar& a, const PwlScalar& b);
  friend PwlScalar operator*(double c, const PwlScalar& a);
  friend PwlScalar operator/(const PwlScalar& a, double c);
  friend PwlScalar operator-(const PwlScalar& a);
  friend PwlScalar positive_part(const PwlScalar& a);

 private:
  // f(0), breakpoints 0 < k_1 < ... < k_r with their values, and the slope
  // past the last breakpoint (the global slope when there is none).
  double value0_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;
  double right_slope_ = 0.0;
};

}  // namespace gapsi
