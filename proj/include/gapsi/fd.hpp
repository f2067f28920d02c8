#pragma once

#include "gapsi/derivatives.hpp"

#include <Eigen/Dense>

#include <cmath>

// One-sided finite differences for validating the analytic Jacobians. Every
// differentiated map is piecewise linear, so away from the opposite side of a
// kink the divided difference is exact up to rounding; the ladder of shrinking
// steps detects the remaining cases (a kink closer than the largest step) and
// reports them as not converged instead of returning a polluted estimate.

namespace gapsi {

struct FdEstimate {
  double value = 0.0;
  bool converged = false;
};

namespace fd_detail {
constexpr double kSteps[] = {1e-3, 3e-4, 1e-4, 3e-5, 1e-5};
}

// Slope of the scalar section h -> section(h) at 0, from the right or from
// the left. Converges when two consecutive ladder steps agree to tol.
template <class F>
FdEstimate one_sided_slope(F&& section, Side side, double tol = 1e-7) {
  const double f0 = section(0.0);
  FdEstimate est;
  bool have_prev = false;
  double prev = 0.0;
  for (double h : fd_detail::kSteps) {
    const double step = side == Side::Right ? h : -h;
    const double slope = (section(step) - f0) / step;
    if (have_prev && std::abs(slope - prev) <= tol * (1.0 + std::abs(slope))) {
      est.value = slope;
      est.converged = true;
      return est;
    }
    prev = slope;
    have_prev = true;
  }
  est.value = prev;
  return est;
}

struct FdVectorEstimate {
  Eigen::VectorXd value;
  bool converged = false;
};

// Vector-valued counterpart: every component must settle simultaneously.
template <class F>
FdVectorEstimate one_sided_slope_vector(F&& section, Side side, double tol = 1e-7) {
  const Eigen::VectorXd f0 = section(0.0);
  FdVectorEstimate est;
  Eigen::VectorXd prev;
  bool have_prev = false;
  for (double h : fd_detail::kSteps) {
    const double step = side == Side::Right ? h : -h;
    const Eigen::VectorXd slope = (section(step) - f0) / step;
    if (have_prev) {
      const double worst = (slope - prev).cwiseAbs().maxCoeff();
      if (worst <= tol * (1.0 + slope.cwiseAbs().maxCoeff())) {
        est.value = slope;
        est.converged = true;
        return est;
      }
    }
    prev = slope;
    have_prev = true;
  }
  est.value = prev;
  return est;
}

}  // namespace gapsi
