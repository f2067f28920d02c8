#pragma once

#include "gapsi/inventory.hpp"
#include "gapsi/policy.hpp"
#include "gapsi/system.hpp"

#include <Eigen/Dense>

// One-sided Jacobians of the period map. Every quantity here is piecewise
// linear, so left and right derivatives exist everywhere; they differ only on
// the kink sets. Indicator tests compare the exact doubles produced by the
// shared forward pass (no epsilons), which keeps a Jacobian consistent with
// the forward values it was computed from.

namespace gapsi {

enum class Side { Left, Right };

// One-sided derivative of max(f, 0) given the value of f and the one-sided
// derivative d of f taken on the same side:
//   Right: d * (1[f > 0] + 1[d > 0] * 1[f = 0])
//   Left:  d * (1[f > 0] + 1[d < 0] * 1[f = 0])
// At a kink the side that leaves the flat region keeps its slope, the side
// that enters it reads zero.
inline double relu_chain(double f, double d, Side side) {
  if (f > 0.0) return d;
  if (f == 0.0 && (side == Side::Right ? d > 0.0 : d < 0.0)) return d;
  return 0.0;
}

struct PolicyJacobians {
  Eigen::MatrixXd wrt_state;  // K x n
  Eigen::MatrixXd wrt_theta;  // K x P
};

PolicyJacobians policy_jacobians(const SystemSpec& sys, const FeatureVector& w,
                                 const Eigen::VectorXd& theta,
                                 const InventoryState& x, Side side);

// d ztilde / d z, an (n+K) x (n+K) matrix in flat z order. Identity except
// the received-slot rows; the identity is exact when the cap is infinite.
Eigen::MatrixXd ztilde_jacobian(const SystemSpec& sys, const StateControl& z,
                                double volume_cap, int t, Side side);

// d loss / d z, 1 x (n+K).
Eigen::RowVectorXd loss_jacobian(const SystemSpec& sys, const StateControl& z,
                                 const Eigen::VectorXd& demand, double volume_cap,
                                 int t, Side side);

// d next-state / d z, n x (n+K).
Eigen::MatrixXd transition_jacobian(const SystemSpec& sys, const StateControl& z,
                                    const Eigen::VectorXd& demand, double volume_cap,
                                    int t, Side side);

// Sales-censored left Jacobians: demand is unobserved, only slot-level sales
// are. Defined for an uncapacitated warehouse; they coincide with the left
// Jacobians above at infinite cap.
Eigen::RowVectorXd censored_loss_jacobian(const SystemSpec& sys, const StateControl& z,
                                          const Eigen::VectorXd& sales, int t);

Eigen::MatrixXd censored_transition_jacobian(const SystemSpec& sys, const StateControl& z,
                                             const Eigen::VectorXd& sales);

// Jacobians of one period at (x, u, theta), sides chosen per consumer: the
// policy is differentiated on `policy_side`, loss and transition on
// `dynamics_side`.
struct JacobianSet {
  Eigen::MatrixXd policy_state;   // K x n
  Eigen::MatrixXd policy_theta;   // K x P
  Eigen::RowVectorXd loss_z;      // 1 x (n+K), states first then controls
  Eigen::MatrixXd transition_z;   // n x (n+K)
};

struct FullInformationFeedback {
  Eigen::VectorXd demand;
  double volume_cap = kInfiniteVolume;
};

struct CensoredFeedback {
  Eigen::VectorXd sales;  // flat slot-level sales
};

JacobianSet jacobian_set(const SystemSpec& sys, const FeatureVector& w,
                         const Eigen::VectorXd& theta, const StateControl& z,
                         const FullInformationFeedback& fb, int t,
                         Side policy_side = Side::Right,
                         Side dynamics_side = Side::Left);

JacobianSet jacobian_set(const SystemSpec& sys, const FeatureVector& w,
                         const Eigen::VectorXd& theta, const StateControl& z,
                         const CensoredFeedback& fb, int t,
                         Side policy_side = Side::Right);

}  // namespace gapsi
