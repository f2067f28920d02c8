#pragma once

#include "gapsi/derivatives.hpp"
#include "gapsi/inventory.hpp"
#include "gapsi/policy.hpp"

#include <Eigen/Dense>

#include <deque>

// Online tuning of the base-stock parameters: a buffered policy-gradient
// estimate (the gradient of today's loss with respect to a parameter held
// fixed over the recent past) feeds a projected AdaGrad step. All the
// derivative bookkeeping runs on the one-sided Jacobians; the buffer update
// and the gradient contraction keep a fixed evaluation order so an unrolled
// reference computation reproduces them bit for bit.

namespace gapsi {

struct ParameterBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static ParameterBox uniform(int dim, double lo, double hi) {
    return ParameterBox{Eigen::VectorXd::Constant(dim, lo),
                        Eigen::VectorXd::Constant(dim, hi)};
  }

  void validate(const char* where) const;
  Eigen::VectorXd project(Eigen::VectorXd v) const;
  Eigen::VectorXd midpoint() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd width() const { return upper - lower; }
};

struct AdagradState {
  Eigen::VectorXd accum;  // running sum of squared gradient coordinates
};

// theta_i -= eta * width_i * g_i / sqrt(accum_i) with the fresh g_i^2 already
// inside accum_i, then clip to the box. A coordinate that has never seen a
// nonzero gradient is left alone.
void adagrad_update(AdagradState& st, Eigen::VectorXd& theta,
                    const Eigen::RowVectorXd& g, double eta, const ParameterBox& box);

struct GapsiOptions {
  double eta = 0.1;
  int buffer_length = 10;  // B: the gradient sees B - 1 periods of state memory
  ParameterBox box;
  Side policy_side = Side::Right;
  Side dynamics_side = Side::Left;
};

struct GapsiState {
  Eigen::VectorXd theta;
  AdagradState adagrad;
  std::deque<Eigen::MatrixXd> buffer;  // d x_t / d theta_{t-b}, oldest entry first
};

// theta0 defaults to the box midpoint; a supplied theta0 is projected.
GapsiState gapsi_init(const SystemSpec& sys, const FeatureVector& w,
                      const GapsiOptions& opt, const Eigen::VectorXd* theta0 = nullptr);

// Closed-loop period Jacobians: how the next state reacts to the current
// state (through the policy) and to the parameter.
Eigen::MatrixXd closed_loop_state_jacobian(const JacobianSet& J);
Eigen::MatrixXd closed_loop_theta_jacobian(const JacobianSet& J);

// d loss_t / d theta with theta frozen over the buffered window. The buffer
// totals accumulate oldest first; reorderings would change low-order bits.
Eigen::RowVectorXd gaps_gradient(const JacobianSet& J,
                                 const std::deque<Eigen::MatrixXd>& buffer);

// One period of the buffer recursion: existing entries advance through the
// closed loop, then the fresh parameter-to-state map enters, newest last.
void advance_buffer(std::deque<Eigen::MatrixXd>& buffer, const JacobianSet& J,
                    int buffer_length);

Eigen::VectorXd gapsi_order(const SystemSpec& sys, const FeatureVector& w,
                            const GapsiState& state, const InventoryState& x);

// Digest one period's feedback: gradient, parameter step, buffer shift.
void gapsi_learn(const SystemSpec& sys, const FeatureVector& w, GapsiState& state,
                 const StateControl& z, const FullInformationFeedback& fb, int t,
                 const GapsiOptions& opt);
void gapsi_learn(const SystemSpec& sys, const FeatureVector& w, GapsiState& state,
                 const StateControl& z, const CensoredFeedback& fb, int t,
                 const GapsiOptions& opt);

// Order for period t, then learn from the revealed demand. Returns the order;
// the caller advances the physical state separately.
Eigen::VectorXd gapsi_step(const SystemSpec& sys, const FeatureVector& w,
                           GapsiState& state, const InventoryState& x,
                           const Eigen::VectorXd& demand, double volume_cap, int t,
                           const GapsiOptions& opt);

}  // namespace gapsi
