#include "gapsi/controller.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gapsi {

void ParameterBox::validate(const char* where) const {
  if (lower.size() != upper.size())
    throw std::invalid_argument(std::string(where) + ": box bound sizes disagree");
  if (lower.size() == 0)
    throw std::invalid_argument(std::string(where) + ": box is empty");
  for (int i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i]))
      throw std::invalid_argument(std::string(where) + ": box has lower > upper");
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || std::isinf(lower[i]) ||
        std::isinf(upper[i]))
      throw std::invalid_argument(std::string(where) + ": box bounds must be finite");
  }
}

Eigen::VectorXd ParameterBox::project(Eigen::VectorXd v) const {
  return v.cwiseMax(lower).cwiseMin(upper);
}

void adagrad_update(AdagradState& st, Eigen::VectorXd& theta,
                    const Eigen::RowVectorXd& g, double eta, const ParameterBox& box) {
  for (int i = 0; i < theta.size(); ++i) {
    st.accum[i] += g[i] * g[i];
    if (st.accum[i] > 0.0)
      theta[i] -= eta * (box.upper[i] - box.lower[i]) * g[i] / std::sqrt(st.accum[i]);
    theta[i] = std::min(std::max(theta[i], box.lower[i]), box.upper[i]);
  }
}

GapsiState gapsi_init(const SystemSpec& sys, const FeatureVector& w,
                      const GapsiOptions& opt, const Eigen::VectorXd* theta0) {
  opt.box.validate("gapsi_init");
  if (opt.box.lower.size() != w.dim())
    throw std::invalid_argument("gapsi_init: box and features disagree");
  if (opt.buffer_length < 1)
    throw std::invalid_argument("gapsi_init: buffer length must be >= 1");
  if (!(opt.eta >= 0.0))
    throw std::invalid_argument("gapsi_init: step size must be >= 0");
  GapsiState state;
  state.theta = opt.box.project(theta0 ? *theta0 : opt.box.midpoint());
  check_policy_dims(sys, w, state.theta, "gapsi_init");
  state.adagrad.accum = Eigen::VectorXd::Zero(w.dim());
  return state;
}

Eigen::MatrixXd closed_loop_state_jacobian(const JacobianSet& J) {
  const int n = J.policy_state.cols();
  const int K = J.policy_state.rows();
  return J.transition_z.leftCols(n) + J.transition_z.rightCols(K) * J.policy_state;
}

Eigen::MatrixXd closed_loop_theta_jacobian(const JacobianSet& J) {
  const int K = J.policy_state.rows();
  return J.transition_z.rightCols(K) * J.policy_theta;
}

Eigen::RowVectorXd gaps_gradient(const JacobianSet& J,
                                 const std::deque<Eigen::MatrixXd>& buffer) {
  const int n = J.policy_state.cols();
  const int K = J.policy_state.rows();
  const auto loss_x = J.loss_z.head(n);
  const auto loss_u = J.loss_z.tail(K);
  Eigen::RowVectorXd g = loss_u * J.policy_theta;
  if (!buffer.empty()) {
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, J.policy_theta.cols());
    for (const Eigen::MatrixXd& M : buffer) total += M;
    g += (loss_x + loss_u * J.policy_state) * total;
  }
  return g;
}

void advance_buffer(std::deque<Eigen::MatrixXd>& buffer, const JacobianSet& J,
                    int buffer_length) {
  const Eigen::MatrixXd A = closed_loop_state_jacobian(J);
  for (Eigen::MatrixXd& M : buffer) M = A * M;
  buffer.push_back(closed_loop_theta_jacobian(J));
  while (static_cast<int>(buffer.size()) > buffer_length - 1) buffer.pop_front();
}

Eigen::VectorXd gapsi_order(const SystemSpec& sys, const FeatureVector& w,
                            const GapsiState& state, const InventoryState& x) {
  return policy_order(sys, w, state.theta, x);
}

void gapsi_learn(const SystemSpec& sys, const FeatureVector& w, GapsiState& state,
                 const StateControl& z, const FullInformationFeedback& fb, int t,
                 const GapsiOptions& opt) {
  const JacobianSet J = jacobian_set(sys, w, state.theta, z, fb, t, opt.policy_side,
                                     opt.dynamics_side);
  const Eigen::RowVectorXd g = gaps_gradient(J, state.buffer);
  adagrad_update(state.adagrad, state.theta, g, opt.eta, opt.box);
  advance_buffer(state.buffer, J, opt.buffer_length);
}

void gapsi_learn(const SystemSpec& sys, const FeatureVector& w, GapsiState& state,
                 const StateControl& z, const CensoredFeedback& fb, int t,
                 const GapsiOptions& opt) {
  const JacobianSet J = jacobian_set(sys, w, state.theta, z, fb, t, opt.policy_side);
  const Eigen::RowVectorXd g = gaps_gradient(J, state.buffer);
  adagrad_update(state.adagrad, state.theta, g, opt.eta, opt.box);
  advance_buffer(state.buffer, J, opt.buffer_length);
}

Eigen::VectorXd gapsi_step(const SystemSpec& sys, const FeatureVector& w,
                           GapsiState& state, const InventoryState& x,
                           const Eigen::VectorXd& demand, double volume_cap, int t,
                           const GapsiOptions& opt) {
  Eigen::VectorXd u = gapsi_order(sys, w, state, x);
  StateControl z{x.x, u};
  gapsi_learn(sys, w, state, z, FullInformationFeedback{demand, volume_cap}, t, opt);
  return u;
}

}  // namespace gapsi
