#include "gapsi/derivatives.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gapsi {
namespace {

// Flat z-column of on-hand slot i (1-based, i <= m_k); the received slot maps
// to the control column when the lead time is zero.
int onhand_col(const SystemSpec& sys, int k, int i) {
  return i == sys.product(k).lifetime ? sys.z_col_received(k) : sys.z_col_state(k, i);
}

// Row zeta(k) of d ztilde / d z: how the received slot of product k reacts to
// each z coordinate, differentiated through excess -> beta_k -> alpha_k. Uses
// the forward pass values verbatim so every indicator sees the doubles the
// simulation produced.
Eigen::RowVectorXd received_row(const SystemSpec& sys, const detail::ForwardPass& fwd,
                                double volume_cap, int k, Side side) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(sys.z_dim());
  if (!fwd.discard.active) {
    row[sys.z_col_received(k)] = 1.0;
    return row;
  }
  const std::size_t uk = static_cast<std::size_t>(k);
  const double slack = fwd.discard.total_volume - volume_cap;
  const double beta = fwd.discard.beta[uk];
  const double alpha = fwd.discard.alpha[uk];
  const double vk = fwd.volumes[uk];
  const int zeta = sys.z_col_received(k);
  for (int kp = 0; kp < sys.num_products(); ++kp) {
    const double vp = fwd.volumes[static_cast<std::size_t>(kp)];
    const int mp = sys.product(kp).lifetime;
    for (int i = 1; i <= mp; ++i) {
      const int c = onhand_col(sys, kp, i);
      double dbeta = relu_chain(slack, vp, side);
      if (kp < k && i == mp) dbeta -= vp;  // earlier arrivals absorb the excess first
      const double dalpha = (c == zeta ? 1.0 : 0.0) - relu_chain(beta, dbeta, side) / vk;
      row[c] = relu_chain(alpha, dalpha, side);
    }
  }
  return row;
}

void check_sales_dim(const SystemSpec& sys, const Eigen::VectorXd& s, const char* where) {
  if (s.size() != sys.sales_dim())
    throw std::invalid_argument(std::string(where) + ": sales have " +
                                std::to_string(s.size()) + " entries, expected " +
                                std::to_string(sys.sales_dim()));
}

}  // namespace

PolicyJacobians policy_jacobians(const SystemSpec& sys, const FeatureVector& w,
                                 const Eigen::VectorXd& theta,
                                 const InventoryState& x, Side side) {
  check_policy_dims(sys, w, theta, "policy_jacobians");
  check_state_dim(sys, x.x, "policy_jacobians");
  const int K = sys.num_products();
  PolicyJacobians J;
  J.wrt_state = Eigen::MatrixXd::Zero(K, sys.state_dim());
  J.wrt_theta = Eigen::MatrixXd::Zero(K, w.dim());
  const Eigen::VectorXd levels = policy_levels(sys, w, theta);
  for (int k = 0; k < K; ++k) {
    const double gap = levels[k] - inventory_position(sys, x.x, k);
    for (int i = 1; i <= sys.product(k).slot_count(); ++i)
      J.wrt_state(k, sys.z_col_state(k, i)) = relu_chain(gap, -1.0, side);
    for (int j = 0; j < w.size(k); ++j) {
      const int c = w.offset(k) + j;
      J.wrt_theta(k, c) = relu_chain(gap, w.values[c], side);
    }
  }
  return J;
}

Eigen::MatrixXd ztilde_jacobian(const SystemSpec& sys, const StateControl& z,
                                double volume_cap, int t, Side side) {
  check_couple_dims(sys, z, "ztilde_jacobian");
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(sys.z_dim(), sys.z_dim());
  if (std::isinf(volume_cap)) return J;  // exact identity, no kinks to consult
  const detail::ForwardPass fwd = detail::forward_pass(sys, z, volume_cap, t);
  for (int k = 0; k < sys.num_products(); ++k)
    J.row(sys.z_col_received(k)) = received_row(sys, fwd, volume_cap, k, side);
  return J;
}

Eigen::RowVectorXd loss_jacobian(const SystemSpec& sys, const StateControl& z,
                                 const Eigen::VectorXd& demand, double volume_cap,
                                 int t, Side side) {
  check_couple_dims(sys, z, "loss_jacobian");
  check_demand_dim(sys, demand, "loss_jacobian");
  const detail::ForwardPass fwd = detail::forward_pass(sys, z, volume_cap, t);
  const int Z = sys.z_dim();
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(Z);
  for (int k = 0; k < sys.num_products(); ++k) {
    const ProductSpec& p = sys.product(k);
    const int m = p.lifetime;
    const Eigen::RowVectorXd zrow = received_row(sys, fwd, volume_cap, k, side);

    // P_m and ztilde_{k,1} depend on z through the first m-1 slots directly
    // and through the received slot via zrow.
    Eigen::RowVectorXd donhand = zrow;
    for (int i = 1; i <= m - 1; ++i) donhand[sys.z_col_state(k, i)] += 1.0;
    Eigen::RowVectorXd doldest = Eigen::RowVectorXd::Zero(Z);
    if (m == 1)
      doldest = zrow;
    else
      doldest[sys.z_col_state(k, 1)] = 1.0;

    const double surplus = fwd.onhand_total(k) - demand[k];
    const double shortage = demand[k] - fwd.onhand_total(k);
    const double expiring = fwd.oldest(k) - demand[k];
    const double ch = p.costs.holding(t);
    const double cp = p.costs.penalty(t);
    const double co = p.costs.outdating(t);
    for (int c = 0; c < Z; ++c) {
      double g = ch * relu_chain(surplus, donhand[c], side);
      g += cp * relu_chain(shortage, -donhand[c], side);
      g += co * relu_chain(expiring, doldest[c], side);
      row[c] += g;
    }
    row[sys.z_col_control(k)] += p.costs.purchase(t);
    if (fwd.discard.active) {
      const double cv = p.costs.overflow(t);  // charged per unit, not per volume
      row[sys.z_col_received(k)] += cv;
      row -= cv * zrow;
    }
  }
  return row;
}

Eigen::MatrixXd transition_jacobian(const SystemSpec& sys, const StateControl& z,
                                    const Eigen::VectorXd& demand, double volume_cap,
                                    int t, Side side) {
  check_couple_dims(sys, z, "transition_jacobian");
  check_demand_dim(sys, demand, "transition_jacobian");
  const detail::ForwardPass fwd = detail::forward_pass(sys, z, volume_cap, t);
  const int Z = sys.z_dim();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(sys.state_dim(), Z);
  for (int k = 0; k < sys.num_products(); ++k) {
    const ProductSpec& p = sys.product(k);
    const int m = p.lifetime;
    const int n = p.slot_count();
    const std::vector<double>& prefix = fwd.prefix[static_cast<std::size_t>(k)];

    for (int i = m; i <= n; ++i) {  // pipeline slots age deterministically
      const int r = sys.state_offset(k) + i - 1;
      const int c = i + 1 <= n ? sys.z_col_state(k, i + 1) : sys.z_col_control(k);
      J(r, c) = 1.0;
    }

    // Slots that never see the received batch: depend on own-product stock only.
    for (int i = 1; i <= m - 2; ++i) {
      const int r = sys.state_offset(k) + i - 1;
      const double dp = demand[k] - prefix[static_cast<std::size_t>(i - 1)];
      const double f = z.z(sys, k, i + 1) - positive_part(dp);
      J(r, sys.z_col_state(k, i + 1)) = relu_chain(f, 1.0, side);
      const double dserve = -relu_chain(dp, -1.0, side);  // d [d - P_i]^+ sign-flipped
      for (int ip = 1; ip <= i; ++ip)
        J(r, sys.z_col_state(k, ip)) = relu_chain(f, dserve, side);
    }

    // The youngest on-hand slot after aging comes from the received batch.
    if (m >= 2) {
      const int r = sys.state_offset(k) + m - 2;
      const double dp = demand[k] - prefix[static_cast<std::size_t>(m - 2)];
      const double delta =
          fwd.discard.received_after[static_cast<std::size_t>(k)] - positive_part(dp);
      Eigen::RowVectorXd ddelta = received_row(sys, fwd, volume_cap, k, side);
      const double dserve = -relu_chain(dp, -1.0, side);
      for (int ip = 1; ip <= m - 1; ++ip) ddelta[sys.z_col_state(k, ip)] += dserve;
      for (int c = 0; c < Z; ++c) J(r, c) = relu_chain(delta, ddelta[c], side);
    }
  }
  return J;
}

Eigen::RowVectorXd censored_loss_jacobian(const SystemSpec& sys, const StateControl& z,
                                          const Eigen::VectorXd& sales, int t) {
  check_couple_dims(sys, z, "censored_loss_jacobian");
  check_sales_dim(sys, sales, "censored_loss_jacobian");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(sys.z_dim());
  for (int k = 0; k < sys.num_products(); ++k) {
    const ProductSpec& p = sys.product(k);
    const int m = p.lifetime;
    double stock = 0.0, sold = 0.0;  // accumulated oldest-first, like the forward pass
    for (int i = 1; i <= m; ++i) {
      stock += z.z(sys, k, i);
      sold += sales[sys.sales_offset(k) + i - 1];
    }
    const double ch = p.costs.holding(t);
    const double cp = p.costs.penalty(t);
    for (int i = 1; i <= m; ++i) {
      const int c = onhand_col(sys, k, i);
      if (stock > sold) row[c] += ch;    // leftovers: demand was fully served
      if (stock == sold) row[c] -= cp;   // sold out: demand at least the stock
    }
    if (z.z(sys, k, 1) > sales[sys.sales_offset(k)])
      row[onhand_col(sys, k, 1)] += p.costs.outdating(t);
    row[sys.z_col_control(k)] += p.costs.purchase(t);
  }
  return row;
}

Eigen::MatrixXd censored_transition_jacobian(const SystemSpec& sys, const StateControl& z,
                                             const Eigen::VectorXd& sales) {
  check_couple_dims(sys, z, "censored_transition_jacobian");
  check_sales_dim(sys, sales, "censored_transition_jacobian");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(sys.state_dim(), sys.z_dim());
  for (int k = 0; k < sys.num_products(); ++k) {
    const ProductSpec& p = sys.product(k);
    const int m = p.lifetime;
    const int n = p.slot_count();
    std::vector<double> stock(static_cast<std::size_t>(m));
    std::vector<double> sold(static_cast<std::size_t>(m));
    double az = 0.0, as = 0.0;
    for (int i = 1; i <= m; ++i) {
      az += z.z(sys, k, i);
      as += sales[sys.sales_offset(k) + i - 1];
      stock[static_cast<std::size_t>(i - 1)] = az;
      sold[static_cast<std::size_t>(i - 1)] = as;
    }
    for (int i = m; i <= n; ++i) {
      const int r = sys.state_offset(k) + i - 1;
      const int c = i + 1 <= n ? sys.z_col_state(k, i + 1) : sys.z_col_control(k);
      J(r, c) = 1.0;
    }
    for (int i = 1; i <= m - 1; ++i) {
      const int r = sys.state_offset(k) + i - 1;
      const double leftover = z.z(sys, k, i + 1) - sales[sys.sales_offset(k) + i];
      if (leftover > 0.0) J(r, onhand_col(sys, k, i + 1)) = 1.0;
      // Older slots matter only when slot i+1 sold some but the first i slots
      // sold out exactly: the boundary where served demand shifts age.
      if (stock[static_cast<std::size_t>(i)] > sold[static_cast<std::size_t>(i)] &&
          stock[static_cast<std::size_t>(i - 1)] == sold[static_cast<std::size_t>(i - 1)])
        for (int ip = 1; ip <= i; ++ip) J(r, onhand_col(sys, k, ip)) += 1.0;
    }
  }
  return J;
}

JacobianSet jacobian_set(const SystemSpec& sys, const FeatureVector& w,
                         const Eigen::VectorXd& theta, const StateControl& z,
                         const FullInformationFeedback& fb, int t,
                         Side policy_side, Side dynamics_side) {
  JacobianSet J;
  const PolicyJacobians pj = policy_jacobians(sys, w, theta, InventoryState{z.x}, policy_side);
  J.policy_state = pj.wrt_state;
  J.policy_theta = pj.wrt_theta;
  J.loss_z = loss_jacobian(sys, z, fb.demand, fb.volume_cap, t, dynamics_side);
  J.transition_z = transition_jacobian(sys, z, fb.demand, fb.volume_cap, t, dynamics_side);
  return J;
}

JacobianSet jacobian_set(const SystemSpec& sys, const FeatureVector& w,
                         const Eigen::VectorXd& theta, const StateControl& z,
                         const CensoredFeedback& fb, int t, Side policy_side) {
  JacobianSet J;
  const PolicyJacobians pj = policy_jacobians(sys, w, theta, InventoryState{z.x}, policy_side);
  J.policy_state = pj.wrt_state;
  J.policy_theta = pj.wrt_theta;
  J.loss_z = censored_loss_jacobian(sys, z, fb.sales, t);
  J.transition_z = censored_transition_jacobian(sys, z, fb.sales);
  return J;
}

}  // namespace gapsi
