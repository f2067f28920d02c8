#include "gapsi/inventory.hpp"

#include <algorithm>
#include <cassert>

namespace gapsi {

namespace detail {

ForwardPass forward_pass(const SystemSpec& sys, const StateControl& z,
                         double volume_cap, int t) {
  check_couple_dims(sys, z, "forward_pass");
  ForwardPass fp;
  const int K = sys.num_products();
  fp.volumes.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    fp.volumes[static_cast<std::size_t>(k)] = sys.product(k).unit_volume(t);

  auto zf = couple_accessor(sys, z);
  fp.discard = discard_terms<double>(sys, zf, fp.volumes, volume_cap);
  fp.prefix.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    fp.prefix.push_back(onhand_prefix<double>(
        sys, k, zf, fp.discard.received_after[static_cast<std::size_t>(k)]));
  return fp;
}

}  // namespace detail

DiscardOutcome apply_discard(const SystemSpec& sys, const StateControl& z,
                             double volume_cap, int t) {
  check_couple_dims(sys, z, "apply_discard");
  const int K = sys.num_products();
  std::vector<double> volumes(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    volumes[static_cast<std::size_t>(k)] = sys.product(k).unit_volume(t);

  auto zf = detail::couple_accessor(sys, z);
  const auto terms = detail::discard_terms<double>(sys, zf, volumes, volume_cap);

  DiscardOutcome out{z, Eigen::VectorXd::Zero(K)};
  if (!terms.active) return out;
  for (int k = 0; k < K; ++k) {
    const int m = sys.product(k).lifetime;
    const double after = terms.received_after[static_cast<std::size_t>(k)];
    const double before = z.z(sys, k, m);
    out.removed_volume[k] = volumes[static_cast<std::size_t>(k)] * (before - after);
    if (sys.product(k).lead_time == 0)
      out.ztilde.u[k] = after;
    else
      out.ztilde.x[sys.state_offset(k) + m - 1] = after;
  }
  return out;
}

Eigen::VectorXd compute_sales(const SystemSpec& sys, const StateControl& ztilde,
                              const Eigen::VectorXd& demand) {
  check_couple_dims(sys, ztilde, "compute_sales");
  check_demand_dim(sys, demand, "compute_sales");
  Eigen::VectorXd sales(sys.sales_dim());
  auto zf = detail::couple_accessor(sys, ztilde);
  for (int k = 0; k < sys.num_products(); ++k) {
    const int m = sys.product(k).lifetime;
    double served = 0.0;  // sum of sales so far = min(prefix, demand), oldest first
    for (int i = 1; i <= m; ++i) {
      const double slot = zf(k, i);
      const double s = std::min(slot, positive_part(demand[k] - served));
      sales[sys.sales_offset(k) + i - 1] = s;
      served += s;
    }
  }
  return sales;
}

InventoryState transition(const SystemSpec& sys, const StateControl& z,
                          const Eigen::VectorXd& demand, double volume_cap, int t) {
  check_demand_dim(sys, demand, "transition");
  const auto fp = detail::forward_pass(sys, z, volume_cap, t);
  auto zf = detail::couple_accessor(sys, z);
  InventoryState next{Eigen::VectorXd(sys.state_dim())};
  for (int k = 0; k < sys.num_products(); ++k) {
    const auto slots = detail::next_state_slots<double>(
        sys, k, zf, fp.discard.received_after[static_cast<std::size_t>(k)],
        fp.prefix[static_cast<std::size_t>(k)], demand[k]);
    for (int i = 0; i < sys.product(k).slot_count(); ++i)
      next.x[sys.state_offset(k) + i] = slots[static_cast<std::size_t>(i)];
  }
  return next;
}

LossResult loss(const SystemSpec& sys, const StateControl& z,
                const Eigen::VectorXd& demand, double volume_cap, int t) {
  check_demand_dim(sys, demand, "loss");
  const auto fp = detail::forward_pass(sys, z, volume_cap, t);
  auto zf = detail::couple_accessor(sys, z);
  LossResult out;
  for (int k = 0; k < sys.num_products(); ++k) {
    const auto terms = detail::loss_terms<double>(
        sys, k, zf, fp.discard, fp.prefix[static_cast<std::size_t>(k)], demand[k], t);
    out.breakdown.penalty += terms.penalty;
    out.breakdown.holding += terms.holding;
    out.breakdown.purchase += terms.purchase;
    out.breakdown.outdating += terms.outdating;
    out.breakdown.overflow += terms.overflow;
  }
  out.total = out.breakdown.total();
  return out;
}

StepOutcome step(const SystemSpec& sys, const StateControl& z,
                 const Eigen::VectorXd& demand, double volume_cap, int t) {
  check_demand_dim(sys, demand, "step");
  const auto fp = detail::forward_pass(sys, z, volume_cap, t);
  auto zf = detail::couple_accessor(sys, z);
  const int K = sys.num_products();

  StepOutcome out;
  out.next_state.x.resize(sys.state_dim());
  out.sales.resize(sys.sales_dim());
  out.outdated.resize(K);
  out.discarded.resize(K);

  for (int k = 0; k < K; ++k) {
    const std::size_t ks = static_cast<std::size_t>(k);
    const double received_after = fp.discard.received_after[ks];
    const auto& prefix = fp.prefix[ks];
    const int m = sys.product(k).lifetime;

    const auto slots = detail::next_state_slots<double>(sys, k, zf, received_after,
                                                        prefix, demand[k]);
    for (int i = 0; i < sys.product(k).slot_count(); ++i)
      out.next_state.x[sys.state_offset(k) + i] = slots[static_cast<std::size_t>(i)];

    double served = 0.0;
    for (int i = 1; i <= m; ++i) {
      const double slot = (i == m) ? received_after : zf(k, i);
      const double s = std::min(slot, positive_part(demand[k] - served));
      out.sales[sys.sales_offset(k) + i - 1] = s;
      served += s;
    }

    const double oldest = fp.oldest(k);
    out.outdated[k] = positive_part(oldest - demand[k]);
    out.discarded[k] = fp.discard.active ? zf(k, m) - received_after : 0.0;

    const auto terms = detail::loss_terms<double>(sys, k, zf, fp.discard, prefix,
                                                  demand[k], t);
    out.breakdown.penalty += terms.penalty;
    out.breakdown.holding += terms.holding;
    out.breakdown.purchase += terms.purchase;
    out.breakdown.outdating += terms.outdating;
    out.breakdown.overflow += terms.overflow;
  }
  out.loss = out.breakdown.total();
  return out;
}

int simulate_episode(const SystemSpec& sys, const PolicyFn& policy,
                     const Eigen::MatrixXd& demands, const Sequence& volume_cap,
                     const StepCallback& on_step, const InventoryState* x1) {
  if (demands.cols() != sys.control_dim())
    throw std::invalid_argument("simulate_episode: demand matrix needs one column per product");
  InventoryState state = x1 ? *x1 : InventoryState::zero(sys);
  check_state_dim(sys, state.x, "simulate_episode");

  int clamped = 0;
  const int T = static_cast<int>(demands.rows());
  for (int t = 1; t <= T; ++t) {
    Eigen::VectorXd u = policy(t, state);
    if (u.size() != sys.control_dim())
      throw std::invalid_argument("simulate_episode: policy returned wrong order count");
    if ((u.array() < 0.0).any()) {
      ++clamped;
      u = u.cwiseMax(0.0);
    }
    StateControl z{std::move(state.x), std::move(u)};
    StepOutcome outcome = step(sys, z, demands.row(t - 1).transpose(), volume_cap(t), t);
    state = outcome.next_state;
    on_step(t, z, outcome);
  }
  return clamped;
}

EpisodeTrace simulate_episode(const SystemSpec& sys, const PolicyFn& policy,
                              const Eigen::MatrixXd& demands, const Sequence& volume_cap,
                              const InventoryState* x1) {
  EpisodeTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(demands.rows()));
  trace.orders.resize(demands.rows(), sys.control_dim());
  trace.clamped_orders = simulate_episode(
      sys, policy, demands, volume_cap,
      [&trace](int t, const StateControl& z, const StepOutcome& o) {
        trace.orders.row(t - 1) = z.u;
        trace.steps.push_back(o);
      },
      x1);
  return trace;
}

}  // namespace gapsi
