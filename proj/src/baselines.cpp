#include "gapsi/baselines.hpp"

#include "gapsi/kernels.hpp"
#include "gapsi/piecewise_linear.hpp"
#include "gapsi/policy.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <vector>

namespace gapsi {
namespace {

void check_demand_matrix(const SystemSpec& sys, const Eigen::MatrixXd& demands,
                         const char* where) {
  if (demands.rows() == 0)
    throw std::domain_error(std::string(where) + ": empty demand sequence");
  if (demands.cols() != sys.num_products())
    throw std::invalid_argument(std::string(where) + ": demand columns != products");
}

double episode_loss(const SystemSpec& sys, const PolicyFn& policy,
                    const Eigen::MatrixXd& demands, double volume_cap) {
  double total = 0.0;
  simulate_episode(sys, policy, demands, Sequence::constant(volume_cap),
                   [&](int, const StateControl&, const StepOutcome& out) {
                     total += out.loss;
                   });
  return total;
}

// Kink locations of the hindsight loss in one product's level: sums of
// consecutive demands over windows no longer than the reception delay plus
// one, topped up with a uniform grid. Sorted, deduplicated, starts at 0.
std::vector<double> level_candidates(const SystemSpec& sys,
                                     const Eigen::MatrixXd& demands, int k,
                                     int grid_points) {
  const int window = sys.product(k).lead_time + 1;
  const int T = static_cast<int>(demands.rows());
  std::vector<double> c{0.0};
  for (int len = 1; len <= window; ++len)
    for (int start = 0; start + len <= T; ++start) {
      double s = 0.0;
      for (int j = 0; j < len; ++j) s += demands(start + j, k);
      c.push_back(s);
    }
  const double span = window * demands.col(k).maxCoeff();
  if (span > 0.0 && grid_points >= 2)
    for (int i = 0; i < grid_points; ++i)
      c.push_back(i * span / (grid_points - 1));
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

}  // namespace

PolicyFn stationary_policy(const SystemSpec& sys, const Eigen::VectorXd& levels) {
  return [&sys, levels](int, const InventoryState& x) {
    Eigen::VectorXd u(sys.num_products());
    for (int k = 0; k < sys.num_products(); ++k)
      u[k] = positive_part(levels[k] - inventory_position(sys, x.x, k));
    return u;
  };
}

PolicyFn cyclic_policy(const SystemSpec& sys, const Eigen::MatrixXd& levels) {
  return [&sys, levels](int t, const InventoryState& x) {
    const Eigen::VectorXd row = levels.row((t - 1) % levels.rows());
    Eigen::VectorXd u(sys.num_products());
    for (int k = 0; k < sys.num_products(); ++k)
      u[k] = positive_part(row[k] - inventory_position(sys, x.x, k));
    return u;
  };
}

PolicyFn forecast_policy(const SystemSpec& sys, const Eigen::MatrixXd& forecasts) {
  return [&sys, forecasts](int t, const InventoryState& x) {
    return forecast_level_order(sys, x, forecasts.row(t - 1));
  };
}

Eigen::VectorXd forecast_level_order(const SystemSpec& sys, const InventoryState& x,
                                     const Eigen::VectorXd& forecast) {
  check_state_dim(sys, x.x, "forecast_level_order");
  check_demand_dim(sys, forecast, "forecast_level_order");
  Eigen::VectorXd u(sys.num_products());
  for (int k = 0; k < sys.num_products(); ++k)
    u[k] = positive_part(forecast[k] - inventory_position(sys, x.x, k));
  return u;
}

StationarySearch best_stationary_level(const SystemSpec& sys,
                                       const Eigen::MatrixXd& demands,
                                       double volume_cap, int grid_points) {
  check_demand_matrix(sys, demands, "best_stationary_level");
  const int K = sys.num_products();
  std::vector<std::vector<double>> candidates;
  candidates.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    candidates.push_back(level_candidates(sys, demands, k, grid_points));

  StationarySearch best;
  best.levels = Eigen::VectorXd::Zero(K);
  best.loss = episode_loss(sys, stationary_policy(sys, best.levels), demands,
                           volume_cap);
  // With an infinite cap the products are independent and one sweep settles
  // every coordinate; a finite cap couples them, so cycle to a fixed point.
  bool improved = true;
  while (improved) {
    improved = false;
    for (int k = 0; k < K; ++k) {
      double arg = best.levels[k];
      double val = best.loss;
      Eigen::VectorXd trial = best.levels;
      for (double c : candidates[static_cast<std::size_t>(k)]) {
        if (c == arg) continue;
        trial[k] = c;
        const double lv =
            episode_loss(sys, stationary_policy(sys, trial), demands, volume_cap);
        if (lv < val || (lv == val && c < arg)) {
          arg = c;
          val = lv;
        }
      }
      if (val < best.loss) improved = true;
      if (arg != best.levels[k]) {
        best.levels[k] = arg;
        best.loss = val;
      }
    }
  }
  return best;
}

CyclicSearch best_cyclic_level(const SystemSpec& sys, const Eigen::MatrixXd& demands,
                               int period, double volume_cap, int grid_points) {
  check_demand_matrix(sys, demands, "best_cyclic_level");
  if (period < 1) throw std::domain_error("best_cyclic_level: period must be >= 1");
  const int K = sys.num_products();
  std::vector<std::vector<double>> candidates;
  candidates.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    candidates.push_back(level_candidates(sys, demands, k, grid_points));

  const StationarySearch init = best_stationary_level(sys, demands, volume_cap,
                                                      grid_points);
  CyclicSearch best;
  best.levels = init.levels.transpose().replicate(period, 1);
  best.loss = init.loss;

  bool improved = true;
  while (improved) {
    improved = false;
    for (int p = 0; p < period; ++p) {
      for (int k = 0; k < K; ++k) {
        double arg = best.levels(p, k);
        double val = best.loss;
        Eigen::MatrixXd trial = best.levels;
        for (double c : candidates[static_cast<std::size_t>(k)]) {
          if (c == arg) continue;
          trial(p, k) = c;
          const double lv =
              episode_loss(sys, cyclic_policy(sys, trial), demands, volume_cap);
          if (lv < val || (lv == val && c < arg)) {
            arg = c;
            val = lv;
          }
        }
        if (val < best.loss) improved = true;
        if (arg != best.levels(p, k)) {
          best.levels(p, k) = arg;
          best.loss = val;
        }
      }
    }
  }
  return best;
}

namespace {

// Predicted loss of the plan, rolled out with forecast demand substituted.
double plan_loss(const SystemSpec& sys, const InventoryState& x,
                 const Eigen::MatrixXd& controls, const Eigen::MatrixXd& forecasts,
                 double volume_cap, int t) {
  double total = 0.0;
  InventoryState xs = x;
  for (int tau = 0; tau < controls.rows(); ++tau) {
    const StepOutcome out = step(sys, StateControl{xs.x, controls.row(tau)},
                                 forecasts.row(tau), volume_cap, t + tau);
    total += out.loss;
    xs = out.next_state;
  }
  return total;
}

// The same rollout as a piecewise-linear function of one planned order. The
// chosen coordinate enters as the free variable; everything else is constant.
PwlScalar plan_loss_curve(const SystemSpec& sys, const InventoryState& x,
                          const Eigen::MatrixXd& controls,
                          const Eigen::MatrixXd& forecasts, double volume_cap,
                          int t, int tau0, int k0) {
  const int K = sys.num_products();
  std::vector<PwlScalar> state(static_cast<std::size_t>(sys.state_dim()));
  for (int j = 0; j < sys.state_dim(); ++j)
    state[static_cast<std::size_t>(j)] = x.x[j];

  PwlScalar objective{0.0};
  for (int tau = 0; tau < controls.rows(); ++tau) {
    auto z = [&](int k, int i) -> PwlScalar {
      if (i <= sys.product(k).slot_count())
        return state[static_cast<std::size_t>(sys.state_offset(k) + i - 1)];
      if (tau == tau0 && k == k0) return PwlScalar::variable();
      return PwlScalar{controls(tau, k)};
    };
    std::vector<double> volumes(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      volumes[static_cast<std::size_t>(k)] = sys.product(k).unit_volume(t + tau);

    const auto discard = detail::discard_terms<PwlScalar>(sys, z, volumes, volume_cap);
    std::vector<PwlScalar> next;
    next.reserve(static_cast<std::size_t>(sys.state_dim()));
    for (int k = 0; k < K; ++k) {
      const auto prefix = detail::onhand_prefix<PwlScalar>(
          sys, k, z, discard.received_after[static_cast<std::size_t>(k)]);
      objective = objective + detail::loss_terms<PwlScalar>(sys, k, z, discard, prefix,
                                                            forecasts(tau, k), t + tau)
                                  .total();
      auto slots = detail::next_state_slots<PwlScalar>(
          sys, k, z, discard.received_after[static_cast<std::size_t>(k)], prefix,
          forecasts(tau, k));
      for (auto& s : slots) next.push_back(std::move(s));
    }
    state = std::move(next);
  }
  return objective;
}

}  // namespace

MpcPlan mpc_plan(const SystemSpec& sys, const InventoryState& x,
                 const Eigen::MatrixXd& forecasts, double volume_cap, int t) {
  check_state_dim(sys, x.x, "mpc_plan");
  if (forecasts.rows() < 1)
    throw std::domain_error("mpc_plan: horizon must cover at least one period");
  if (forecasts.cols() != sys.num_products())
    throw std::invalid_argument("mpc_plan: forecast columns != products");
  if ((forecasts.array() < 0.0).any())
    throw std::domain_error("mpc_plan: negative forecast");

  const int H = static_cast<int>(forecasts.rows());
  const int K = sys.num_products();

  MpcPlan plan;
  plan.horizon = H;
  plan.forecasts = forecasts;
  plan.controls.resize(H, K);
  {  // order-up-to-forecast start, simulated forward so positions are honest
    InventoryState xs = x;
    for (int tau = 0; tau < H; ++tau) {
      plan.controls.row(tau) = forecast_level_order(sys, xs, forecasts.row(tau));
      xs = step(sys, StateControl{xs.x, plan.controls.row(tau)}, forecasts.row(tau),
                volume_cap, t + tau)
               .next_state;
    }
  }

  double objective = plan_loss(sys, x, plan.controls, forecasts, volume_cap, t);
  for (plan.sweeps = 0; plan.sweeps < 100; ++plan.sweeps) {
    const double sweep_start = objective;
    for (int tau = 0; tau < H; ++tau) {
      for (int k = 0; k < K; ++k) {
        const PwlScalar curve =
            plan_loss_curve(sys, x, plan.controls, forecasts, volume_cap, t, tau, k);
        // All unit costs are nonnegative, so the curve cannot fall past its
        // last breakpoint and the minimum lives on [0, last breakpoint].
        double hi = plan.controls(tau, k);
        if (!curve.knots().empty()) hi = std::max(hi, curve.knots().back());
        const PwlScalar::Minimum m = curve.minimize(hi);
        assert(m.value <= curve(plan.controls(tau, k)) + 1e-9);
        plan.controls(tau, k) = m.arg;
        objective = m.value;
      }
    }
    if (sweep_start - objective < 1e-9) {
      ++plan.sweeps;
      break;
    }
  }
  plan.objective = plan_loss(sys, x, plan.controls, forecasts, volume_cap, t);
  return plan;
}

Eigen::VectorXd mpc_order(const SystemSpec& sys, const InventoryState& x,
                          const Eigen::MatrixXd& forecasts, double volume_cap, int t) {
  return mpc_plan(sys, x, forecasts, volume_cap, t).controls.row(0);
}

PolicyFn mpc_policy(const SystemSpec& sys, const Eigen::MatrixXd& forecasts,
                    int horizon, double volume_cap) {
  if (horizon < 1) throw std::domain_error("mpc_policy: horizon must be >= 1");
  return [&sys, forecasts, horizon, volume_cap](int t, const InventoryState& x) {
    const int T = static_cast<int>(forecasts.rows());
    const int H = std::min(horizon, T - (t - 1));
    return mpc_order(sys, x, forecasts.middleRows(t - 1, H), volume_cap, t);
  };
}

}  // namespace gapsi
