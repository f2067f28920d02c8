#pragma once

#include "gapsi/inventory.hpp"
#include "gapsi/system.hpp"

#include <Eigen/Dense>

// Comparator policies: hindsight-optimal stationary and cyclic base-stock
// levels, order-up-to-forecast, and a receding-horizon planner. The level
// searches are offline oracles that see the whole demand sequence; the other
// two consume forecasts online.

namespace gapsi {

struct StationarySearch {
  Eigen::VectorXd levels;  // S*_k, one base-stock level per product
  double loss = 0.0;       // its cumulative loss over the demand sequence
};

// Best constant base-stock levels in hindsight. Candidates per product: every
// contiguous demand-window sum of length 1..L+1 plus a uniform grid of
// `grid_points` levels over [0, (L+1) max d]. Exhaustive scan per product,
// cycled to a fixed point when a finite cap couples the products; ties go to
// the smaller level.
StationarySearch best_stationary_level(const SystemSpec& sys,
                                       const Eigen::MatrixXd& demands,
                                       double volume_cap = kInfiniteVolume,
                                       int grid_points = 200);

struct CyclicSearch {
  Eigen::MatrixXd levels;  // levels(p, k) applies when (t - 1) % period == p
  double loss = 0.0;
};

// Best base-stock levels with one level per product and day of the cycle.
// Coordinate descent over the (phase, product) scalars from the stationary
// optimum, same candidate sets, so the result never loses to it.
CyclicSearch best_cyclic_level(const SystemSpec& sys, const Eigen::MatrixXd& demands,
                               int period = 7, double volume_cap = kInfiniteVolume,
                               int grid_points = 200);

// Order-up-to-forecast: u_k = [dhat_k - position_k]^+.
Eigen::VectorXd forecast_level_order(const SystemSpec& sys, const InventoryState& x,
                                     const Eigen::VectorXd& forecast);

// Policy closures for the episode simulator. Time indexes rows of the level
// table (cyclically) and of the forecast matrix (directly, row t-1).
PolicyFn stationary_policy(const SystemSpec& sys, const Eigen::VectorXd& levels);
PolicyFn cyclic_policy(const SystemSpec& sys, const Eigen::MatrixXd& levels);
PolicyFn forecast_policy(const SystemSpec& sys, const Eigen::MatrixXd& forecasts);

struct MpcPlan {
  int horizon = 0;
  Eigen::MatrixXd controls;   // H x K, planned orders; only row 0 is executed
  Eigen::MatrixXd forecasts;  // H x K, the demands the plan assumed
  double objective = 0.0;     // predicted loss of the returned plan
  int sweeps = 0;
};

// Plans H periods ahead against the forecasts (H = forecasts.rows()), rolling
// the true dynamics with forecast demand substituted, and minimizes predicted
// loss over the planned orders. Solver: cyclic coordinate descent, each 1-D
// problem minimized exactly on its piecewise-linear cost curve; initialized
// at order-up-to-forecast; stops when a sweep improves by < 1e-9 (cap 100).
MpcPlan mpc_plan(const SystemSpec& sys, const InventoryState& x,
                 const Eigen::MatrixXd& forecasts, double volume_cap, int t);

// The executed order u_t = first row of the plan.
Eigen::VectorXd mpc_order(const SystemSpec& sys, const InventoryState& x,
                          const Eigen::MatrixXd& forecasts, double volume_cap, int t);

// Receding-horizon policy over a full forecast matrix: at period t the plan
// sees forecast rows t-1 .. min(t-1+horizon, T)-1 and re-solves from scratch.
PolicyFn mpc_policy(const SystemSpec& sys, const Eigen::MatrixXd& forecasts,
                    int horizon = 7, double volume_cap = kInfiniteVolume);

}  // namespace gapsi
