#pragma once

#include "gapsi/kernels.hpp"
#include "gapsi/system.hpp"

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace gapsi {

struct DiscardOutcome {
  StateControl ztilde;              // z with received slots reduced
  Eigen::VectorXd removed_volume;   // r_k, volume discarded per product
};

// Warehouse-capacity discard in threshold form: arriving batches are reduced,
// products in ascending index order, until the on-hand volume fits under the
// cap. An infinite cap returns z unchanged with r = 0 exactly.
DiscardOutcome apply_discard(const SystemSpec& sys, const StateControl& z,
                             double volume_cap, int t);

// Slot-level sales out of post-discard stock: demand consumes oldest stock
// first. Flat sales layout (sum m_k entries, see SystemSpec).
Eigen::VectorXd compute_sales(const SystemSpec& sys, const StateControl& ztilde,
                              const Eigen::VectorXd& demand);

// State reached after discarding, serving demand and aging the pipeline.
InventoryState transition(const SystemSpec& sys, const StateControl& z,
                          const Eigen::VectorXd& demand, double volume_cap, int t);

struct LossResult {
  double total = 0.0;
  LossBreakdown breakdown;
};

LossResult loss(const SystemSpec& sys, const StateControl& z,
                const Eigen::VectorXd& demand, double volume_cap, int t);

// One period end to end, computing every forward quantity in a single pass.
StepOutcome step(const SystemSpec& sys, const StateControl& z,
                 const Eigen::VectorXd& demand, double volume_cap, int t);

// Orders for period t given the pre-reception state. Negative entries are
// clamped to zero by the simulator (counted per episode).
using PolicyFn = std::function<Eigen::VectorXd(int t, const InventoryState&)>;

struct EpisodeTrace {
  std::vector<StepOutcome> steps;
  Eigen::MatrixXd orders;  // T x K, the executed (already clamped) orders
  int clamped_orders = 0;  // periods in which some order came back negative
};

using StepCallback = std::function<void(int t, const StateControl&, const StepOutcome&)>;

// Runs `demands.rows()` periods from x1 (zero state when omitted). The
// callback overload streams outcomes without retaining them.
int simulate_episode(const SystemSpec& sys, const PolicyFn& policy,
                     const Eigen::MatrixXd& demands, const Sequence& volume_cap,
                     const StepCallback& on_step,
                     const InventoryState* x1 = nullptr);

EpisodeTrace simulate_episode(const SystemSpec& sys, const PolicyFn& policy,
                              const Eigen::MatrixXd& demands, const Sequence& volume_cap,
                              const InventoryState* x1 = nullptr);

namespace detail {

// Double-precision forward intermediates of one period, shared verbatim with
// the derivative code so indicator comparisons see the exact same values.
struct ForwardPass {
  std::vector<double> volumes;                 // v_k at t
  DiscardTerms<double> discard;
  std::vector<std::vector<double>> prefix;     // per product, P_1..P_m over ztilde

  double onhand_total(int k) const { return prefix[static_cast<std::size_t>(k)].back(); }
  double oldest(int k) const {
    return prefix[static_cast<std::size_t>(k)].front();  // ztilde_{k,1}; equals
  }                                                      // the received slot when m = 1
};

ForwardPass forward_pass(const SystemSpec& sys, const StateControl& z,
                         double volume_cap, int t);

inline auto couple_accessor(const SystemSpec& sys, const StateControl& z) {
  return [&sys, &z](int k, int i) { return z.z(sys, k, i); };
}

}  // namespace detail
}  // namespace gapsi
