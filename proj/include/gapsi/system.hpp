#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Multi-product perishable inventory model: products hold FIFO age slots plus
// an order pipeline, and a shared warehouse may force part of each arriving
// batch to be discarded.
//
// Index conventions used throughout the library:
//   - products k are 0-based,
//   - age/pipeline slots i are 1-based (slot 1 = oldest on-hand stock),
//   - time t is 1-based.
// A product with lifetime m and lead time L carries n = m + L - 1 state
// slots: slots 1..m-1 are on-hand stock by remaining usable periods, slots
// m..n are orders in transit (slot m receives this period's delivery). The
// state-control couple z appends the new order u as slot n+1, so the
// received slot m coincides with u exactly when L = 0.

namespace gapsi {

constexpr double kInfiniteVolume = std::numeric_limits<double>::infinity();

// Scalar time series with a constant-broadcast convenience: a constant
// sequence answers every t, a finite one only t in [1, size].
class Sequence {
 public:
  Sequence() = default;

  static Sequence constant(double value) {
    Sequence s;
    s.constant_ = value;
    return s;
  }

  static Sequence of(std::vector<double> values) {
    Sequence s;
    s.values_ = std::move(values);
    s.is_constant_ = false;
    return s;
  }

  double operator()(int t) const {
    if (is_constant_) return constant_;
    if (t < 1 || t > static_cast<int>(values_.size()))
      throw std::out_of_range("Sequence: period " + std::to_string(t) +
                              " outside [1, " + std::to_string(values_.size()) + "]");
    return values_[static_cast<std::size_t>(t - 1)];
  }

  bool is_constant() const { return is_constant_; }

  double min_value() const {
    if (is_constant_) return constant_;
    double lo = std::numeric_limits<double>::infinity();
    for (double v : values_) lo = std::min(lo, v);
    return lo;
  }

 private:
  std::vector<double> values_;
  double constant_ = 0.0;
  bool is_constant_ = true;
};

// Per-unit cost rates of one product. Each component may vary over time.
struct UnitCosts {
  Sequence purchase = Sequence::constant(0.0);
  Sequence holding = Sequence::constant(0.0);
  Sequence penalty = Sequence::constant(0.0);   // unmet demand
  Sequence outdating = Sequence::constant(0.0); // stock expiring unsold
  Sequence overflow = Sequence::constant(0.0);  // units discarded at reception
};

struct ProductSpec {
  int lifetime = 1;   // m >= 1, usable periods once on hand
  int lead_time = 0;  // L >= 0, periods between ordering and reception
  Sequence unit_volume = Sequence::constant(1.0);
  UnitCosts costs;

  int slot_count() const { return lifetime + lead_time - 1; }  // n
};

// Product list plus the flat-vector layout shared by states, Jacobian rows
// and columns. Flat orderings:
//   states x: product 0 slots 1..n_0, product 1 slots 1..n_1, ...
//   couples z: all state coordinates first, then the K controls.
//   sales s:  product 0 slots 1..m_0, product 1 slots 1..m_1, ...
class SystemSpec {
 public:
  explicit SystemSpec(std::vector<ProductSpec> products)
      : products_(std::move(products)) {
    if (products_.empty()) throw std::invalid_argument("SystemSpec: no products");
    state_offsets_.reserve(products_.size());
    sales_offsets_.reserve(products_.size());
    for (const ProductSpec& p : products_) {
      if (p.lifetime < 1)
        throw std::invalid_argument("SystemSpec: lifetime must be >= 1");
      if (p.lead_time < 0)
        throw std::invalid_argument("SystemSpec: lead time must be >= 0");
      if (p.lifetime + p.lead_time < 2)
        throw std::invalid_argument("SystemSpec: lifetime + lead time must be >= 2");
      state_offsets_.push_back(state_dim_);
      sales_offsets_.push_back(sales_dim_);
      state_dim_ += p.slot_count();
      sales_dim_ += p.lifetime;
    }
  }

  int num_products() const { return static_cast<int>(products_.size()); }
  const ProductSpec& product(int k) const { return products_[static_cast<std::size_t>(k)]; }

  int state_dim() const { return state_dim_; }                  // n = sum n_k
  int control_dim() const { return num_products(); }            // K
  int z_dim() const { return state_dim_ + num_products(); }     // n + K
  int sales_dim() const { return sales_dim_; }                  // sum m_k

  int state_offset(int k) const { return state_offsets_[static_cast<std::size_t>(k)]; }
  int sales_offset(int k) const { return sales_offsets_[static_cast<std::size_t>(k)]; }

  // Flat z-column of state slot i (1-based) of product k.
  int z_col_state(int k, int i) const { return state_offset(k) + i - 1; }
  // Flat z-column of the control of product k.
  int z_col_control(int k) const { return state_dim_ + k; }
  // Flat z-column of the received slot m_k (the control itself when L = 0).
  int z_col_received(int k) const {
    const ProductSpec& p = product(k);
    return p.lead_time == 0 ? z_col_control(k) : z_col_state(k, p.lifetime);
  }

 private:
  std::vector<ProductSpec> products_;
  std::vector<int> state_offsets_;
  std::vector<int> sales_offsets_;
  int state_dim_ = 0;
  int sales_dim_ = 0;
};

// Flattened inventory state (layout per SystemSpec). All entries stay >= 0
// under the model dynamics.
struct InventoryState {
  Eigen::VectorXd x;

  static InventoryState zero(const SystemSpec& sys) {
    return InventoryState{Eigen::VectorXd::Zero(sys.state_dim())};
  }
};

// State-control couple: the state right before reception together with the
// order placed this period.
struct StateControl {
  Eigen::VectorXd x;  // length n
  Eigen::VectorXd u;  // length K

  // Value of coordinate z_{k,i}, i in [n_k + 1] (1-based).
  double z(const SystemSpec& sys, int k, int i) const {
    const int n = sys.product(k).slot_count();
    return i <= n ? x[sys.state_offset(k) + i - 1] : u[k];
  }
};

struct LossBreakdown {
  double penalty = 0.0;
  double holding = 0.0;
  double purchase = 0.0;
  double outdating = 0.0;
  double overflow = 0.0;

  double total() const { return penalty + holding + purchase + outdating + overflow; }
};

// Everything observable about one simulated period.
struct StepOutcome {
  InventoryState next_state;
  Eigen::VectorXd sales;            // flat sales layout, slot-level quantities
  Eigen::VectorXd outdated;         // per product, units expiring unsold
  Eigen::VectorXd discarded;        // per product, units removed at reception
  double loss = 0.0;
  LossBreakdown breakdown;
};

inline void check_state_dim(const SystemSpec& sys, const Eigen::VectorXd& x,
                            const char* where) {
  if (x.size() != sys.state_dim())
    throw std::invalid_argument(std::string(where) + ": state has " +
                                std::to_string(x.size()) + " entries, expected " +
                                std::to_string(sys.state_dim()));
}

inline void check_couple_dims(const SystemSpec& sys, const StateControl& z,
                              const char* where) {
  check_state_dim(sys, z.x, where);
  if (z.u.size() != sys.control_dim())
    throw std::invalid_argument(std::string(where) + ": control has " +
                                std::to_string(z.u.size()) + " entries, expected " +
                                std::to_string(sys.control_dim()));
}

inline void check_demand_dim(const SystemSpec& sys, const Eigen::VectorXd& d,
                             const char* where) {
  if (d.size() != sys.control_dim())
    throw std::invalid_argument(std::string(where) + ": demand has " +
                                std::to_string(d.size()) + " entries, expected " +
                                std::to_string(sys.control_dim()));
}

}  // namespace gapsi
