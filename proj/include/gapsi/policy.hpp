#pragma once

#include "gapsi/kernels.hpp"
#include "gapsi/system.hpp"

#include <Eigen/Dense>

#include <numeric>
#include <stdexcept>
#include <vector>

// Feature-enhanced base-stock policy: product k is ordered up to the level
// w_k . theta_k, counting stock on hand and in the pipeline:
//
//   u_k = [ w_k . theta_k - sum_i x_{k,i} ]^+
//
// Features are nonnegative; parameters theta share the feature layout.

namespace gapsi {

struct FeatureVector {
  Eigen::VectorXd values;  // flat, product-blocked
  std::vector<int> sizes;  // per-product feature counts

  static FeatureVector uniform(int num_products, const Eigen::VectorXd& per_product) {
    FeatureVector w;
    w.sizes.assign(static_cast<std::size_t>(num_products),
                   static_cast<int>(per_product.size()));
    w.values.resize(num_products * per_product.size());
    for (int k = 0; k < num_products; ++k)
      w.values.segment(k * per_product.size(), per_product.size()) = per_product;
    return w;
  }

  int dim() const { return static_cast<int>(values.size()); }
  int size(int k) const { return sizes[static_cast<std::size_t>(k)]; }
  int offset(int k) const {
    return std::accumulate(sizes.begin(), sizes.begin() + k, 0);
  }
  auto segment(int k) const { return values.segment(offset(k), size(k)); }
};

inline void check_policy_dims(const SystemSpec& sys, const FeatureVector& w,
                              const Eigen::VectorXd& theta, const char* where) {
  if (static_cast<int>(w.sizes.size()) != sys.num_products())
    throw std::invalid_argument(std::string(where) + ": feature blocks != products");
  if (theta.size() != w.dim())
    throw std::invalid_argument(std::string(where) + ": theta and features disagree");
}

// Inventory position of product k: everything on hand or in transit.
inline double inventory_position(const SystemSpec& sys, const Eigen::VectorXd& x, int k) {
  return x.segment(sys.state_offset(k), sys.product(k).slot_count()).sum();
}

inline Eigen::VectorXd policy_levels(const SystemSpec& sys, const FeatureVector& w,
                                     const Eigen::VectorXd& theta) {
  check_policy_dims(sys, w, theta, "policy_levels");
  Eigen::VectorXd levels(sys.num_products());
  for (int k = 0; k < sys.num_products(); ++k)
    levels[k] = w.segment(k).dot(theta.segment(w.offset(k), w.size(k)));
  return levels;
}

inline Eigen::VectorXd policy_order(const SystemSpec& sys, const FeatureVector& w,
                                    const Eigen::VectorXd& theta,
                                    const InventoryState& x) {
  check_state_dim(sys, x.x, "policy_order");
  Eigen::VectorXd u = policy_levels(sys, w, theta);
  for (int k = 0; k < sys.num_products(); ++k)
    u[k] = positive_part(u[k] - inventory_position(sys, x.x, k));
  return u;
}

}  // namespace gapsi
