#pragma once

#include "gapsi/system.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

// Scalar-generic kernels for one simulated period. The same formulas run on
// plain doubles (simulation, derivative bookkeeping) and on piecewise-linear
// scalars (exact one-dimensional line searches inside the receding-horizon
// planner), so each quantity is written once.
//
// A scalar type S must support S +- S, S +- double, double * S, S / double,
// construction from double, and an ADL-visible positive_part(S).

namespace gapsi {

inline double positive_part(double a) { return a > 0.0 ? a : 0.0; }

namespace detail {

// Intermediates of the warehouse-capacity discard in threshold form. With an
// infinite cap the discard is the identity map and `active` stays false; the
// derivative code relies on that short-circuit being exact.
template <class S>
struct DiscardTerms {
  bool active = false;
  S total_volume{0.0};          // sum_k sum_{i<=m_k} v_k z_{k,i}
  std::vector<S> beta;          // [total_volume - cap]^+ - sum_{k'<k} v_k' z_{k',m_k'}
  std::vector<S> alpha;         // z_{k,m_k} - [beta_k]^+ / v_k
  std::vector<S> received_after;  // ztilde_{k,m_k} = [alpha_k]^+, or z_{k,m_k} verbatim
};

// z accessor contract: z(k, i) returns coordinate i (1-based, i <= n_k + 1)
// of product k's state-control couple.
template <class S, class ZFn>
DiscardTerms<S> discard_terms(const SystemSpec& sys, ZFn&& z,
                              const std::vector<double>& volumes, double cap) {
  const int K = sys.num_products();
  DiscardTerms<S> terms;
  terms.received_after.reserve(static_cast<std::size_t>(K));

  if (std::isinf(cap)) {
    for (int k = 0; k < K; ++k)
      terms.received_after.push_back(z(k, sys.product(k).lifetime));
    return terms;
  }

  terms.active = true;
  S total{0.0};
  for (int k = 0; k < K; ++k) {
    const double v = volumes[static_cast<std::size_t>(k)];
    for (int i = 1; i <= sys.product(k).lifetime; ++i) total = total + v * z(k, i);
  }
  terms.total_volume = total;
  const S excess = positive_part(total - cap);

  terms.beta.reserve(static_cast<std::size_t>(K));
  terms.alpha.reserve(static_cast<std::size_t>(K));
  S earlier_arrivals{0.0};  // sum_{k'<k} v_k' z_{k',m_k'}
  for (int k = 0; k < K; ++k) {
    const double v = volumes[static_cast<std::size_t>(k)];
    if (v <= 0.0)
      throw std::domain_error("discard: unit volume must be positive under a finite cap");
    const S received = z(k, sys.product(k).lifetime);
    S beta = excess - earlier_arrivals;
    S alpha = received - positive_part(beta) / v;
    terms.received_after.push_back(positive_part(alpha));
    terms.beta.push_back(std::move(beta));
    terms.alpha.push_back(std::move(alpha));
    earlier_arrivals = earlier_arrivals + v * received;
  }
  return terms;
}

// Prefix sums P_i = sum_{j<=i} ztilde_{k,j}, i in [m_k]: the stock available
// to serve demand, by age. Accumulated oldest-first; the derivative code
// reuses these exact values.
template <class S, class ZFn>
std::vector<S> onhand_prefix(const SystemSpec& sys, int k, ZFn&& z,
                             const S& received_after_k) {
  const int m = sys.product(k).lifetime;
  std::vector<S> prefix;
  prefix.reserve(static_cast<std::size_t>(m));
  for (int i = 1; i <= m; ++i) {
    const S slot = (i == m) ? received_after_k : z(k, i);
    prefix.push_back(i == 1 ? slot : prefix.back() + slot);
  }
  return prefix;
}

// FIFO state update for one product: slots age by one, demand consumes
// oldest stock first, the order enters the tail of the pipeline.
template <class S, class ZFn>
std::vector<S> next_state_slots(const SystemSpec& sys, int k, ZFn&& z,
                                const S& received_after_k,
                                const std::vector<S>& prefix, double demand) {
  const ProductSpec& p = sys.product(k);
  const int m = p.lifetime;
  const int n = p.slot_count();
  std::vector<S> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= m - 1; ++i) {
    const S& successor = (i + 1 == m) ? received_after_k : z(k, i + 1);
    const S unmet = positive_part(demand - prefix[static_cast<std::size_t>(i - 1)]);
    out.push_back(positive_part(successor - unmet));
  }
  for (int i = m; i <= n; ++i) out.push_back(z(k, i + 1));
  return out;
}

template <class S>
struct LossTerms {
  S penalty{0.0};
  S holding{0.0};
  S purchase{0.0};
  S outdating{0.0};
  S overflow{0.0};

  S total() const { return penalty + holding + purchase + outdating + overflow; }
};

template <class S, class ZFn>
LossTerms<S> loss_terms(const SystemSpec& sys, int k, ZFn&& z,
                        const DiscardTerms<S>& discard,
                        const std::vector<S>& prefix, double demand, int t) {
  const ProductSpec& p = sys.product(k);
  const int m = p.lifetime;
  const S& onhand_total = prefix[static_cast<std::size_t>(m - 1)];
  const S& received_after = discard.received_after[static_cast<std::size_t>(k)];
  const S& oldest = (m == 1) ? received_after : prefix[0];

  LossTerms<S> terms;
  terms.penalty = p.costs.penalty(t) * positive_part(demand - onhand_total);
  terms.holding = p.costs.holding(t) * positive_part(onhand_total - demand);
  terms.purchase = p.costs.purchase(t) * z(k, p.slot_count() + 1);
  terms.outdating = p.costs.outdating(t) * positive_part(oldest - demand);
  if (discard.active)
    terms.overflow = p.costs.overflow(t) * (z(k, m) - received_after);
  return terms;
}

}  // namespace detail
}  // namespace gapsi
