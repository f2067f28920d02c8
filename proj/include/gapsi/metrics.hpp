#pragma once

#include "gapsi/inventory.hpp"

#include <Eigen/Dense>

// Episode-level quality measures: demand lost, stock expired, and cumulative
// loss relative to the hindsight-optimal stationary policy.

namespace gapsi {

double trace_loss(const EpisodeTrace& trace);

// 100 * (unmet demand) / (total demand); 0 when no demand ever arrives.
double metric_lost_sales_pct(const EpisodeTrace& trace,
                             const Eigen::MatrixXd& demands);

struct OutdatingPct {
  double percent = 0.0;
  bool defined = true;  // false when nothing was ever ordered (0/0)
};

// 100 * (units expired unsold) / (units ordered).
OutdatingPct metric_outdating_pct(const EpisodeTrace& trace);

// alg loss / reference loss. Both zero compare as 1; a zero reference with a
// nonzero algorithm is undefined and throws.
double metric_ratio_of_losses(const EpisodeTrace& alg, const EpisodeTrace& reference);
double metric_ratio_of_losses(double alg_loss, double reference_loss);

}  // namespace gapsi
