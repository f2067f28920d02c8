#include "gapsi/metrics.hpp"

#include <stdexcept>

namespace gapsi {

double trace_loss(const EpisodeTrace& trace) {
  double total = 0.0;
  for (const StepOutcome& s : trace.steps) total += s.loss;
  return total;
}

double metric_lost_sales_pct(const EpisodeTrace& trace,
                             const Eigen::MatrixXd& demands) {
  if (static_cast<int>(trace.steps.size()) != demands.rows())
    throw std::invalid_argument("metric_lost_sales_pct: trace and demands disagree");
  double served = 0.0;
  for (const StepOutcome& s : trace.steps) served += s.sales.sum();
  const double wanted = demands.sum();
  if (wanted == 0.0) return 0.0;
  return 100.0 * (wanted - served) / wanted;
}

OutdatingPct metric_outdating_pct(const EpisodeTrace& trace) {
  double expired = 0.0;
  for (const StepOutcome& s : trace.steps) expired += s.outdated.sum();
  const double ordered = trace.orders.sum();
  if (ordered == 0.0) return {0.0, false};
  return {100.0 * expired / ordered, true};
}

double metric_ratio_of_losses(double alg_loss, double reference_loss) {
  if (reference_loss == 0.0) {
    if (alg_loss == 0.0) return 1.0;
    throw std::domain_error("metric_ratio_of_losses: reference loss is zero");
  }
  return alg_loss / reference_loss;
}

double metric_ratio_of_losses(const EpisodeTrace& alg, const EpisodeTrace& reference) {
  return metric_ratio_of_losses(trace_loss(alg), trace_loss(reference));
}

}  // namespace gapsi
