#pragma once

#include "gapsi/demand.hpp"
#include "gapsi/system.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

// Config-driven experiment runs: a declarative JSON config selects the
// products, the demand source, and the algorithm; run() simulates the
// episode, streams an optional CSV trace, and returns a report whose
// deterministic body depends only on config and seeds.

namespace gapsi {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DemandSource { Csv, Poisson, SyntheticCyclic };
enum class Algo { Gapsi, StationaryOracle, CyclicOracle, ForecastLevel, Mpc, Zero };
enum class FeatureMode { Constant, Calendar };

struct ExperimentConfig {
  explicit ExperimentConfig(SystemSpec sys) : system(std::move(sys)) {}

  SystemSpec system;
  std::string hash;  // fnv1a-64 of the effective config, hex

  DemandSource source = DemandSource::Poisson;
  std::string csv_path;
  CsvLayout csv_layout = CsvLayout::Wide;
  int horizon_T = 0;                // poisson and synthetic sources
  double lambda = 0.0;              // poisson mean
  Eigen::VectorXd pattern;          // synthetic-cyclic day levels
  double demand_sigma = 0.0;        // synthetic-cyclic noise
  std::uint64_t demand_seed = 0;

  Algo algorithm = Algo::Zero;
  bool censored = false;

  // gapsi
  double eta = 0.1;
  int buffer = 10;
  FeatureMode features = FeatureMode::Constant;
  Eigen::VectorXd box_lower, box_upper;  // resolved to the feature dimension
  std::optional<Eigen::VectorXd> theta0;
  std::optional<double> upper_bound;  // calendar features; default max demand

  // forecast-level and mpc
  double forecast_sigma = 0.0;
  std::uint64_t forecast_seed = 0;
  int mpc_horizon = 7;

  // oracles
  int oracle_grid = 200;
  int cyclic_period = 7;

  Sequence volume_cap = Sequence::constant(kInfiniteVolume);
  bool compare_to_oracle = false;
  bool trace_theta = false;
  std::string report_path;  // defaults: report.json / trace.csv under --out
  std::string trace_path;
};

// Parses and validates; unknown keys and type mismatches name the offending
// field path. `seed_override` replaces the demand seed before hashing, so the
// report hash covers what actually ran.
ExperimentConfig parse_config(const nlohmann::json& j,
                              std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_config(const std::string& path,
                             std::optional<std::uint64_t> seed_override = {});

std::uint64_t fnv1a64(std::string_view bytes);

// The demand matrix the config describes: loaded, or drawn from its seed.
Eigen::MatrixXd materialize_demand(const ExperimentConfig& config);

struct RunOptions {
  std::string out_dir = ".";
  std::optional<bool> write_trace;  // overrides config when set
  int jobs = 1;
};

struct RunReport {
  std::string config_hash;
  std::string algorithm;
  int periods = 0;
  int products = 0;
  double cumulative_loss = 0.0;
  double average_loss = 0.0;
  LossBreakdown breakdown;
  double lost_sales_pct = 0.0;
  double outdating_pct = 0.0;
  bool outdating_defined = true;
  int clamped_orders = 0;
  bool has_oracle = false;  // stationary reference on the same demand
  double oracle_loss = 0.0;
  double ratio_of_losses = 0.0;
  Eigen::VectorXd oracle_levels;
  std::string trace_path;  // empty when no trace was written
  double wall_clock_seconds = 0.0;

  // Deterministic body plus a separate timing block.
  nlohmann::json to_json() const;
};

RunReport run(const ExperimentConfig& config, const RunOptions& opt = {});

// The canonical Poisson study: one product, lifetime 3, no lead time, unit
// holding cost, mean-5 integer demand. Training learns a constant level for
// 10000 periods; its time average is then evaluated as a stationary policy
// on fresh test sequences and compared against the best integer level.
struct PoissonRowSpec {
  double purchase = 0.0;
  double penalty = 0.0;
  double outdating = 0.0;
  double target_loss = 0.0;  // expected per-period test loss of the average level
  double target_opt = 0.0;   // expected per-period test loss of the best level
};

const std::array<PoissonRowSpec, 3>& poisson_table_rows();

struct PoissonRowResult {
  PoissonRowSpec spec;
  double trained_level = 0.0;  // average of the played levels over training
  double test_loss = 0.0;      // per-period, averaged over the test runs
  double opt_level = 0.0;
  double opt_loss = 0.0;
  double seconds = 0.0;
  bool within_band = false;  // |test-target| <= 0.15 and within 3% of target_opt
};

PoissonRowResult poisson_table_row(const PoissonRowSpec& spec, int train_T = 10000,
                                   int test_runs = 100, int test_T = 10000,
                                   std::uint64_t seed = 1, int jobs = 1);

}  // namespace gapsi
