#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

// Demand ingestion and synthesis: CSV loading in two layouts, seeded
// generators, the calendar feature map, lag-7 forecasts, and the demand
// variability statistic. Sampling goes through our own inversion and
// Box-Muller transforms of raw mt19937_64 draws; the standard library's
// distributions are implementation-defined, which would break bit-identical
// reports across toolchains.

namespace gapsi {

struct DemandSeries {
  Eigen::MatrixXd values;  // T x K, nonnegative; row t-1 is period t
  int first_period = 1;    // calendar index of row 0, feeds the day-of-week
};

struct ForecastSeries {
  Eigen::MatrixXd values;  // T x K, nonnegative
  double sigma = 0.0;      // noise level the values were drawn with
  std::uint64_t seed = 0;
};

struct CsvParseError : std::runtime_error {
  int line;  // 1-based; 0 when the file as a whole is unusable

  CsvParseError(const std::string& path, int line_no, const std::string& reason)
      : std::runtime_error(path + ":" + std::to_string(line_no) + ": " + reason),
        line(line_no) {}
};

enum class CsvLayout {
  Wide,  // one row per product: label, day 1, day 2, ...
  Long,  // header `period,product,quantity`, one cell per row
};

struct DemandLoad {
  DemandSeries series;
  std::vector<std::string> products;  // wide: row order; long: first appearance
  int missing_cells = 0;              // cells filled with zero
};

DemandLoad load_demand_csv(const std::string& path, CsvLayout layout);

// Writes every cell with 17 significant digits, so load returns the exact
// same matrix.
void save_demand_csv(const DemandSeries& series,
                     const std::vector<std::string>& products,
                     const std::string& path, CsvLayout layout);

// Seeded draws with pinned bit streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1), 53-bit resolution
  double gaussian();
  int poisson(double lambda);  // lambda >= 0

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// i.i.d. integer demand, drawn period-major (all products of period 1 first).
DemandSeries poisson_demand(int T, int K, double lambda, std::uint64_t seed);

// Feature vector (upper bound, upper bound on the day-of-week slot, last
// week's demands): nonnegative, dimension 15. `lags` is d_{t-7}..d_{t-1}
// with zeros before the horizon starts.
Eigen::VectorXd calendar_features(int t, const Eigen::VectorXd& lags,
                                  double upper_bound);

// The seven demands preceding period t in column k, zero-filled warm-up.
Eigen::VectorXd calendar_lags(const Eigen::MatrixXd& demands, int t, int k);

// dhat_t = [d_{t-7} + sigma * noise]^+, one draw per cell, period-major.
ForecastSeries weekly_forecast(const Eigen::MatrixXd& demands, double sigma,
                               std::uint64_t seed);

// sqrt((1/T) sum_t (d_t / mean - 1)^2): standard deviation in units of the
// mean. Undefined for an all-zero series.
double normalized_std(const Eigen::VectorXd& demand);

}  // namespace gapsi
