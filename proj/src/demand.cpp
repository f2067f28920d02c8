#include "gapsi/demand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

namespace gapsi {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) fields.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

// Empty cells are "missing": legal, zero-filled, counted. Anything else must
// parse in full as a nonnegative number.
double parse_cell(const std::string& path, int line, const std::string& field,
                  int* missing) {
  if (field.empty()) {
    ++*missing;
    return 0.0;
  }
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || !std::isfinite(v))
    throw CsvParseError(path, line, "not a number: '" + field + "'");
  if (v < 0.0)
    throw CsvParseError(path, line, "negative quantity: '" + field + "'");
  return v;
}

std::vector<std::pair<int, std::string>> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvParseError(path, 0, "cannot open file");
  std::vector<std::pair<int, std::string>> lines;
  std::string raw;
  int no = 0;
  while (std::getline(in, raw)) {
    ++no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;  // blank lines carry no cells
    lines.emplace_back(no, raw);
  }
  return lines;
}

DemandLoad load_wide(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw CsvParseError(path, 0, "no data rows");

  DemandLoad out;
  const int K = static_cast<int>(lines.size());
  int T = -1;
  std::vector<std::vector<double>> rows;
  for (const auto& [no, text] : lines) {
    const auto fields = split_fields(text);
    if (fields.size() < 2)
      throw CsvParseError(path, no, "expected a label and at least one day");
    if (T < 0)
      T = static_cast<int>(fields.size()) - 1;
    else if (static_cast<int>(fields.size()) - 1 != T)
      throw CsvParseError(path, no,
                          "row has " + std::to_string(fields.size() - 1) +
                              " days, expected " + std::to_string(T));
    out.products.push_back(fields[0]);
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(T));
    for (int j = 1; j <= T; ++j)
      row.push_back(parse_cell(path, no, fields[static_cast<std::size_t>(j)],
                               &out.missing_cells));
    rows.push_back(std::move(row));
  }
  out.series.values.resize(T, K);
  for (int k = 0; k < K; ++k)
    for (int t = 0; t < T; ++t)
      out.series.values(t, k) = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
  return out;
}

DemandLoad load_long(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw CsvParseError(path, 0, "no data rows");
  {
    const auto header = split_fields(lines.front().second);
    if (header != std::vector<std::string>{"period", "product", "quantity"})
      throw CsvParseError(path, lines.front().first,
                          "expected header 'period,product,quantity'");
  }
  if (lines.size() == 1) throw CsvParseError(path, 0, "no data rows");

  DemandLoad out;
  std::map<std::string, int> product_index;
  std::map<std::pair<int, int>, double> cells;  // (period, product) -> quantity
  int max_period = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [no, text] = lines[r];
    const auto fields = split_fields(text);
    if (fields.size() != 3)
      throw CsvParseError(path, no, "expected 3 fields, got " +
                                        std::to_string(fields.size()));
    char* end = nullptr;
    const long period = std::strtol(fields[0].c_str(), &end, 10);
    if (end != fields[0].c_str() + fields[0].size() || period < 1)
      throw CsvParseError(path, no, "bad period: '" + fields[0] + "'");
    if (fields[1].empty())
      throw CsvParseError(path, no, "empty product label");
    const double q = parse_cell(path, no, fields[2], &out.missing_cells);

    auto [it, inserted] =
        product_index.emplace(fields[1], static_cast<int>(out.products.size()));
    if (inserted) out.products.push_back(fields[1]);
    const auto key = std::make_pair(static_cast<int>(period), it->second);
    if (!cells.emplace(key, q).second)
      throw CsvParseError(path, no, "duplicate cell for period " + fields[0] +
                                        ", product '" + fields[1] + "'");
    max_period = std::max(max_period, static_cast<int>(period));
  }

  const int K = static_cast<int>(out.products.size());
  out.series.values = Eigen::MatrixXd::Zero(max_period, K);
  for (const auto& [key, q] : cells) out.series.values(key.first - 1, key.second) = q;
  out.missing_cells += max_period * K - static_cast<int>(cells.size());
  return out;
}

std::string format_cell(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DemandLoad load_demand_csv(const std::string& path, CsvLayout layout) {
  return layout == CsvLayout::Wide ? load_wide(path) : load_long(path);
}

void save_demand_csv(const DemandSeries& series,
                     const std::vector<std::string>& products,
                     const std::string& path, CsvLayout layout) {
  const int T = static_cast<int>(series.values.rows());
  const int K = static_cast<int>(series.values.cols());
  if (static_cast<int>(products.size()) != K)
    throw std::invalid_argument("save_demand_csv: one label per product required");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_demand_csv: cannot write " + path);
  if (layout == CsvLayout::Wide) {
    for (int k = 0; k < K; ++k) {
      out << products[static_cast<std::size_t>(k)];
      for (int t = 0; t < T; ++t) out << ',' << format_cell(series.values(t, k));
      out << '\n';
    }
  } else {
    out << "period,product,quantity\n";
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < K; ++k)
        out << (t + 1) << ',' << products[static_cast<std::size_t>(k)] << ','
            << format_cell(series.values(t, k)) << '\n';
  }
  if (!out.flush()) throw std::runtime_error("save_demand_csv: write failed: " + path);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

int Rng::poisson(double lambda) {
  if (lambda < 0.0) throw std::domain_error("poisson: negative mean");
  if (lambda == 0.0) return 0;
  // Inversion by sequential search; one uniform per draw. Fine for the
  // moderate means the experiments use, degenerate far past the mean only
  // when the cdf exhausts double precision.
  const double u = uniform();
  double p = std::exp(-lambda);
  double cdf = p;
  int k = 0;
  const int cap = static_cast<int>(lambda + 10.0 * std::sqrt(lambda) + 100.0);
  while (u >= cdf && k < cap) {
    ++k;
    p *= lambda / k;
    cdf += p;
  }
  return k;
}

DemandSeries poisson_demand(int T, int K, double lambda, std::uint64_t seed) {
  if (T < 1 || K < 1) throw std::invalid_argument("poisson_demand: T, K >= 1");
  Rng rng(seed);
  DemandSeries out;
  out.values.resize(T, K);
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k)
      out.values(t, k) = static_cast<double>(rng.poisson(lambda));
  return out;
}

Eigen::VectorXd calendar_features(int t, const Eigen::VectorXd& lags,
                                  double upper_bound) {
  if (lags.size() != 7)
    throw std::invalid_argument("calendar_features: need 7 lagged demands");
  if (!(upper_bound > 0.0))
    throw std::domain_error("calendar_features: demand upper bound must be positive");
  if ((lags.array() < 0.0).any())
    throw std::domain_error("calendar_features: negative lag");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(15);
  w[0] = upper_bound;
  w[1 + t % 7] = upper_bound;
  w.tail(7) = lags;
  return w;
}

Eigen::VectorXd calendar_lags(const Eigen::MatrixXd& demands, int t, int k) {
  Eigen::VectorXd lags = Eigen::VectorXd::Zero(7);
  for (int j = 0; j < 7; ++j) {
    const int s = t - 7 + j;  // period of lag j
    if (s >= 1) lags[j] = demands(s - 1, k);
  }
  return lags;
}

ForecastSeries weekly_forecast(const Eigen::MatrixXd& demands, double sigma,
                               std::uint64_t seed) {
  if (sigma < 0.0) throw std::domain_error("weekly_forecast: negative noise level");
  Rng rng(seed);
  ForecastSeries out;
  out.sigma = sigma;
  out.seed = seed;
  out.values.resize(demands.rows(), demands.cols());
  for (int t = 0; t < demands.rows(); ++t)
    for (int k = 0; k < demands.cols(); ++k) {
      const double lag7 = (t >= 7) ? demands(t - 7, k) : 0.0;
      const double noisy = lag7 + sigma * rng.gaussian();
      out.values(t, k) = noisy > 0.0 ? noisy : 0.0;
    }
  return out;
}

double normalized_std(const Eigen::VectorXd& demand) {
  if (demand.size() == 0) throw std::domain_error("normalized_std: empty series");
  const double mean = demand.mean();
  if (!(mean > 0.0))
    throw std::domain_error("normalized_std: undefined for an all-zero series");
  return std::sqrt((demand.array() / mean - 1.0).square().mean());
}

}  // namespace gapsi
