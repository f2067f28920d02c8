#include "gapsi/baselines.hpp"
#include "gapsi/demand.hpp"
#include "gapsi/experiment.hpp"
#include "gapsi/fd.hpp"
#include "gapsi/inventory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

// gapsi command line: config-driven simulation plus the verification and
// reproduction commands. Exit codes: 0 success, 1 bad config or usage,
// 2 runtime failure, 3 a verification check failed.

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerification = 3;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = nullptr;
  std::string out_dir = ".";
  bool trace_value = false;
  CLI::Option* trace_opt = nullptr;
  int jobs = 1;

  std::optional<std::uint64_t> seed() const {
    if (seed_opt && seed_opt->count()) return seed_value;
    return std::nullopt;
  }
  std::optional<bool> trace() const {
    if (trace_opt && trace_opt->count()) return trace_value;
    return std::nullopt;
  }
};

void add_common(CLI::App* sub, CommonArgs& args, bool with_trace = true) {
  sub->add_option("--config", args.config_path, "JSON experiment config")
      ->required();
  args.seed_opt = sub->add_option("--seed", args.seed_value,
                                  "override the demand seed");
  sub->add_option("--out", args.out_dir, "output directory (created if missing)");
  if (with_trace)
    args.trace_opt = sub->add_flag("--trace,!--no-trace", args.trace_value,
                                   "force the period trace on or off");
  sub->add_option("--jobs", args.jobs, "worker threads where supported")
      ->check(CLI::Range(1, 64));
}

gapsi::ExperimentConfig load(const CommonArgs& args) {
  return gapsi::load_config(args.config_path, args.seed());
}

void print_report(const gapsi::RunReport& rep) {
  std::printf("algorithm        %s\n", rep.algorithm.c_str());
  std::printf("episode          %d periods, %d product(s)\n", rep.periods,
              rep.products);
  std::printf("cumulative loss  %.6f\n", rep.cumulative_loss);
  std::printf("average loss     %.6f\n", rep.average_loss);
  std::printf("  penalty %.4f  holding %.4f  purchase %.4f  outdating %.4f  "
              "overflow %.4f\n",
              rep.breakdown.penalty, rep.breakdown.holding, rep.breakdown.purchase,
              rep.breakdown.outdating, rep.breakdown.overflow);
  std::printf("lost sales       %.3f%%\n", rep.lost_sales_pct);
  if (rep.outdating_defined)
    std::printf("outdating        %.3f%%\n", rep.outdating_pct);
  else
    std::printf("outdating        n/a (nothing ordered)\n");
  if (rep.clamped_orders > 0)
    std::printf("clamped orders   %d period(s)\n", rep.clamped_orders);
  if (rep.has_oracle) {
    std::printf("best stationary  %.6f", rep.oracle_loss);
    for (int k = 0; k < rep.oracle_levels.size(); ++k)
      std::printf("%s%.4f%s", k == 0 ? "  (levels " : ", ",
                  rep.oracle_levels[k],
                  k + 1 == rep.oracle_levels.size() ? ")" : "");
    std::printf("\n");
    std::printf("ratio of losses  %.6f\n", rep.ratio_of_losses);
  }
  std::printf("config hash      %s\n", rep.config_hash.c_str());
  if (!rep.trace_path.empty())
    std::printf("trace            %s\n", rep.trace_path.c_str());
  std::printf("wall clock       %.3fs\n", rep.wall_clock_seconds);
}

int cmd_simulate(const CommonArgs& args) {
  const gapsi::ExperimentConfig cfg = load(args);
  std::filesystem::create_directories(args.out_dir);
  gapsi::RunOptions opt;
  opt.out_dir = args.out_dir;
  opt.write_trace = args.trace();
  opt.jobs = args.jobs;
  const gapsi::RunReport rep = gapsi::run(cfg, opt);
  print_report(rep);
  std::printf("report           %s\n",
              (std::filesystem::path(args.out_dir) /
               (cfg.report_path.empty() ? "report.json" : cfg.report_path))
                  .string()
                  .c_str());
  return kExitOk;
}

int cmd_oracle(const CommonArgs& args, int period) {
  const gapsi::ExperimentConfig cfg = load(args);
  if (!cfg.volume_cap.is_constant())
    throw gapsi::ConfigError("volume_cap: hindsight searches need a constant cap");
  const Eigen::MatrixXd demands = gapsi::materialize_demand(cfg);
  const double cap = cfg.volume_cap(1);

  const gapsi::StationarySearch st =
      gapsi::best_stationary_level(cfg.system, demands, cap, cfg.oracle_grid);
  const gapsi::CyclicSearch cyc =
      gapsi::best_cyclic_level(cfg.system, demands, period, cap, cfg.oracle_grid);

  nlohmann::json out;
  out["config_hash"] = cfg.hash;
  out["periods"] = static_cast<int>(demands.rows());
  out["stationary"] = {
      {"levels", std::vector<double>(st.levels.data(), st.levels.data() + st.levels.size())},
      {"loss", st.loss},
      {"average_loss", st.loss / static_cast<double>(demands.rows())}};
  std::vector<std::vector<double>> cyc_levels;
  for (int r = 0; r < cyc.levels.rows(); ++r)
    cyc_levels.emplace_back(cyc.levels.row(r).begin(), cyc.levels.row(r).end());
  out["cyclic"] = {{"period", period},
                   {"levels", cyc_levels},
                   {"loss", cyc.loss},
                   {"average_loss", cyc.loss / static_cast<double>(demands.rows())}};

  std::filesystem::create_directories(args.out_dir);
  const std::string path =
      (std::filesystem::path(args.out_dir) / "oracle.json").string();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << out.dump(2) << "\n";

  std::printf("best stationary  loss %.6f  average %.6f\n", st.loss,
              st.loss / static_cast<double>(demands.rows()));
  std::printf("best %d-cyclic    loss %.6f  average %.6f\n", period, cyc.loss,
              cyc.loss / static_cast<double>(demands.rows()));
  std::printf("written          %s\n", path.c_str());
  return kExitOk;
}

int cmd_bench(const CommonArgs& args, int repeat) {
  const gapsi::ExperimentConfig cfg = load(args);
  const auto tmp =
      std::filesystem::temp_directory_path() /
      ("gapsi_bench_" + std::to_string(::getpid()));
  std::filesystem::create_directories(tmp);
  gapsi::RunOptions opt;
  opt.out_dir = tmp.string();
  opt.write_trace = false;
  opt.jobs = args.jobs;
  double best = std::numeric_limits<double>::infinity();
  int periods = 0;
  for (int i = 0; i < repeat; ++i) {
    const gapsi::RunReport rep = gapsi::run(cfg, opt);
    best = std::min(best, rep.wall_clock_seconds);
    periods = rep.periods;
  }
  std::filesystem::remove_all(tmp);
  std::printf("%d periods in %.4fs (best of %d): %.0f periods/s\n", periods, best,
              repeat, periods / best);
  return kExitOk;
}

// Random model instances over the public API, for the derivative sweep.
struct SweepInstance {
  gapsi::SystemSpec sys;
  gapsi::StateControl z;
  Eigen::VectorXd demand;
  double cap;
};

SweepInstance sweep_instance(gapsi::Rng& rng) {
  const int K = 1 + static_cast<int>(rng.uniform() * 3.0);
  std::vector<gapsi::ProductSpec> products;
  for (int k = 0; k < K; ++k) {
    gapsi::ProductSpec p;
    p.lifetime = 1 + static_cast<int>(rng.uniform() * 4.0);
    const int min_lead = p.lifetime >= 2 ? 0 : 1;
    p.lead_time = min_lead + static_cast<int>(rng.uniform() * (4.0 - min_lead));
    p.unit_volume = gapsi::Sequence::constant(0.5 + 1.5 * rng.uniform());
    auto cost = [&rng] { return gapsi::Sequence::constant(5.0 * rng.uniform()); };
    p.costs.purchase = cost();
    p.costs.holding = cost();
    p.costs.penalty = cost();
    p.costs.outdating = cost();
    p.costs.overflow = cost();
    products.push_back(std::move(p));
  }
  gapsi::SystemSpec sys(std::move(products));
  auto qty = [&rng] {
    const double u = rng.uniform();
    return u < 0.15 ? 0.0 : 5.0 * rng.uniform();
  };
  Eigen::VectorXd x(sys.state_dim()), u(sys.control_dim()), d(sys.control_dim());
  for (int i = 0; i < x.size(); ++i) x[i] = qty();
  for (int k = 0; k < K; ++k) {
    u[k] = qty();
    d[k] = 7.5 * rng.uniform();
  }
  double cap = gapsi::kInfiniteVolume;
  if (rng.uniform() < 0.5) {
    double onhand = 0.0;
    for (int k = 0; k < K; ++k)
      for (int i = 1; i <= sys.product(k).lifetime; ++i) {
        const double zi = i <= sys.product(k).slot_count()
                              ? x[sys.state_offset(k) + i - 1]
                              : u[k];
        onhand += sys.product(k).unit_volume(1) * zi;
      }
    cap = (0.2 + 0.9 * rng.uniform()) * std::max(onhand, 1.0);
  }
  return SweepInstance{std::move(sys), {std::move(x), std::move(u)}, std::move(d), cap};
}

int cmd_check_derivs(int points, std::uint64_t seed) {
  gapsi::Rng rng(seed);
  const double tol = 1e-6;
  int checked = 0, skipped = 0, wrong = 0;
  while (checked < points) {
    const SweepInstance inst = sweep_instance(rng);
    const gapsi::SystemSpec& sys = inst.sys;
    for (gapsi::Side side : {gapsi::Side::Right, gapsi::Side::Left}) {
      const Eigen::RowVectorXd LJ =
          gapsi::loss_jacobian(sys, inst.z, inst.demand, inst.cap, 1, side);
      const Eigen::MatrixXd TJ =
          gapsi::transition_jacobian(sys, inst.z, inst.demand, inst.cap, 1, side);
      for (int c = 0; c < sys.z_dim() && checked < points; ++c) {
        auto nudge = [&](double h) {
          gapsi::StateControl z = inst.z;
          if (c < sys.state_dim())
            z.x[c] += h;
          else
            z.u[c - sys.state_dim()] += h;
          return z;
        };
        const gapsi::FdEstimate lfd = gapsi::one_sided_slope(
            [&](double h) { return gapsi::step(sys, nudge(h), inst.demand, inst.cap, 1).loss; },
            side);
        const gapsi::FdVectorEstimate tfd = gapsi::one_sided_slope_vector(
            [&](double h) {
              return gapsi::step(sys, nudge(h), inst.demand, inst.cap, 1).next_state.x;
            },
            side);
        if (!lfd.converged || !tfd.converged) {
          ++skipped;
          continue;
        }
        ++checked;
        if (std::abs(LJ[c] - lfd.value) > tol * (1.0 + std::abs(lfd.value))) ++wrong;
        for (int r = 0; r < sys.state_dim(); ++r)
          if (std::abs(TJ(r, c) - tfd.value[r]) > tol * (1.0 + std::abs(tfd.value[r])))
            ++wrong;
      }
    }
  }
  std::printf("%d directional checks against divided differences at %.0e: "
              "%d wrong, %d skipped near kinks\n",
              checked, tol, wrong, skipped);
  return wrong == 0 ? kExitOk : kExitVerification;
}

int cmd_reproduce(int train_t, int test_runs, int test_t, int row,
                  std::uint64_t seed, int jobs, bool check) {
  const auto& rows = gapsi::poisson_table_rows();
  bool all_ok = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (row >= 0 && static_cast<std::size_t>(row) != i) continue;
    const gapsi::PoissonRowSpec& spec = rows[i];
    const gapsi::PoissonRowResult r =
        gapsi::poisson_table_row(spec, train_t, test_runs, test_t, seed, jobs);
    all_ok = all_ok && r.within_band;
    std::printf("costs (%g,%g,%g)  learned level %.3f  test loss %.4f "
                "(published %.2f)  best fixed %.4f (published %.2f)  %.1fs%s\n",
                spec.purchase, spec.penalty, spec.outdating, r.trained_level,
                r.test_loss, spec.target_loss, r.opt_loss, spec.target_opt,
                r.seconds, check && !r.within_band ? "  <-- out of band" : "");
  }
  if (!check) return kExitOk;
  if (!all_ok) std::printf("reproduction outside the published band\n");
  return all_ok ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online inventory control: simulation, learning, reproduction"};
  app.require_subcommand(1);

  CommonArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run one configured episode");
  add_common(sim, sim_args);

  CommonArgs oracle_args;
  int oracle_period = 7;
  CLI::App* oracle =
      app.add_subcommand("oracle", "hindsight stationary and cyclic levels");
  add_common(oracle, oracle_args, false);
  oracle->add_option("--period", oracle_period, "cycle length")->check(CLI::Range(1, 366));

  CommonArgs bench_args;
  int bench_repeat = 3;
  CLI::App* bench = app.add_subcommand("bench", "time the configured episode");
  add_common(bench, bench_args, false);
  bench->add_option("--repeat", bench_repeat, "runs to take the best of")
      ->check(CLI::Range(1, 100));

  int cd_points = 1000;
  std::uint64_t cd_seed = 1;
  CLI::App* cd = app.add_subcommand(
      "check-derivs", "sweep the analytic derivatives against divided differences");
  cd->add_option("--points", cd_points, "directional checks to accumulate")
      ->check(CLI::Range(1, 1000000));
  cd->add_option("--seed", cd_seed, "sweep seed");

  CLI::App* repro =
      app.add_subcommand("reproduce", "re-run a published study");
  int rp_train_t = 10000, rp_test_runs = 100, rp_test_t = 10000, rp_row = -1,
      rp_jobs = 1;
  std::uint64_t rp_seed = 1;
  bool rp_check = true;
  CLI::App* ptable = repro->add_subcommand(
      "poisson-table", "learned constant level on mean-5 integer demand");
  ptable->add_option("--train-t", rp_train_t)->check(CLI::Range(1, 10000000));
  ptable->add_option("--test-runs", rp_test_runs)->check(CLI::Range(1, 100000));
  ptable->add_option("--test-t", rp_test_t)->check(CLI::Range(1, 10000000));
  ptable->add_option("--row", rp_row, "single table row, 0-based")
      ->check(CLI::Range(0, 2));
  ptable->add_option("--seed", rp_seed);
  ptable->add_option("--jobs", rp_jobs)->check(CLI::Range(1, 64));
  ptable->add_flag("--check,!--no-check", rp_check,
                   "fail (exit 3) when outside the published band");
  repro->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (oracle->parsed()) return cmd_oracle(oracle_args, oracle_period);
    if (bench->parsed()) return cmd_bench(bench_args, bench_repeat);
    if (cd->parsed()) return cmd_check_derivs(cd_points, cd_seed);
    if (repro->parsed())
      return cmd_reproduce(rp_train_t, rp_test_runs, rp_test_t, rp_row, rp_seed,
                           rp_jobs, rp_check);
  } catch (const gapsi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const gapsi::CsvParseError& e) {
    std::fprintf(stderr, "csv error: %s\n", e.what());
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitConfig;
}
