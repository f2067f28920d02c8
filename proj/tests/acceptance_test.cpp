#include "gapsi/baselines.hpp"
#include "gapsi/controller.hpp"
#include "gapsi/experiment.hpp"
#include "gapsi/fd.hpp"
#include "gapsi/inventory.hpp"
#include "gapsi/kernels.hpp"

#include "support/generators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <deque>
#include <limits>
#include <random>
#include <string>
#include <vector>

// End-to-end verification of the properties the library is sold on. Each
// criterion prints exactly one [PASS]/[FAIL] line; the binary exits nonzero
// if any criterion fails. Tolerances are pinned here, next to the checks.

using namespace gapsi;
using testsupport::dyadic;
using testsupport::Instance;
using testsupport::InstanceOptions;
using testsupport::random_instance;
using testsupport::uniform;
using testsupport::uniform_int;

namespace {

int g_failures = 0;

void verdict(bool pass, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

// Published study targets: expected average test loss of the learned level
// within 0.15 absolute, and within 3% of the best fixed level's loss.
constexpr double kRowAbsBand = 0.15;
constexpr double kRowOptRelBand = 0.03;

void poisson_table_criterion() {
  bool pass = true;
  std::string detail;
  for (const PoissonRowSpec& spec : poisson_table_rows()) {
    const PoissonRowResult r = poisson_table_row(spec);
    const bool row_ok =
        std::abs(r.test_loss - spec.target_loss) <= kRowAbsBand &&
        std::abs(r.test_loss - spec.target_opt) <= kRowOptRelBand * spec.target_opt;
    pass = pass && row_ok;
    std::printf(
        "       costs (%g,%g,%g): learned level %.2f, test loss %.4f "
        "(target %.2f), best level %g at %.4f (target %.2f), %.1fs%s\n",
        spec.purchase, spec.penalty, spec.outdating, r.trained_level, r.test_loss,
        spec.target_loss, r.opt_level, r.opt_loss, spec.target_opt, r.seconds,
        row_ok ? "" : "  <-- out of band");
    std::fflush(stdout);
  }
  verdict(pass, "poisson study reproduction",
          fmt("three cost rows within %.2f of target and %g%% of the best level",
              kRowAbsBand, 100.0 * kRowOptRelBand));
}

// ---------------------------------------------------------------- criterion 2

void stagnation_criterion() {
  ProductSpec p;
  p.lifetime = 2;
  p.lead_time = 0;
  p.costs.purchase = Sequence::constant(1.0);
  p.costs.holding = Sequence::constant(1.0);
  p.costs.penalty = Sequence::constant(10.0);
  p.costs.outdating = Sequence::constant(1.0);
  const SystemSpec sys({p});
  const FeatureVector w = FeatureVector::uniform(1, Eigen::VectorXd::Ones(1));

  Eigen::MatrixXd demands(200, 1);
  demands.topRows(100).setZero();
  demands.bottomRows(100).setConstant(1.0);

  auto levels = [&](Side policy_side) {
    GapsiOptions opt;
    opt.box = ParameterBox::uniform(1, 0.0, 2.0);
    opt.policy_side = policy_side;
    GapsiState st = gapsi_init(sys, w, opt);
    std::vector<double> trace;
    InventoryState x = InventoryState::zero(sys);
    for (int t = 1; t <= demands.rows(); ++t) {
      const Eigen::VectorXd d = demands.row(t - 1);
      const Eigen::VectorXd u = gapsi_step(sys, w, st, x, d, kInfiniteVolume, t, opt);
      trace.push_back(st.theta[0]);
      x = step(sys, StateControl{x.x, u}, d, kInfiniteVolume, t).next_state;
    }
    return trace;
  };

  const std::vector<double> left = levels(Side::Left);
  int first_zero = -1;
  for (int t = 0; t < 200 && first_zero < 0; ++t)
    if (left[static_cast<std::size_t>(t)] == 0.0) first_zero = t;
  bool frozen = first_zero >= 0 && first_zero < 100;
  if (frozen)
    for (int t = first_zero; t < 200; ++t)
      frozen = frozen && left[static_cast<std::size_t>(t)] == 0.0;

  const std::vector<double> right = levels(Side::Right);
  int recovery = -1;
  for (int t = 100; t < 150 && recovery < 0; ++t)
    if (right[static_cast<std::size_t>(t)] > 0.5) recovery = t;

  verdict(frozen && recovery >= 0, "one-sided rule stagnation dichotomy",
          fmt("left rule parks at 0 from t=%d and never moves; right rule "
              "recovers above 0.5 at t=%d (restart at t=101)",
              first_zero + 1, recovery + 1));
}

// ---------------------------------------------------------------- criterion 3

// Random-point agreement with the one-sided divided-difference ladder, then
// bit-exact agreement on instances built to sit exactly on kinks.
constexpr double kFdTol = 1e-6;
constexpr int kFdPointsPerFunction = 1000;

struct FdTally {
  int checked = 0;
  int skipped = 0;  // ladder hit a kink; no usable estimate
  int wrong = 0;
};

bool fd_close(double analytic, double estimate) {
  return std::abs(analytic - estimate) <= kFdTol * (1.0 + std::abs(estimate));
}

void fd_random_suite(FdTally& policy_t, FdTally& ztilde_t, FdTally& loss_t,
                     FdTally& trans_t) {
  std::mt19937_64 rng(20240811);
  auto need = [](const FdTally& t) { return t.checked < 2 * kFdPointsPerFunction; };
  int guard = 0;
  while ((need(policy_t) || need(ztilde_t) || need(loss_t) || need(trans_t)) &&
         ++guard < 4000) {
    const Instance inst = random_instance(rng);
    const SystemSpec& sys = inst.sys;

    // policy sections, in theta and in state coordinates
    FeatureVector w;
    w.sizes.resize(static_cast<std::size_t>(sys.num_products()));
    std::vector<double> vals;
    for (int k = 0; k < sys.num_products(); ++k) {
      const int pk = uniform_int(rng, 1, 3);
      w.sizes[static_cast<std::size_t>(k)] = pk;
      for (int j = 0; j < pk; ++j) vals.push_back(uniform(rng, 0.2, 2.0));
    }
    w.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<int>(vals.size()));
    Eigen::VectorXd theta(w.dim());
    for (int j = 0; j < theta.size(); ++j) theta[j] = uniform(rng, 0.0, 3.0);
    const InventoryState x{inst.z.x};

    for (Side side : {Side::Right, Side::Left}) {
      const PolicyJacobians PJ = policy_jacobians(sys, w, theta, x, side);
      if (need(policy_t)) {
        for (int c = 0; c < w.dim(); ++c) {
          auto sec = [&](double h) {
            Eigen::VectorXd th = theta;
            th[c] += h;
            return policy_order(sys, w, th, x);
          };
          const FdVectorEstimate fd = one_sided_slope_vector(sec, side);
          if (!fd.converged) {
            ++policy_t.skipped;
            continue;
          }
          ++policy_t.checked;
          for (int k = 0; k < sys.num_products(); ++k)
            if (!fd_close(PJ.wrt_theta(k, c), fd.value[k])) ++policy_t.wrong;
        }
        for (int c = 0; c < sys.state_dim(); ++c) {
          auto sec = [&](double h) {
            InventoryState xs = x;
            xs.x[c] += h;
            return policy_order(sys, w, theta, xs);
          };
          const FdVectorEstimate fd = one_sided_slope_vector(sec, side);
          if (!fd.converged) {
            ++policy_t.skipped;
            continue;
          }
          ++policy_t.checked;
          for (int k = 0; k < sys.num_products(); ++k)
            if (!fd_close(PJ.wrt_state(k, c), fd.value[k])) ++policy_t.wrong;
        }
      }

      // z sections of the reception map, the period loss and the transition
      const Eigen::MatrixXd ZJ = ztilde_jacobian(sys, inst.z, inst.cap, inst.t, side);
      const Eigen::RowVectorXd LJ =
          loss_jacobian(sys, inst.z, inst.demand, inst.cap, inst.t, side);
      const Eigen::MatrixXd TJ =
          transition_jacobian(sys, inst.z, inst.demand, inst.cap, inst.t, side);
      auto nudged = [&](int col, double h) {
        StateControl z = inst.z;
        if (col < sys.state_dim())
          z.x[col] += h;
        else
          z.u[col - sys.state_dim()] += h;
        return z;
      };
      for (int c = 0; c < sys.z_dim(); ++c) {
        if (need(ztilde_t)) {
          auto sec = [&](double h) {
            const StateControl z = nudged(c, h);
            Eigen::VectorXd rec(sys.num_products());
            std::vector<double> vols(static_cast<std::size_t>(sys.num_products()));
            for (int k = 0; k < sys.num_products(); ++k)
              vols[static_cast<std::size_t>(k)] = sys.product(k).unit_volume(inst.t);
            auto zf = [&](int k, int i) { return z.z(sys, k, i); };
            auto terms = detail::discard_terms<double>(sys, zf, vols, inst.cap);
            for (int k = 0; k < sys.num_products(); ++k)
              rec[k] = terms.received_after[static_cast<std::size_t>(k)];
            return rec;
          };
          const FdVectorEstimate fd = one_sided_slope_vector(sec, side);
          if (!fd.converged) {
            ++ztilde_t.skipped;
          } else {
            ++ztilde_t.checked;
            for (int k = 0; k < sys.num_products(); ++k) {
              const int row = sys.z_col_received(k);
              if (!fd_close(ZJ(row, c), fd.value[k])) ++ztilde_t.wrong;
            }
          }
        }
        if (need(loss_t)) {
          auto sec = [&](double h) {
            return step(sys, nudged(c, h), inst.demand, inst.cap, inst.t).loss;
          };
          const FdEstimate fd = one_sided_slope(sec, side);
          if (!fd.converged) {
            ++loss_t.skipped;
          } else {
            ++loss_t.checked;
            if (!fd_close(LJ[c], fd.value)) ++loss_t.wrong;
          }
        }
        if (need(trans_t)) {
          auto sec = [&](double h) {
            return step(sys, nudged(c, h), inst.demand, inst.cap, inst.t)
                .next_state.x;
          };
          const FdVectorEstimate fd = one_sided_slope_vector(sec, side);
          if (!fd.converged) {
            ++trans_t.skipped;
          } else {
            ++trans_t.checked;
            for (int r = 0; r < sys.state_dim(); ++r)
              if (!fd_close(TJ(r, c), fd.value[r])) ++trans_t.wrong;
          }
        }
      }
    }
  }
}

// Instances with every quantity a multiple of 1/64 and kinks planted on the
// evaluation point. All arithmetic is then exact in double precision, and a
// +-1/64 divided difference reads the one-sided slope with no rounding at
// all, so the analytic Jacobians must agree bit for bit.
int fd_constructed_kinks(int instances) {
  std::mt19937_64 rng(77);
  int mismatches = 0;
  for (int it = 0; it < instances; ++it) {
    const int K = uniform_int(rng, 1, 3);
    std::vector<ProductSpec> products;
    for (int k = 0; k < K; ++k) {
      ProductSpec p;
      p.lifetime = uniform_int(rng, 1, 4);
      p.lead_time = uniform_int(rng, p.lifetime >= 2 ? 0 : 1, 3);
      auto dy_cost = [&] {
        return Sequence::constant(static_cast<double>(uniform_int(rng, 0, 320)) / 64.0);
      };
      p.costs.purchase = dy_cost();
      p.costs.holding = dy_cost();
      p.costs.penalty = dy_cost();
      p.costs.outdating = dy_cost();
      p.costs.overflow = dy_cost();
      products.push_back(std::move(p));
    }
    const SystemSpec sys(std::move(products));

    StateControl z;
    z.x.resize(sys.state_dim());
    z.u.resize(sys.control_dim());
    for (int i = 0; i < z.x.size(); ++i) z.x[i] = dyadic(rng, 5.0);
    for (int k = 0; k < K; ++k) z.u[k] = dyadic(rng, 5.0);
    Eigen::VectorXd d(K);
    for (int k = 0; k < K; ++k) d[k] = dyadic(rng, 7.5);

    double cap = kInfiniteVolume;
    const int kink = it % 3;
    if (kink == 0) {
      // demand pinned to an on-hand prefix sum: sales/penalty/holding kink
      const int k = uniform_int(rng, 0, K - 1);
      const int upto = uniform_int(rng, 1, sys.product(k).lifetime);
      double s = 0.0;
      for (int i = 1; i <= upto; ++i) s += z.z(sys, k, i);
      d[k] = s;
    } else if (kink == 1) {
      // cap pinned to the exact on-hand volume: zero-excess discard kink
      double s = 0.0;
      for (int k = 0; k < K; ++k)
        for (int i = 1; i <= sys.product(k).lifetime; ++i) s += z.z(sys, k, i);
      cap = s;
    }
    // kink == 2 leaves the raw dyadic point: kinks land wherever slots tie

    const int t = 1;
    auto nudge = [&](int col, double h) {
      StateControl zz = z;
      if (col < sys.state_dim())
        zz.x[col] += h;
      else
        zz.u[col - sys.state_dim()] += h;
      return zz;
    };
    const double h = 1.0 / 64.0;
    for (Side side : {Side::Right, Side::Left}) {
      const double sh = side == Side::Right ? h : -h;
      const Eigen::RowVectorXd LJ = loss_jacobian(sys, z, d, cap, t, side);
      const Eigen::MatrixXd TJ = transition_jacobian(sys, z, d, cap, t, side);
      const StepOutcome base = step(sys, z, d, cap, t);
      for (int c = 0; c < sys.z_dim(); ++c) {
        const StepOutcome out = step(sys, nudge(c, sh), d, cap, t);
        if ((out.loss - base.loss) / sh != LJ[c]) ++mismatches;
        const Eigen::VectorXd tslope = (out.next_state.x - base.next_state.x) / sh;
        for (int r = 0; r < sys.state_dim(); ++r)
          if (tslope[r] != TJ(r, c)) ++mismatches;
      }

      // policy with the level pinned to the inventory position
      const FeatureVector w = FeatureVector::uniform(K, Eigen::VectorXd::Ones(1));
      Eigen::VectorXd theta(K);
      const InventoryState x{z.x};
      for (int k = 0; k < K; ++k) theta[k] = inventory_position(sys, x.x, k);
      const PolicyJacobians PJ = policy_jacobians(sys, w, theta, x, side);
      const Eigen::VectorXd pbase = policy_order(sys, w, theta, x);
      for (int c = 0; c < K; ++c) {
        Eigen::VectorXd th = theta;
        th[c] += sh;
        const Eigen::VectorXd slope = (policy_order(sys, w, th, x) - pbase) / sh;
        for (int k = 0; k < K; ++k)
          if (slope[k] != PJ.wrt_theta(k, c)) ++mismatches;
      }
      for (int c = 0; c < sys.state_dim(); ++c) {
        InventoryState xs = x;
        xs.x[c] += sh;
        const Eigen::VectorXd slope = (policy_order(sys, w, theta, xs) - pbase) / sh;
        for (int k = 0; k < K; ++k)
          if (slope[k] != PJ.wrt_state(k, c)) ++mismatches;
      }
    }
  }
  return mismatches;
}

void derivative_criterion() {
  FdTally policy_t, ztilde_t, loss_t, trans_t;
  fd_random_suite(policy_t, ztilde_t, loss_t, trans_t);
  const int kink_mismatches = fd_constructed_kinks(200);

  auto ok = [](const FdTally& t) {
    return t.wrong == 0 && t.checked >= 2 * kFdPointsPerFunction &&
           t.skipped < t.checked;
  };
  const bool pass = ok(policy_t) && ok(ztilde_t) && ok(loss_t) && ok(trans_t) &&
                    kink_mismatches == 0;
  verdict(pass, "one-sided derivative suite",
          fmt("divided differences at %.0e: policy %d/%d, reception %d/%d, "
              "loss %d/%d, transition %d/%d wrong (both sides, %d+ points each); "
              "%d mismatches at 200 constructed kink instances (exact compare)",
              kFdTol, policy_t.wrong, policy_t.checked, ztilde_t.wrong,
              ztilde_t.checked, loss_t.wrong, loss_t.checked, trans_t.wrong,
              trans_t.checked, kFdPointsPerFunction, kink_mismatches));
}

// ---------------------------------------------------------------- criterion 4

void censored_criterion() {
  std::mt19937_64 rng(5150);
  InstanceOptions opt;
  opt.finite_cap_prob = 0.0;  // sales-only feedback assumes an unbounded warehouse
  int wrong = 0;
  const int N = 1000;
  for (int it = 0; it < N; ++it) {
    const Instance inst = random_instance(rng, opt);
    const StepOutcome out = step(inst.sys, inst.z, inst.demand, inst.cap, inst.t);
    const Eigen::RowVectorXd cl =
        censored_loss_jacobian(inst.sys, inst.z, out.sales, inst.t);
    const Eigen::RowVectorXd fl =
        loss_jacobian(inst.sys, inst.z, inst.demand, inst.cap, inst.t, Side::Left);
    if (!(cl.array() == fl.array()).all()) ++wrong;
    const Eigen::MatrixXd ct = censored_transition_jacobian(inst.sys, inst.z, out.sales);
    const Eigen::MatrixXd ft =
        transition_jacobian(inst.sys, inst.z, inst.demand, inst.cap, inst.t, Side::Left);
    if (!(ct.array() == ft.array()).all()) ++wrong;
  }
  verdict(wrong == 0, "sales-only feedback equals left-sided full information",
          fmt("%d instances with unbounded warehouse, %d exact mismatches", N, wrong));
}

// ---------------------------------------------------------------- criterion 5

constexpr double kDiscardTol = 1e-9;

void discard_criterion() {
  std::mt19937_64 rng(424242);
  InstanceOptions opt;
  opt.min_products = 2;
  opt.finite_cap_prob = 1.0;
  int wrong_slots = 0;
  int wrong_volume = 0;
  const int N = 1000;
  for (int it = 0; it < N; ++it) {
    const Instance inst = random_instance(rng, opt);
    const SystemSpec& sys = inst.sys;
    const int K = sys.num_products();
    std::vector<double> vols(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      vols[static_cast<std::size_t>(k)] = sys.product(k).unit_volume(inst.t);
    auto zf = [&](int k, int i) { return inst.z.z(sys, k, i); };
    const auto terms = detail::discard_terms<double>(sys, zf, vols, inst.cap);

    // sequential reference: walk the products in index order and remove each
    // one's arrivals until the volume excess is used up
    double onhand_volume = 0.0;
    for (int k = 0; k < K; ++k)
      for (int i = 1; i <= sys.product(k).lifetime; ++i)
        onhand_volume += vols[static_cast<std::size_t>(k)] * zf(k, i);
    double remaining = std::max(onhand_volume - inst.cap, 0.0);
    double arrived_volume = 0.0;
    double removed_volume = 0.0;
    for (int k = 0; k < K; ++k) {
      const double v = vols[static_cast<std::size_t>(k)];
      const double arrived = zf(k, sys.product(k).lifetime);
      const double take = std::min(v * arrived, remaining);
      const double after = arrived - take / v;
      remaining -= take;
      arrived_volume += v * arrived;
      removed_volume += v * (arrived - terms.received_after[static_cast<std::size_t>(k)]);
      if (std::abs(after - terms.received_after[static_cast<std::size_t>(k)]) >
          kDiscardTol)
        ++wrong_slots;
    }
    const double excess = std::max(onhand_volume - inst.cap, 0.0);
    if (std::abs(removed_volume - std::min(excess, arrived_volume)) > kDiscardTol)
      ++wrong_volume;
  }
  verdict(wrong_slots == 0 && wrong_volume == 0,
          "threshold discard equals sequential removal",
          fmt("%d multi-product instances under a binding cap: %d slot "
              "mismatches above %.0e, %d removed-volume totals off the "
              "min(excess, arrivals) identity",
              N, wrong_slots, wrong_volume, kDiscardTol));
}

// ---------------------------------------------------------------- criterion 6

void unrolled_gradient_criterion() {
  std::mt19937_64 rng(999);
  const int N = 120;
  const int T = 5;
  int wrong = 0;
  for (int it = 0; it < N; ++it) {
    const Instance shape = random_instance(rng);
    const SystemSpec& sys = shape.sys;
    const int K = sys.num_products();

    FeatureVector w;
    w.sizes.resize(static_cast<std::size_t>(K));
    std::vector<double> vals;
    for (int k = 0; k < K; ++k) {
      const int pk = uniform_int(rng, 1, 2);
      w.sizes[static_cast<std::size_t>(k)] = pk;
      for (int j = 0; j < pk; ++j) vals.push_back(uniform(rng, 0.5, 1.5));
    }
    w.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<int>(vals.size()));

    GapsiOptions opt;
    opt.eta = 0.0;  // frozen parameters: every period differentiates at the same theta
    opt.buffer_length = uniform_int(rng, T, T + 3);
    opt.box = ParameterBox::uniform(w.dim(), 0.0, 4.0);
    GapsiState st = gapsi_init(sys, w, opt);

    std::vector<JacobianSet> J;
    InventoryState x = InventoryState::zero(sys);
    for (int t = 1; t <= T; ++t) {
      Eigen::VectorXd d(K);
      for (int k = 0; k < K; ++k) d[k] = uniform(rng, 0.0, 4.0);
      const Eigen::VectorXd u = gapsi_order(sys, w, st, x);
      const StateControl z{x.x, u};
      const FullInformationFeedback fb{d, shape.cap};
      J.push_back(jacobian_set(sys, w, st.theta, z, fb, t, opt.policy_side,
                               opt.dynamics_side));

      const Eigen::RowVectorXd g = gaps_gradient(J.back(), st.buffer);

      // oracle: rebuild every parameter-to-state chain from scratch in the
      // same left-multiplication order, then contract exactly as above
      const int n = sys.state_dim();
      const auto loss_x = J.back().loss_z.head(n);
      const auto loss_u = J.back().loss_z.tail(K);
      Eigen::RowVectorXd oracle = loss_u * J.back().policy_theta;
      if (t > 1) {
        Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, w.dim());
        for (int s0 = 1; s0 <= t - 1; ++s0) {
          Eigen::MatrixXd M =
              closed_loop_theta_jacobian(J[static_cast<std::size_t>(s0 - 1)]);
          for (int s = s0 + 1; s <= t - 1; ++s)
            M = closed_loop_state_jacobian(J[static_cast<std::size_t>(s - 1)]) * M;
          total += M;
        }
        oracle += (loss_x + loss_u * J.back().policy_state) * total;
      }
      if (!(g.array() == oracle.array()).all()) ++wrong;

      gapsi_learn(sys, w, st, z, fb, t, opt);
      x = step(sys, z, d, shape.cap, t).next_state;
    }
  }
  verdict(wrong == 0, "buffered gradient equals the unrolled chain rule",
          fmt("%d random instances, horizons up to %d with full-length buffers, "
              "frozen parameters: %d gradients differ (bitwise compare)",
              N, T, wrong));
}

// ---------------------------------------------------------------- criterion 7

void oracle_criterion() {
  std::mt19937_64 rng(31337);
  int beaten = 0;         // brute force found a strictly better level
  int replay_off = 0;     // reported loss disagrees with replaying the levels
  int cyclic_worse = 0;   // cyclic search above its stationary starting point
  const int N = 30;
  for (int it = 0; it < N; ++it) {
    ProductSpec p;
    p.lifetime = uniform_int(rng, 1, 4);
    p.lead_time = uniform_int(rng, p.lifetime >= 2 ? 0 : 1, 3);
    p.costs.purchase = Sequence::constant(uniform(rng, 0.0, 3.0));
    p.costs.holding = Sequence::constant(uniform(rng, 0.0, 3.0));
    p.costs.penalty = Sequence::constant(uniform(rng, 0.0, 6.0));
    p.costs.outdating = Sequence::constant(uniform(rng, 0.0, 3.0));
    const SystemSpec sys({p});
    const int T = uniform_int(rng, 4, 10);
    Eigen::MatrixXd demands(T, 1);
    for (int t = 0; t < T; ++t)
      demands(t, 0) = uniform(rng, 0.0, 1.0) < 0.2 ? 0.0 : uniform(rng, 0.0, 4.0);

    // exhaustive scan at resolution <= 0.01 over the same uniform grid family
    // the search seeds itself with, so its candidate set contains every level
    // scanned here and "never beaten" is exact rather than tolerance-bound
    const double span = (p.lead_time + 1) * demands.col(0).maxCoeff();
    const int G = std::max(2, 1 + static_cast<int>(std::ceil(span * 100.0)));
    const StationarySearch best =
        best_stationary_level(sys, demands, kInfiniteVolume, G);

    double brute = std::numeric_limits<double>::infinity();
    for (int i = 0; i < G; ++i) {
      const double level = i * span / (G - 1);
      double loss = 0.0;
      simulate_episode(sys, stationary_policy(sys, Eigen::VectorXd::Constant(1, level)),
                       demands, Sequence::constant(kInfiniteVolume),
                       [&](int, const StateControl&, const StepOutcome& o) {
                         loss += o.loss;
                       });
      brute = std::min(brute, loss);
    }
    if (best.loss > brute) ++beaten;

    double replay = 0.0;
    simulate_episode(sys, stationary_policy(sys, best.levels), demands,
                     Sequence::constant(kInfiniteVolume),
                     [&](int, const StateControl&, const StepOutcome& o) {
                       replay += o.loss;
                     });
    if (std::abs(replay - best.loss) > 1e-9) ++replay_off;
  }

  // cyclic dominance on longer, multi-product, possibly capacitated instances
  const int M = 20;
  for (int it = 0; it < M; ++it) {
    InstanceOptions iopt;
    iopt.finite_cap_prob = 0.5;
    const Instance inst = random_instance(rng, iopt);
    const int T = uniform_int(rng, 14, 30);
    Eigen::MatrixXd demands(T, inst.sys.num_products());
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < inst.sys.num_products(); ++k)
        demands(t, k) = uniform(rng, 0.0, 4.0);
    const StationarySearch st =
        best_stationary_level(inst.sys, demands, inst.cap, 50);
    const CyclicSearch cyc = best_cyclic_level(inst.sys, demands, 7, inst.cap, 50);
    if (cyc.loss > st.loss) ++cyclic_worse;
  }

  verdict(beaten == 0 && replay_off == 0 && cyclic_worse == 0,
          "hindsight searches against exhaustive scan",
          fmt("%d single-product instances: beaten by a 0.01-resolution scan %d "
              "times, reported loss off replay %d times; cyclic above stationary "
              "%d/%d times",
              N, beaten, replay_off, cyclic_worse, M));
}

// ---------------------------------------------------------------- criterion 8

void capacity_criterion() {
  const int K = 3;
  const int T = 1000;
  const double cap = 15.0;
  std::vector<ProductSpec> products;
  for (int k = 0; k < K; ++k) {
    ProductSpec p;
    p.lifetime = 3;
    p.lead_time = 0;
    p.costs.purchase = Sequence::constant(0.5);
    p.costs.holding = Sequence::constant(1.0);
    p.costs.penalty = Sequence::constant(4.0);
    p.costs.outdating = Sequence::constant(1.0);
    p.costs.overflow = Sequence::constant(10.0);
    products.push_back(std::move(p));
  }
  const SystemSpec sys(products);

  // demand ramps from 1 to 10 per product; unconstrained targets would want
  // roughly 30 units of volume against a cap of 15
  Eigen::MatrixXd demands(T, K);
  for (int t = 0; t < T; ++t)
    demands.row(t).setConstant(1.0 + 9.0 * t / (T - 1));
  const double bound = demands.maxCoeff();

  const FeatureVector w =
      FeatureVector::uniform(K, Eigen::VectorXd::Constant(1, bound));
  GapsiOptions opt;
  opt.box = ParameterBox::uniform(K, 0.0, 1.0);
  GapsiState st = gapsi_init(sys, w, opt);

  InventoryState x = InventoryState::zero(sys);
  int over = 0;
  int counted = 0;
  for (int t = 1; t <= T; ++t) {
    const double level_sum = bound * st.theta.sum();  // unit volumes
    if (t > 200) {
      ++counted;
      if (level_sum > 1.05 * cap) ++over;
    }
    const Eigen::VectorXd d = demands.row(t - 1);
    const Eigen::VectorXd u = gapsi_step(sys, w, st, x, d, cap, t, opt);
    x = step(sys, StateControl{x.x, u}, d, cap, t).next_state;
  }
  const double within = 100.0 * (counted - over) / counted;
  verdict(within >= 95.0, "learned levels respect the warehouse volume",
          fmt("3 products, cap 15, demand ramp 1 to 10: volume of the target "
              "levels within 1.05x cap for %.1f%% of periods after t=200 "
              "(need 95%%)",
              within));
}

}  // namespace

int main() {
  std::printf("acceptance checks\n");
  poisson_table_criterion();
  stagnation_criterion();
  derivative_criterion();
  censored_criterion();
  discard_criterion();
  unrolled_gradient_criterion();
  oracle_criterion();
  capacity_criterion();
  if (g_failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
