#include "gapsi/piecewise_linear.hpp"

#include "gapsi/inventory.hpp"
#include "support/generators.hpp"

#include <doctest.h>

#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

using namespace gapsi;
using testsupport::Instance;
using testsupport::InstanceOptions;
using testsupport::random_instance;
using testsupport::uniform_int;

namespace {

PwlScalar ramp_up(double at) {  // [h - at]^+
  return positive_part(PwlScalar::variable() - PwlScalar(at));
}

PwlScalar ramp_down(double at) {  // [at - h]^+
  return positive_part(PwlScalar(at) - PwlScalar::variable());
}

StateControl bump(const SystemSpec& sys, StateControl z, int k, int i, double h) {
  if (i <= sys.product(k).slot_count())
    z.x[sys.state_offset(k) + i - 1] += h;
  else
    z.u[k] += h;
  return z;
}

}  // namespace

TEST_CASE("constants and variables evaluate affinely") {
  PwlScalar c(3.0);
  CHECK(c(0.0) == 3.0);
  CHECK(c(7.5) == 3.0);
  PwlScalar x = PwlScalar::variable();
  CHECK(x(2.5) == 2.5);
  PwlScalar f = 2.0 * x + PwlScalar(1.0);
  CHECK(f(0.0) == 1.0);
  CHECK(f(4.0) == 9.0);
  CHECK((f / 2.0)(4.0) == 4.5);
  CHECK((-f)(4.0) == -9.0);
}

TEST_CASE("sums merge breakpoints from both operands") {
  PwlScalar s = ramp_up(2.0) + ramp_down(3.0);
  REQUIRE(s.knots() == std::vector<double>{2.0, 3.0});
  CHECK(s(0.0) == 3.0);
  CHECK(s(2.0) == 1.0);
  CHECK(s(2.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s(3.0) == 1.0);
  CHECK(s(10.0) == 8.0);
}

TEST_CASE("positive part inserts zero crossings as breakpoints") {
  PwlScalar f = positive_part(PwlScalar::variable() - PwlScalar(2.0));
  REQUIRE(f.knots() == std::vector<double>{2.0});
  CHECK(f(1.0) == 0.0);
  CHECK(f(2.0) == 0.0);
  CHECK(f(3.0) == 1.0);

  // 2 - [h - 1]^+ crosses zero at h = 3 between existing breakpoints
  PwlScalar g = positive_part(PwlScalar(2.0) - ramp_up(1.0));
  REQUIRE(g.knots() == std::vector<double>{1.0, 3.0});
  CHECK(g(0.0) == 2.0);
  CHECK(g(2.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g(3.0) == 0.0);
  CHECK(g(5.0) == 0.0);
  CHECK(g.tail_slope() == 0.0);

  // negative start turning positive: crossing lands before the first knot
  PwlScalar r = positive_part(PwlScalar::variable() - PwlScalar(0.5) + ramp_up(2.0));
  CHECK(r(0.25) == 0.0);
  CHECK(r(0.5) == 0.0);
  CHECK(r(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r(3.0) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("minimize scans breakpoints and ties go to the smaller argument") {
  PwlScalar v = ramp_up(2.0) + ramp_down(2.0);  // |h - 2|
  auto m = v.minimize(10.0);
  CHECK(m.arg == 2.0);
  CHECK(m.value == 0.0);

  // flat bottom on [2, 5]: the left edge wins
  PwlScalar w = ramp_down(2.0) + ramp_up(5.0);
  auto p = w.minimize(10.0);
  CHECK(p.arg == 2.0);
  CHECK(p.value == 0.0);

  auto up = PwlScalar::variable().minimize(4.0);
  CHECK(up.arg == 0.0);
  CHECK(up.value == 0.0);

  auto down = ramp_down(9.0).minimize(4.0);  // still falling at the cap
  CHECK(down.arg == 4.0);
  CHECK(down.value == 5.0);

  auto clipped = (ramp_up(2.0) + ramp_down(2.0)).minimize(1.0);  // kink out of range
  CHECK(clipped.arg == 1.0);
  CHECK(clipped.value == 1.0);
}

TEST_CASE("kernel formulas instantiated on pwl scalars match the double path") {
  std::mt19937_64 rng(909);
  const double samples[] = {0.0, 0.25, 1.0, 2.5};
  for (int it = 0; it < 200; ++it) {
    Instance inst = random_instance(rng);
    const SystemSpec& sys = inst.sys;
    const int k0 = uniform_int(rng, 0, sys.num_products() - 1);
    const int i0 = uniform_int(rng, 1, sys.product(k0).slot_count() + 1);
    auto zfn = [&](int k, int i) -> PwlScalar {
      const PwlScalar base(inst.z.z(sys, k, i));
      if (k == k0 && i == i0) return PwlScalar::variable() + base;
      return base;
    };
    std::vector<double> volumes;
    for (int k = 0; k < sys.num_products(); ++k)
      volumes.push_back(sys.product(k).unit_volume(inst.t));

    auto terms = detail::discard_terms<PwlScalar>(sys, zfn, volumes, inst.cap);
    PwlScalar total_loss(0.0);
    std::vector<std::vector<PwlScalar>> next;
    for (int k = 0; k < sys.num_products(); ++k) {
      auto prefix = detail::onhand_prefix<PwlScalar>(
          sys, k, zfn, terms.received_after[static_cast<std::size_t>(k)]);
      total_loss = total_loss + detail::loss_terms<PwlScalar>(sys, k, zfn, terms, prefix,
                                                              inst.demand[k], inst.t)
                                    .total();
      next.push_back(detail::next_state_slots<PwlScalar>(
          sys, k, zfn, terms.received_after[static_cast<std::size_t>(k)], prefix,
          inst.demand[k]));
    }

    for (double h : samples) {
      StateControl zh = bump(sys, inst.z, k0, i0, h);
      LossResult direct = loss(sys, zh, inst.demand, inst.cap, inst.t);
      CHECK(total_loss(h) == doctest::Approx(direct.total).epsilon(1e-9));
      InventoryState xn = transition(sys, zh, inst.demand, inst.cap, inst.t);
      for (int k = 0; k < sys.num_products(); ++k)
        for (int i = 1; i <= sys.product(k).slot_count(); ++i)
          CHECK(next[static_cast<std::size_t>(k)][static_cast<std::size_t>(i - 1)](h) ==
                doctest::Approx(xn.x[sys.state_offset(k) + i - 1]).epsilon(1e-9));
    }
  }
}

TEST_CASE("evaluation and minimization reject bad arguments") {
  PwlScalar f = ramp_up(1.0);
  CHECK_THROWS_AS(f(-0.5), std::invalid_argument);
  CHECK_THROWS_AS(f.minimize(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK_THROWS_AS(f.minimize(-1.0), std::invalid_argument);
}
