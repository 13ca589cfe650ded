#include "doctest.h"

#include <cmath>
#include <bit>
#include <cstdint>
#include <memory>
#include <vector>

#include "ruinsim/errors.hpp"
#include "ruinsim/model.hpp"
#include "ruinsim/stats.hpp"

using namespace ruinsim;

namespace {

ModelSpec balanced(int n) {
  return ModelSpec{
      .f = TailDistribution::shifted(TailDistribution::rv_star(2, 2, 1.0), -1.0),
      .g = TailDistribution::rv_star(2, 2, 0.3),
      .dependence = Independent{},
      .alpha = 2.0,
      .horizon = FiniteHorizon{n},
  };
}

// X can be negative: premium offset larger than the claim scale.
ModelSpec signed_losses(int n, Dependence dep = Independent{}) {
  return ModelSpec{
      .f = TailDistribution::shifted(TailDistribution::rv_star(2, 2, 1.0), -1.6),
      .g = TailDistribution::rv_star(2, 2, 0.5),
      .dependence = dep,
      .alpha = 2.0,
      .horizon = FiniteHorizon{n},
  };
}

}  // namespace

TEST_CASE("truncation level") {
  CHECK(truncation_level(0.27, 1e-6) == 10);
  CHECK(truncation_level(0.75, 1e-6) == 52);
  for (double mu : {0.05, 0.27, 0.5, 0.75, 0.95}) {
    for (double tol : {1e-3, 1e-6, 1e-9}) {
      const int n = truncation_level(mu, tol);
      // A_inf - A_N = mu^{N+1} / (1 - mu) <= tol, and N is minimal.
      CHECK(std::pow(mu, n + 1) / (1 - mu) <= tol * (1 + 1e-12));
      if (n > 1) CHECK(std::pow(mu, n) / (1 - mu) > tol);
    }
  }
  CHECK_THROWS_AS(truncation_level(1.0, 1e-6), PreconditionError);
  CHECK_THROWS_AS(truncation_level(1.3, 1e-6), PreconditionError);
}

TEST_CASE("one-step path unrolls to x1 y1") {
  const auto spec = signed_losses(1);
  for (int i = 0; i < 1000; ++i) {
    RngStream a(3, i);
    RngStream b(3, i);
    const auto [x, y] = draw_pair(spec, a);
    const auto path = simulate_path(spec, 1, b);
    CHECK(path.s == x * y);
    CHECK(path.m == std::max(0.0, x * y));
    CHECK(path.n_used == 1);
  }
}

TEST_CASE("pathwise invariants: M >= max(0, S), M nondecreasing along prefixes") {
  PathSimulator sim(signed_losses(25, FgmDependence{0.7}));
  std::vector<PathSample> prefix(25);
  RngStream rng(8, 0);
  for (int i = 0; i < 20000; ++i) {
    sim.prefixes(prefix, rng);
    double prev_m = 0.0;
    for (const auto& p : prefix) {
      CHECK(p.m >= 0.0);
      CHECK(p.m >= p.s);
      CHECK(p.m >= prev_m);
      prev_m = p.m;
    }
  }
}

TEST_CASE("nonpositive losses give zero maximum") {
  ModelSpec spec = signed_losses(5);
  spec.f = TailDistribution::shifted(TailDistribution::pareto(2.0, 1.0), -1.0e9);
  RngStream rng(1, 1);
  for (int i = 0; i < 1000; ++i) {
    CHECK(simulate_path(spec, 5, rng).m == 0.0);
    CHECK(simulate_M_recursive(spec, 5, rng) == 0.0);
  }
}

TEST_CASE("recursions unroll at n = 1 and stay nonnegative") {
  const auto spec = signed_losses(1);
  for (int i = 0; i < 200; ++i) {
    RngStream a(4, i), b(4, i), c(4, i);
    const auto [x, y] = draw_pair(spec, a);
    CHECK(simulate_T(spec, 1, b) == x * y);
    CHECK(simulate_M_recursive(spec, 1, c) == std::max(0.0, x) * y);
  }
  RngStream rng(4, 999);
  for (int i = 0; i < 2000; ++i) CHECK(simulate_M_recursive(spec, 4, rng) >= 0.0);
}

TEST_CASE("prefix sweep equals independent forward paths") {
  PathSimulator sim(balanced(6));
  std::vector<PathSample> prefix(6);
  for (int i = 0; i < 100; ++i) {
    RngStream a(5, i), b(5, i);
    sim.prefixes(prefix, a);
    const auto path = sim.path(6, b);
    CHECK(prefix.back().s == path.s);
    CHECK(prefix.back().m == path.m);
  }
}

TEST_CASE("determinism: same stream gives bit-identical samples") {
  const auto spec = signed_losses(7, FgmDependence{-0.3});
  RngStream a(123, 45), b(123, 45);
  for (int i = 0; i < 100; ++i) {
    const auto p = simulate_path(spec, 7, a);
    const auto q = simulate_path(spec, 7, b);
    CHECK(std::bit_cast<std::uint64_t>(p.s) == std::bit_cast<std::uint64_t>(q.s));
    CHECK(std::bit_cast<std::uint64_t>(p.m) == std::bit_cast<std::uint64_t>(q.m));
    CHECK(p.n_used == q.n_used);
  }
}

TEST_CASE("validation") {
  ModelSpec bad = balanced(3);
  bad.g = TailDistribution::shifted(TailDistribution::lognormal(0, 1), -1.0);
  CHECK_THROWS_AS(bad.validate(), SpecError);

  bad = balanced(0);
  CHECK_THROWS_AS(bad.validate(), SpecError);

  bad = balanced(3);
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), SpecError);

  // mu_2 of lognormal(0, 0.5) is e^{1/2} > 1.
  ModelSpec heavy = balanced(3);
  heavy.g = TailDistribution::lognormal(0, 0.5);
  heavy.horizon = InfiniteHorizon{1e-6};
  try {
    heavy.validate();
    FAIL("expected PreconditionError");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()) == "infinite horizon requires mu_alpha < 1");
  }
  CHECK_THROWS_AS(simulate_truncated_infinite(heavy, *std::make_unique<RngStream>(1, 1)),
                  PreconditionError);

  ModelSpec inf = balanced(1);
  inf.horizon = InfiniteHorizon{1e-6};
  PathSimulator sim(inf);
  CHECK(sim.mu_alpha() == doctest::Approx(0.27));
  CHECK(sim.horizon() == 10);
  RngStream rng(1, 2);
  CHECK(simulate_truncated_infinite(inf, rng).n_used == 10);
}

TEST_CASE("extreme discount factors stay finite in log space") {
  ModelSpec spec = balanced(40);
  spec.g = TailDistribution::lognormal(0.0, 12.0);
  RngStream rng(6, 6);
  for (int i = 0; i < 5000; ++i) {
    const auto p = simulate_path(spec, 40, rng);
    CHECK(!std::isnan(p.s));
    CHECK(p.m >= 0.0);
  }
}
