#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "ruinsim/errors.hpp"
#include "ruinsim/tailcalc.hpp"

using namespace ruinsim;

namespace {

const TailDistribution kF = TailDistribution::rv_star(2, 2, 1.0);
const TailDistribution kG = TailDistribution::rv_star(2, 2, 0.3);
const TailDistribution kX = TailDistribution::shifted(kF, -1.0);

MonteCarloOptions mc(std::uint64_t samples, std::uint64_t seed = 1) {
  MonteCarloOptions o;
  o.samples = samples;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("log transform of an RVStar law") {
  const LogTransformTail v(TailDistribution::rv_star(2, 2, 0.5));
  const double ls = std::log(0.5);
  CHECK(v.mass() == 1.0);
  CHECK(v.support_lower() == doctest::Approx(ls));
  CHECK(v.lower_cutoff() == v.support_lower());
  for (double x : {ls, ls + 0.3, 0.0, 2.0, 10.0}) {
    const double t = x - ls;
    CHECK(v.tail(x) == doctest::Approx(std::exp(-2 * t) * std::pow(1 + t, -2.0)).epsilon(1e-13));
  }
  CHECK(v.tail(ls - 1.0) == 1.0);
  CHECK(v.tail(v.tail_quantile(1e-6)) == doctest::Approx(1e-6).epsilon(1e-9));
  // Density integrates the tail: finite difference check.
  const double h = 1e-6;
  CHECK(v.density(1.0) == doctest::Approx((v.tail(1.0 - h) - v.tail(1.0 + h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("vhat") {
  CHECK(v_hat(LogTransformTail(TailDistribution::rv_star(2, 2, 0.5)), 2.0) ==
        doctest::Approx(0.75).epsilon(1e-9));
  CHECK(v_hat(LogTransformTail(kG), 0.0) == 1.0);
  CHECK(std::isinf(v_hat(LogTransformTail(TailDistribution::pareto(2, 1)), 2.0)));
  // Conditioning on the positive part.
  const auto shifted_logn = TailDistribution::shifted(TailDistribution::lognormal(0, 0.5), -1.0);
  const LogTransformTail v(shifted_logn);
  CHECK(v.mass() == doctest::Approx(0.5));
  CHECK(v_hat(v, 2.0) == doctest::Approx(upper_moment(shifted_logn, 2.0) / 0.5).epsilon(1e-12));
  CHECK(std::isinf(v.support_lower()));
  CHECK(v.tail(v.lower_cutoff()) > 1.0 - 1e-12);
}

TEST_CASE("product tail quadrature against a 30-digit oracle") {
  CHECK(product_tail(kF, kG, 50.0) ==
        doctest::Approx(0.00000628704074107880009700757529865).epsilon(1e-8));
  CHECK(product_tail(kX, kG, 50.0) ==
        doctest::Approx(0.00000395554636711576138088989184934).epsilon(1e-8));
  CHECK(product_tail(kF, kG, 1000.0) ==
        doctest::Approx(0.00000000732008575185361150561713398237).epsilon(1e-8));
  CHECK(product_tail(kX, kG, 1000.0) ==
        doctest::Approx(0.00000000499905507556976247291370048954).epsilon(1e-8));
  // Below the product support every path exceeds x.
  CHECK(product_tail(kF, kG, 0.1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(product_tail(kX, kG, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(product_tail(kG, TailDistribution::shifted(kF, -1.6), 5.0), SpecError);
}

TEST_CASE("product expansion") {
  // Two identical factors: 2 mu U(x).
  CHECK(product_tail_expansion({kF, kF}, 2.0, 40.0) ==
        doctest::Approx(2 * 3.0 * kF.tail(40.0)).epsilon(1e-12));
  CHECK(product_tail_expansion({kF, kG}, 2.0, 40.0) ==
        doctest::Approx(0.27 * kF.tail(40.0) + 3.0 * kG.tail(40.0)).epsilon(1e-12));
  // A factor with E xi^alpha = 1 adds its own term and leaves the others.
  const double sigma = 0.4;
  const auto unit = TailDistribution::lognormal(-2.0 * sigma * sigma / 2.0, sigma);
  CHECK(upper_moment(unit, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double x : {5.0, 50.0}) {
    CHECK(product_tail_expansion({kF, kG, unit}, 2.0, x) ==
          doctest::Approx(product_tail_expansion({kF, kG}, 2.0, x) + 0.81 * unit.tail(x))
              .epsilon(1e-12));
  }
  CHECK_THROWS_AS(product_tail_expansion({kF, TailDistribution::pareto(2, 1)}, 2.0, 10.0),
                  PreconditionError);
}

TEST_CASE("convolution oracle") {
  const LogTransformTail v(kF);
  SUBCASE("frozen 30-digit values at the 1e-6 quantile") {
    const double x = 5.0995416499744282;
    CHECK(v.tail(x) == doctest::Approx(1e-6).epsilon(1e-9));
    CHECK(convolve_tail_oracle({v, v}, x) / v.tail(x) ==
          doctest::Approx(6.5300496391696129).epsilon(1e-7));
    CHECK(convolve_tail_oracle({v, v, v}, x) / v.tail(x) ==
          doctest::Approx(29.181186978082558).epsilon(1e-7));
  }
  SUBCASE("below the supports") {
    CHECK(convolve_tail_oracle({v, v}, -1.0) == 1.0);
    const LogTransformTail w(kG);
    CHECK(convolve_tail_oracle({v, w}, w.support_lower() + 1e-9) ==
          doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("normal summands have a normal sum") {
    const LogTransformTail n1(TailDistribution::lognormal(0.0, 0.5));
    const LogTransformTail n2(TailDistribution::lognormal(1.0, 0.8));
    const double sd = std::hypot(0.5, 0.8);
    for (double x : {0.0, 1.0, 3.0, 5.0}) {
      const double exact = 0.5 * std::erfc((x - 1.0) / (sd * std::numbers::sqrt2));
      CHECK(convolve_tail_oracle({n1, n2}, x) == doctest::Approx(exact).epsilon(1e-7));
    }
  }
  SUBCASE("alpha = 0 expansion is the sum of tails") {
    const LogTransformTail p1(TailDistribution::pareto(1.5, 1.0));
    const LogTransformTail p2(TailDistribution::pareto(2.5, 2.0));
    const double x = 4.0;
    CHECK(sum_tail_expansion({p1, p2}, 0.0, x) ==
          doctest::Approx(p1.tail(x) + p2.tail(x)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(convolve_tail_oracle({v, v, v, v}, 3.0), SpecError);
}

TEST_CASE("pakes and sum verifiers") {
  const LogTransformTail v(kF);
  const auto pakes = verify_pakes(v, 2.0, {5.0995416499744282});
  REQUIRE(pakes.rows.size() == 2);
  CHECK(pakes.rows[0].predicted == doctest::Approx(6.0));
  CHECK(pakes.rows[1].predicted == doctest::Approx(27.0));
  CHECK(pakes.max_rel_err == doctest::Approx(0.5300496391696129 / 6.0).epsilon(1e-5));
  CHECK(pakes.pass == (pakes.max_rel_err <= pakes.tolerance));
  CHECK(pakes.pass);

  const auto l2 = verify_sum({v, LogTransformTail(kG)}, 2.0, {});
  CHECK(l2.rows.size() == 3);
  CHECK(l2.pass == (l2.max_rel_err <= 0.1));
}

TEST_CASE("product verifier statistic") {
  const auto rep = verify_product(kF, kG, 2.0, {50.0, 1000.0});
  REQUIRE(rep.rows.size() == 2);
  double worst = 0.0;
  for (const auto& r : rep.rows) worst = std::max(worst, std::abs(r.ratio() - 1.0));
  CHECK(rep.max_rel_err == doctest::Approx(worst));
  CHECK(rep.pass == (rep.max_rel_err <= 0.1));
  // Log-slow engagement: the ratio climbs toward 1 with x.
  CHECK(rep.rows[1].ratio() > rep.rows[0].ratio());
}

TEST_CASE("kesten verifier") {
  const auto rep = verify_kesten(kG, 2.0, 0.05, 4, {1.0, 3.0, 10.0}, mc(200'000));
  REQUIRE(rep.rows.size() == 12);
  // n = 1 estimates G(x, inf) itself.
  for (int j = 0; j < 3; ++j) {
    const auto& r = rep.rows[j];
    CHECK(r.n == 1);
    CHECK(std::abs(r.observed - kG.tail(r.x)) <= 4.0 * r.se + 1e-12);
  }
  CHECK(rep.pass == (rep.max_rel_err <= 0.1));
  CHECK_THROWS_AS(verify_kesten(TailDistribution::pareto(2, 0.5), 2.0, 0.05, 4, {}, mc(100)),
                  PreconditionError);
}

TEST_CASE("remainder verifier") {
  const ModelSpec spec{kX, TailDistribution::rv_star(2, 2, 0.5), Independent{}, 2.0,
                       FiniteHorizon{1}};
  const auto rep = verify_remainder(spec, {2, 5, 20}, {5.0, 10.0, 20.0}, mc(100'000));
  CHECK(rep.rows.size() == 9);
  REQUIRE(rep.monotone.has_value());
  CHECK(*rep.monotone);
  CHECK(rep.pass);
  CHECK(rep.max_rel_err < 0.05);

  ModelSpec divergent = spec;
  divergent.g = TailDistribution::rv_star(2, 2, 0.6);
  CHECK_THROWS_AS(verify_remainder(divergent, {5}, {5.0}, mc(100)), PreconditionError);
}

TEST_CASE("potter bounds") {
  const LogTransformTail rv(TailDistribution::rv_star(2, 2, 0.5));
  const auto rep = verify_potter(rv, 2.0);
  REQUIRE(rep.x0.has_value());
  CHECK(rep.pass);
  // The lower envelope needs beta / (1 + t) small enough: t = x0 - ln(scale)
  // lands between 13 and 15 for beta = 2, eps = 0.1, b = 1.1.
  const double t = *rep.x0 - std::log(0.5);
  CHECK(t >= 13.0);
  CHECK(t <= 15.0);

  const LogTransformTail pareto(TailDistribution::pareto(2.0, 1.0));
  const auto p = verify_potter(pareto, 2.0);
  REQUIRE(p.x0.has_value());
  CHECK(*p.x0 == doctest::Approx(0.0));

  // A wrong index never fits the envelope.
  const auto bad = verify_potter(rv, 3.0);
  CHECK_FALSE(bad.x0.has_value());
  CHECK_FALSE(bad.pass);
}
