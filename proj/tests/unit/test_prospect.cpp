#include <cmath>

#include "doctest.h"
#include "sublab/prospect.hpp"
#include "support/generators.hpp"

using namespace sublab;

// Evaluated with mpmath at 40 significant digits, alpha 0.88, lambda 2.25,
// delta 0.61 (gains) and 0.69 (losses).
namespace oracle {
constexpr double v_10 = 7.585775750291837687;
constexpr double v_minus_5 = -9.274192838040268658;
constexpr double v_2_5 = 2.239686373086187551;
constexpr double v_minus_10 = -17.06799543815663479;
struct WeightRow {
  double p, gain, loss;
};
constexpr WeightRow weights[] = {
    {0.1, 0.1863025663771741505, 0.1701454280771759098},
    {0.4, 0.3700230979557090612, 0.3916537100519444883},
    {0.5, 0.4206393543357561540, 0.4539875495240296250},
    {0.6, 0.4738539474839943165, 0.5180900046099030952},
    {0.9, 0.7117160638842063471, 0.7749034872307349865},
};
}  // namespace oracle

TEST_SUITE("prospect") {
  TEST_CASE("value function matches the high-precision oracle") {
    CHECK(prospect_value(10.0) == doctest::Approx(oracle::v_10).epsilon(1e-14));
    CHECK(prospect_value(-5.0) == doctest::Approx(oracle::v_minus_5).epsilon(1e-14));
    CHECK(prospect_value(2.5) == doctest::Approx(oracle::v_2_5).epsilon(1e-14));
    CHECK(prospect_value(-10.0) == doctest::Approx(oracle::v_minus_10).epsilon(1e-14));
    CHECK(prospect_value(0.0) == 0.0);
  }

  TEST_CASE("weighting function matches the high-precision oracle") {
    for (const auto& row : oracle::weights) {
      CAPTURE(row.p);
      CHECK(prospect_weight(row.p, Domain::Gain) == doctest::Approx(row.gain).epsilon(1e-14));
      CHECK(prospect_weight(row.p, Domain::Loss) == doctest::Approx(row.loss).epsilon(1e-14));
    }
    CHECK(prospect_weight(0.0, Domain::Gain) == 0.0);
    CHECK(prospect_weight(1.0, Domain::Loss) == 1.0);
    CHECK_THROWS_AS(prospect_weight(1.5, Domain::Gain), std::invalid_argument);
    CHECK_THROWS_AS(prospect_weight(-0.1, Domain::Gain), std::invalid_argument);
  }

  TEST_CASE("property: value is increasing and loss averse") {
    Rng rng(21);
    for (int i = 0; i < 500; ++i) {
      const double a = gen::real(rng, -50.0, 50.0);
      const double b = gen::real(rng, a, 50.0);
      CHECK(prospect_value(a) <= prospect_value(b));
      const double x = gen::real(rng, 0.01, 50.0);
      CHECK(prospect_value(-x) == doctest::Approx(-2.25 * prospect_value(x)).epsilon(1e-12));
      CHECK(-prospect_value(-x) > prospect_value(x));
    }
  }

  TEST_CASE("property: weights stay in [0, 1], overweight small and underweight large probabilities") {
    Rng rng(22);
    for (int i = 0; i < 500; ++i) {
      const double p = gen::real(rng, 0.0, 1.0);
      for (Domain d : {Domain::Gain, Domain::Loss}) {
        const double w = prospect_weight(p, d);
        CHECK((w >= 0.0 && w <= 1.0));
        if (p < 0.1) CHECK(w > p);
        if (p > 0.6) CHECK(w < p);
      }
    }
  }

  TEST_CASE("property: identity parameters collapse prospect utility to expected value") {
    Rng rng(23);
    const auto id = ProspectParams::identity();
    for (int i = 0; i < 300; ++i) {
      const std::size_t n = gen::size(rng, 1, 4);
      auto probs = gen::reals(rng, n, 0.05, 1.0);
      double total = 0.0;
      for (double p : probs) total += p;
      std::vector<Outcome> outs;
      for (std::size_t k = 0; k < n; ++k) outs.push_back({probs[k] / total, gen::real(rng, -20.0, 20.0)});
      const Lottery lot(outs);
      CHECK(prospect_utility(lot, Domain::Gain, id) == doctest::Approx(expected_utility(lot)).epsilon(1e-12));
    }
  }

  TEST_CASE("parameter and lottery validation") {
    CHECK_NOTHROW(ProspectParams{}.validate());
    CHECK_THROWS_AS((ProspectParams{1.2, 2.25, 0.61, 0.69}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ProspectParams{0.88, 0.5, 0.61, 0.69}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ProspectParams{0.88, 2.25, 0.0, 0.69}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((QuasiHyperbolicParams{1.5, 1.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS(Lottery(std::vector<Outcome>{}), std::invalid_argument);
    CHECK_THROWS_AS(Lottery({{0.5, 1.0}, {0.4, 2.0}}), std::invalid_argument);
    CHECK(expected_utility(Lottery::certain(3.0)) == 3.0);
  }

  TEST_CASE("zero payoffs do not contribute") {
    const Lottery lot({{0.5, 10.0}, {0.5, 0.0}});
    CHECK(prospect_utility(lot, Domain::Gain) == doctest::Approx(oracle::weights[2].gain * oracle::v_10).epsilon(1e-14));
  }
}
