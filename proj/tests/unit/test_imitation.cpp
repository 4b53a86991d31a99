#include <cmath>

#include "doctest.h"
#include "sublab/imitation.hpp"
#include "support/fixture_rates.hpp"
#include "support/generators.hpp"

using namespace sublab;

TEST_SUITE("imitation") {
  TEST_CASE("delta density is the empirical action frequency") {
    const auto human = load_fixtures(Game::Ultimatum, "human");
    for (StateIndex x = 0; x <= 10; ++x) {
      const auto h = estimate_action_density(human, x);
      CHECK(h[ultimatum::kAccept] == doctest::Approx(rates::ultimatum_human[x]));
    }
    const auto all = estimate_all_densities(human);
    CHECK(all.size() == 11);
    CHECK_THROWS_AS(estimate_action_density(human, 11), UncoveredStateError);
    try {
      estimate_action_density(load_fixtures(Game::Gamble, "winner"), 7);
      FAIL("expected UncoveredStateError");
    } catch (const UncoveredStateError& e) {
      CHECK(e.state() == 7);
    }
  }

  TEST_CASE("property: gaussian and smoothed densities are distributions peaked at the data") {
    const auto h10 = load_fixtures(Game::Procrastination, "h10:gpa1");
    Rng rng(61);
    for (int trial = 0; trial < 50; ++trial) {
      DensityEstimatorSpec spec{Kernel::Gaussian, gen::real(rng, 0.2, 3.0), gen::real(rng, 0.0, 0.2)};
      const auto h = estimate_action_density(h10, 0, spec);
      double total = 0.0;
      for (double p : h.probs()) {
        total += p;
        CHECK(p > 0.0);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
    DemonstrationSet single(Game::Procrastination, 1, 10);
    single.add(h10.records()[2]);  // day 6
    const auto peaked = estimate_action_density(single, 0, {Kernel::Gaussian, 1.0, 0.0});
    CHECK(peaked[5] > peaked[4]);
    CHECK(peaked[4] == doctest::Approx(peaked[6]).epsilon(1e-12));
    const auto smoothed = estimate_action_density(single, 0, {Kernel::Delta, 1.0, 0.1});
    CHECK(smoothed[0] == doctest::Approx(0.1 / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS((DensityEstimatorSpec{Kernel::Gaussian, 0.0, 0.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((DensityEstimatorSpec{Kernel::Delta, 1.0, -1.0}.validate()), std::invalid_argument);
  }

  TEST_CASE("training lowers the loss and is deterministic per seed") {
    const auto demos = load_fixtures(Game::Marshmallow, "2h:age3");
    ImitationConfig config;
    config.epochs = 300;
    config.seed = 4;
    const auto a = imitate(demos, config);
    const auto b = imitate(demos, config);
    CHECK(a.loss_curve.size() == 301);
    CHECK(a.loss_curve.back() < a.loss_curve.front());
    CHECK(a.net == b.net);
    CHECK(a.loss_curve == b.loss_curve);
    config.seed = 5;
    CHECK_FALSE(imitate(demos, config).net == a.net);
  }

  TEST_CASE("human ultimatum responder matches the fixture within 0.1") {
    const auto demos = load_fixtures(Game::Ultimatum, "human");
    const auto result = imitate(demos, {});
    CHECK(max_density_error(result.net, demos) <= 0.1);
  }

  TEST_CASE("input validation") {
    CHECK_THROWS_AS(imitate(DemonstrationSet(Game::Ultimatum, 11, 2), {}), std::invalid_argument);
    const auto demos = load_fixtures(Game::Ultimatum, "fair");
    CHECK_THROWS_AS(train_imitation(MlpQNet(3, 2), demos, {}), std::invalid_argument);
    ImitationConfig bad;
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.learning_rate = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("a huge learning rate surfaces as divergence") {
    const auto demos = load_fixtures(Game::Ultimatum, "human");
    ImitationConfig config;
    config.epochs = 200;
    config.learning_rate = 1e200;
    CHECK_THROWS_AS(imitate(demos, config), TrainingDivergence);
  }

  TEST_CASE("property: the write hazard reproduces the day distribution") {
    Rng rng(62);
    for (int trial = 0; trial < 300; ++trial) {
      const auto d = gen::distribution(rng, gen::size(rng, 1, 10));
      const auto hz = write_hazard(d);
      REQUIRE(hz.size() == d.size());
      double survive = 1.0;
      for (std::size_t t = 0; t < d.size(); ++t) {
        CHECK((hz[t] >= 0.0 && hz[t] <= 1.0 + 1e-12));
        CHECK(survive * hz[t] == doctest::Approx(d[t]).epsilon(1e-9));
        survive *= 1.0 - hz[t];
      }
      CHECK(hz.back() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("loss curve CSV") {
    CHECK(loss_curve_csv({0.5, 0.25}) == "epoch,loss\n0,0.5\n1,0.25\n");
  }
}
