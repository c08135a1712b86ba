#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "lms/error.hpp"
#include "lms/scenario.hpp"

using namespace lms;
using lms::test::make_scenario;

TEST_SUITE("scenario") {
  TEST_CASE("arrival rates are one minus the tolerance") {
    const Scenario s = make_scenario(2, {0, 0, 1, 1}, {1.0, 1.0}, {0.2, 0.2, 0.4, 0.4});
    const ArrivalRates r = arrival_rates(s);
    REQUIRE(r.size() == 4);
    CHECK(r[0] == doctest::Approx(0.8));
    CHECK(r[1] == doctest::Approx(0.8));
    CHECK(r[2] == doctest::Approx(0.6));
    CHECK(r[3] == doctest::Approx(0.6));

    CHECK(arrival_rates(make_scenario(1, {0, 0}, {1.0}, {0.0, 0.0})).lambda == std::vector<double>{1.0, 1.0});
    CHECK(arrival_rates(make_scenario(1, {0}, {1.0}, {0.39}))[0] == doctest::Approx(0.61));
  }

  TEST_CASE("membership lists partition the UEs") {
    const Scenario s = make_scenario(3, {1, 0, 1, 2, 0}, {1.0, 2.0, 3.0}, {0.1, 0.1, 0.1, 0.1, 0.1});
    CHECK(s.num_ues() == 5);
    CHECK(s.num_groups() == 3);
    std::vector<int> seen(5, 0);
    for (std::size_t g = 0; g < 3; ++g)
      for (std::size_t k : s.members(g)) {
        CHECK(s.group_of(k) == g);
        ++seen[k];
      }
    CHECK(seen == std::vector<int>(5, 1));
  }

  TEST_CASE("invalid scenarios are rejected") {
    CHECK_THROWS_AS(make_scenario(2, {0, 0}, {1.0}, {0.1, 1.0}), ValidationError);
    CHECK_THROWS_AS(make_scenario(2, {0, 0}, {1.0}, {0.1, -0.1}), ValidationError);
    CHECK_THROWS_AS(make_scenario(2, {0, 2}, {1.0, 1.0}, {0.1, 0.1}), ValidationError);
    // a group with no subscriber
    CHECK_THROWS_AS(make_scenario(2, {0, 0}, {1.0, 1.0}, {0.1, 0.1}), ValidationError);
    CHECK_THROWS_AS(make_scenario(0, {0}, {1.0}, {0.1}), ValidationError);
    CHECK_THROWS_AS(make_scenario(2, {0}, {1.0}, {0.1, 0.1}), ValidationError);
    CHECK_THROWS_AS(make_scenario(2, {0}, {-1.0}, {0.1}), ValidationError);
    try {
      make_scenario(2, {0, 0}, {1.0}, {0.1, 1.0});
    } catch (const ValidationError& e) {
      CHECK(e.field().find("loss_tolerance") != std::string::npos);
    }
  }

  TEST_CASE("uniform placement") {
    const auto a = place_uniform(2000, 0.15, 4);
    CHECK(a == place_uniform(2000, 0.15, 4));
    CHECK(a != place_uniform(2000, 0.15, 5));
    std::size_t inner = 0;
    for (const Position& p : a) {
      CHECK(p.distance_km() <= 0.15);
      if (p.distance_km() <= 0.075) ++inner;
    }
    // a uniform disk puts a quarter of the points inside half the radius
    CHECK(double(inner) / 2000.0 == doctest::Approx(0.25).epsilon(0.15));

    Scenario s(2, {0}, {1.0}, {0.1}, {Position{0.2, 0.0}}, 1);
    CHECK_THROWS_AS(s.validate_positions(0.15), ValidationError);
    CHECK_NOTHROW(s.validate_positions(0.25));
  }

  TEST_CASE("scaling arrivals") {
    const Scenario s = make_scenario(2, {0, 0}, {1.0}, {0.4, 0.6});
    const Scenario x = scale_arrivals(s, 1.5);
    CHECK(arrival_rates(x)[0] == doctest::Approx(0.9));
    CHECK(arrival_rates(x)[1] == doctest::Approx(0.6));
    CHECK_THROWS_AS(scale_arrivals(s, 2.0), ValidationError);
  }
}
