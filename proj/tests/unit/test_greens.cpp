#include <cmath>
#include <sstream>

#include "doctest.h"
#include "qvoter/greens.hpp"

using namespace qvoter;

namespace {

double harmonic(int n) {
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

}  // namespace

TEST_CASE("constant rate gives the gambler's ruin time") {
  const auto r = RateFunction::constant(1.0);
  for (int x = 1; x < 30; ++x) CHECK(expected_hitting_time(x, 30, r) == doctest::Approx(x * (30.0 - x)));
  const auto fast = RateFunction::constant(4.0);
  CHECK(expected_hitting_time(7, 20, fast) == doctest::Approx(7.0 * 13.0 / 4.0));
}

TEST_CASE("linear rate matches the harmonic sum") {
  // 2x(z-x)/z from y <= x, and 2x (H_{z-1} - H_x - (z-1-x)/z) from y > x.
  const int x = 10;
  const int z = 100;
  const double oracle = 2.0 * x * (z - x) / z + 2.0 * x * (harmonic(z - 1) - harmonic(x) - (z - 1.0 - x) / z);
  const double got = expected_hitting_time(x, z, RateFunction::linear());
  CHECK(got == doctest::Approx(oracle).epsilon(1e-13));
  CHECK(got == doctest::Approx(45.168185273427397).epsilon(1e-13));
}

TEST_CASE("Green's function") {
  const auto r = RateFunction::power(0.5);
  const std::int64_t z = 40;
  for (std::int64_t x = 1; x < z; x += 7) {
    double total = 0.0;
    for (std::int64_t y = 1; y < z; ++y) total += green_function(x, y, z, r);
    CHECK(total == doctest::Approx(expected_hitting_time(x, z, r)).epsilon(1e-12));
  }
  for (std::int64_t x = 1; x < z; ++x) {
    for (std::int64_t y = 1; y < z; ++y) {
      REQUIRE(green_function(x, y, z, r) * r(y) == doctest::Approx(green_function(y, x, z, r) * r(x)));
    }
  }
}

TEST_CASE("hitting time is unimodal in x and symmetric for symmetric rates") {
  const auto r = RateFunction::constant(1.0);
  for (int x = 1; x < 25; ++x) CHECK(expected_hitting_time(x, 50, r) < expected_hitting_time(x + 1, 50, r));
  CHECK(expected_hitting_time(13, 50, r) == doctest::Approx(expected_hitting_time(37, 50, r)));
}

TEST_CASE("starting points next to the ends") {
  const auto r = RateFunction::linear();
  auto oracle = [](int x, int z) {
    return 2.0 * x * (z - x) / z + 2.0 * x * (harmonic(z - 1) - harmonic(x) - (z - 1.0 - x) / z);
  };
  CHECK(expected_hitting_time(1, 100, r) == doctest::Approx(oracle(1, 100)));
  CHECK(expected_hitting_time(99, 100, r) == doctest::Approx(oracle(99, 100)));
  // From z-1 every site below is visited 2/z times per unit rate.
  CHECK(expected_hitting_time(99, 100, r) == doctest::Approx(1.98));
  CHECK_THROWS(expected_hitting_time(0, 100, r));
  CHECK_THROWS(expected_hitting_time(100, 100, r));
}

TEST_CASE("simulation agrees with the exact mean") {
  const auto r = RateFunction::linear();
  const auto est = simulate_hitting(10, 100, r, 20000, 3);
  const double exact = expected_hitting_time(10, 100, r);
  CHECK(std::abs(est.mean_time - exact) <= 3 * est.time_se);
  CHECK(std::abs(est.hit_top - 0.1) <= 3 * est.hit_top_se);
  const auto threaded = simulate_hitting(10, 100, r, 20000, 3, 2);
  CHECK(threaded.mean_time == est.mean_time);
}

TEST_CASE("rate parsing") {
  CHECK(RateFunction::parse("linear").kind() == RateFunction::Kind::linear);
  CHECK(RateFunction::parse("constant:2")(5) == 2.0);
  CHECK(RateFunction::parse("power:2")(3) == doctest::Approx(9.0));
  CHECK_THROWS(RateFunction::parse("power"));
  CHECK_THROWS(RateFunction::parse("cubic"));
  CHECK_THROWS(RateFunction::constant(0.0).validate(10));
  CHECK_THROWS(RateFunction::table({1.0, 2.0})(3));
}

TEST_CASE("voter flip rate of a configuration") {
  const TorusLattice lat(5, nearest_neighbor_offsets());
  Configuration single(lat);
  single.set(0, true);
  CHECK(total_voter_rate(single) == doctest::Approx(2.0));
  CHECK(total_voter_rate(Configuration(lat, true)) == 0.0);

  Engine rng(4);
  Configuration c(lat);
  for (Site s = 0; s < lat.size(); s += 2) c.set(s, true);
  const auto profile = voter_rate_profile(c, 20.0, rng);
  CHECK(profile.up_moves + profile.down_moves > 0);
  for (const auto& [j, rate] : profile.mean_rate) CHECK(rate > 0.0);
  std::ostringstream os;
  write_rate_profile_csv(os, profile);
  CHECK_FALSE(os.str().empty());
  CHECK_THROWS(voter_rate_profile(Configuration(lat), 1.0, rng));
}
