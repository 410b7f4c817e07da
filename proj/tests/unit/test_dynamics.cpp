#include <cmath>
#include <sstream>

#include "doctest.h"
#include "qvoter/dynamics.hpp"
#include "qvoter/parallel.hpp"
#include "qvoter/reaction.hpp"
#include "qvoter/statistics.hpp"

using namespace qvoter;

namespace {

Configuration with_opposite(const TorusLattice& lat, Site x, int opposite) {
  Configuration c(lat);
  const auto nb = lat.neighbors(x);
  for (int i = 0; i < opposite; ++i) c.set(nb[static_cast<std::size_t>(i)], true);
  return c;
}

}  // namespace

TEST_CASE("flip rate in direct mode") {
  const TorusLattice lat(4, nearest_neighbor_offsets());
  for (double q : {0.5, 1.0, 2.0}) {
    CHECK(flip_rate(with_opposite(lat, 0, 0), 0, QVoterParams::direct(q)) == 0.0);
    CHECK(flip_rate(with_opposite(lat, 0, 6), 0, QVoterParams::direct(q)) == 1.0);
  }
  CHECK(flip_rate(with_opposite(lat, 0, 3), 0, QVoterParams::direct(2.0)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS(QVoterParams::direct(0.0));
}

TEST_CASE("flip rate in perturbation mode") {
  const TorusLattice lat(4, nearest_neighbor_offsets());
  const RateTable rates = perturbation_rates(6, Regime::q_below_one);
  const auto params = QVoterParams::perturbation(0.01, rates);
  for (int n = 0; n <= 6; ++n) {
    const double expect = n == 0 ? 0.0 : n / 6.0 + 0.01 * rates[n];
    CHECK(flip_rate(with_opposite(lat, 0, n), 0, params) == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("perturbation validation rejects negative rates") {
  const RateTable rates = perturbation_rates(6, Regime::q_above_one);
  CHECK_THROWS_AS(QVoterParams::perturbation(5.0, rates), std::invalid_argument);
  const auto ok = QVoterParams::perturbation(0.1, rates);
  CHECK(ok.rate(1, 6) > 0.0);
  CHECK_THROWS(RateTable(3, {0.1, 0.2, 0.3, 0.0}));
}

TEST_CASE("absorbing states produce no events") {
  const TorusLattice lat(6, nearest_neighbor_offsets());
  Engine rng(1);
  for (bool v : {false, true}) {
    const Trajectory t = run(Configuration(lat, v), QVoterParams::direct(0.9), 10.0, rng, 1.0);
    CHECK(t.total_events == 0);
    for (double d : t.densities) CHECK(d == (v ? 1.0 : 0.0));
    CHECK(t.absorbed);
  }
}

TEST_CASE("trajectory sampling grid") {
  const TorusLattice lat(6, nearest_neighbor_offsets());
  Engine rng(2);
  Configuration c(lat);
  set_product_measure(c, 0.5, rng);
  const Trajectory t = run(c, QVoterParams::direct(0.9), 5.0, rng, 1.0);
  REQUIRE(t.times.size() == 6);
  for (std::size_t i = 1; i < t.times.size(); ++i) CHECK(t.times[i] > t.times[i - 1]);
  CHECK(t.times.back() == 5.0);
  for (double d : t.densities) CHECK((d >= 0.0 && d <= 1.0));
  const Trajectory near = run(c, QVoterParams::direct(0.9), 50.0 / (1.0 - 0.9), rng, 1.0);
  CHECK(near.times.size() == 501);

  std::ostringstream os;
  write_trajectory_csv(os, t);
  CHECK(os.str().rfind("time,density,events\n0,", 0) == 0);
}

TEST_CASE("simulator total rate and active set stay consistent") {
  const TorusLattice lat(5, nearest_neighbor_offsets());
  Engine rng(9);
  Configuration c(lat);
  set_product_measure(c, 0.4, rng);
  const auto params = QVoterParams::direct(0.7);
  Simulator sim(c, params);
  for (int i = 0; i < 3000 && !sim.absorbed(); ++i) {
    sim.step(rng, 1e9);
    double direct = 0.0;
    std::size_t active = 0;
    for (Site s = 0; s < lat.size(); ++s) {
      direct += flip_rate(sim.state(), s, params);
      REQUIRE(sim.disagreeing(s) == discordant_count(sim.state(), s));
      if (discordant_count(sim.state(), s) > 0) ++active;
    }
    REQUIRE(sim.total_rate() == doctest::Approx(direct).epsilon(1e-9));
    REQUIRE(sim.active_count() == active);
    REQUIRE(sim.state().ones() == sim.state().count_ones());
  }
}

TEST_CASE("set_product_measure") {
  const TorusLattice lat(20, nearest_neighbor_offsets());
  Engine rng(4);
  Configuration c(lat);
  set_product_measure(c, 0.0, rng);
  CHECK(c.ones() == 0);
  set_product_measure(c, 1.0, rng);
  CHECK(c.ones() == lat.size());
  set_product_measure(c, 0.3, rng);
  const double sigma = std::sqrt(8000 * 0.21);
  CHECK(std::abs(static_cast<double>(c.ones()) - 2400.0) <= 3 * sigma);
  CHECK_THROWS(set_product_measure(c, 1.5, rng));
}

TEST_CASE("pure voter density is a martingale") {
  const TorusLattice lat(8, nearest_neighbor_offsets());
  const std::size_t reps = 200;
  const auto finals = run_replicas(reps, 1, [&](std::size_t i) {
    Engine rng = make_stream(77, i);
    Configuration c(lat);
    set_product_measure(c, 0.3, rng);
    const double start = c.density();
    return run(c, QVoterParams::voter(), 20.0, rng, 20.0).densities.back() - start;
  });
  double mean = 0.0;
  for (double d : finals) mean += d;
  mean /= static_cast<double>(reps);
  const double sd = std::sqrt(sample_variance(finals));
  CHECK(std::abs(mean) <= 4 * sd / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("relabeling symmetry of the law of the density") {
  const TorusLattice lat(6, nearest_neighbor_offsets());
  const std::size_t reps = 300;
  auto ensemble = [&](double u0, bool mirror) {
    return run_replicas(reps, 1, [&](std::size_t i) {
      Engine rng = make_stream(mirror ? 5 : 6, i);
      Configuration c(lat);
      set_product_measure(c, u0, rng);
      const double d = run(c, QVoterParams::direct(0.8), 10.0, rng, 10.0).densities.back();
      return mirror ? 1.0 - d : d;
    });
  };
  const auto a = ensemble(0.3, false);
  const auto b = ensemble(0.7, true);
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < reps; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= reps;
  mb /= reps;
  const double se = std::sqrt((sample_variance(a) + sample_variance(b)) / reps);
  CHECK(std::abs(ma - mb) <= 4 * se);
}

TEST_CASE("event count is at most n t on average") {
  const TorusLattice lat(6, nearest_neighbor_offsets());
  Engine rng(12);
  double events = 0.0;
  const int reps = 50;
  for (int i = 0; i < reps; ++i) {
    Configuration c(lat);
    set_product_measure(c, 0.5, rng);
    events += static_cast<double>(run(c, QVoterParams::direct(0.5), 2.0, rng, 1.0).total_events);
  }
  CHECK(events / reps <= 216.0 * 2.0);
}

TEST_CASE("q < 1 holds the density near one half more than the voter model") {
  const TorusLattice lat(20, nearest_neighbor_offsets());
  auto occupancy = [&](const QVoterParams& p, std::uint64_t seed) {
    const auto occ = run_replicas(4, 1, [&](std::size_t i) {
      Engine rng = make_stream(seed, i);
      Configuration c(lat);
      set_product_measure(c, 0.5, rng);
      const Trajectory t = run(c, p, 200.0, rng, 1.0);
      double in = 0.0;
      for (double d : t.densities) in += std::abs(d - 0.5) <= 0.05 ? 1.0 : 0.0;
      return in / static_cast<double>(t.densities.size());
    });
    double m = 0.0;
    for (double o : occ) m += o;
    return m / 4.0;
  };
  const double q09 = occupancy(QVoterParams::direct(0.9), 1);
  const double voter = occupancy(QVoterParams::voter(), 1);
  CHECK(q09 >= voter);
  CHECK(q09 > 0.9);
}

TEST_CASE("windowed coupling") {
  const TorusLattice lat(10, nearest_neighbor_offsets());
  Engine rng(21);
  Configuration c(lat);
  set_product_measure(c, 0.5, rng);
  SUBCASE("empty window") {
    const auto r = run_windowed_voter(c, QVoterParams::direct(0.9), 5.0, 2.0, 2.0, rng, 1.0);
    CHECK(r.discrepancy == 0);
    CHECK(r.perturbed.densities == r.windowed.densities);
  }
  SUBCASE("q = 1") {
    const auto r = run_windowed_voter(c, QVoterParams::voter(), 5.0, 0.0, 5.0, rng, 1.0);
    CHECK(r.discrepancy == 0);
  }
  SUBCASE("malformed window") {
    CHECK_THROWS(run_windowed_voter(c, QVoterParams::voter(), 5.0, 3.0, 2.0, rng, 1.0));
    CHECK_THROWS(run_windowed_voter(c, QVoterParams::voter(), 5.0, 0.0, 6.0, rng, 1.0));
  }
  SUBCASE("discrepancy grows with the window and stays small") {
    auto mean_disc = [&](double len) {
      double sum = 0.0;
      for (std::uint64_t i = 0; i < 40; ++i) {
        Engine r = make_stream(99, i);
        sum += static_cast<double>(
            run_windowed_voter(c, QVoterParams::direct(0.9), 2.0, 0.0, len, r, 1.0).discrepancy);
      }
      return sum / 40.0;
    };
    const double short_w = mean_disc(0.2);
    const double long_w = mean_disc(2.0);
    CHECK(long_w > short_w);
    CHECK(short_w < 0.05 * lat.size());
  }
}
