#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "qvoter/duality.hpp"

using namespace qvoter;

namespace {

Configuration random_config(const TorusLattice& lat, double u, Engine& rng) {
  Configuration c(lat);
  for (Site s = 0; s < lat.size(); ++s) c.set(s, uniform01(rng) < u);
  return c;
}

}  // namespace

TEST_CASE("graphical representation basics") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(1);
  CHECK_THROWS(build_graphical_rep(lat, 0.0, rng));
  CHECK_THROWS(build_graphical_rep(lat, 1.0, rng, BranchingRule{-0.1}));
  CHECK_THROWS(build_graphical_rep(lat, 1.0, rng, BranchingRule{2.0}));

  const auto rep = build_graphical_rep(lat, 1e-9, rng);
  CHECK(rep.events().empty());

  const auto big = build_graphical_rep(lat, 2.0, rng);
  for (std::size_t i = 1; i < big.events().size(); ++i) {
    REQUIRE(big.events()[i].time >= big.events()[i - 1].time);
  }
  CHECK(big.branching_event_count() == 0);
}

TEST_CASE("expected voter event count is n T") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(2);
  double total = 0.0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) total += static_cast<double>(build_graphical_rep(lat, 2.0, rng).voter_event_count());
  const double mean = total / reps;
  const double sd = std::sqrt(27.0 * 2.0 / reps);
  CHECK(std::abs(mean - 54.0) <= 4 * sd);
}

TEST_CASE("per-pair counts fit Poisson(T/k)") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(3);
  const double mu = 2.0 / 6.0;
  // Pair (site 0, offset 0) over 10^4 builds.
  std::map<int, int> hist;
  const int builds = 10000;
  for (int b = 0; b < builds; ++b) {
    const auto rep = build_graphical_rep(lat, 2.0, rng);
    int n = 0;
    for (const auto& e : rep.events()) n += (e.site == 0 && e.kind == 0) ? 1 : 0;
    ++hist[std::min(n, 3)];
  }
  double chi2 = 0.0;
  double tail = 1.0;
  for (int n = 0; n <= 3; ++n) {
    double p = std::exp(-mu) * std::pow(mu, n) / std::tgamma(n + 1.0);
    if (n == 3) p = tail;
    tail -= p;
    const double expect = builds * p;
    chi2 += (hist[n] - expect) * (hist[n] - expect) / expect;
  }
  // 3 degrees of freedom, 0.999 quantile.
  CHECK(chi2 < 16.27);
}

TEST_CASE("forward state") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(4);
  const Configuration xi0 = random_config(lat, 0.5, rng);

  const GraphicalRep empty(lat, 1.0, {}, {});
  CHECK(forward_state(empty, xi0) == xi0);

  const Site x = 5;
  const std::uint16_t off = 2;
  const GraphicalRep one(lat, 1.0, {}, {GraphEvent{0.5, x, off, 0.0}});
  const Configuration out = forward_state(one, xi0);
  for (Site s = 0; s < lat.size(); ++s) {
    if (s == x) {
      CHECK(out.get(s) == xi0.get(lat.neighbors(x)[off]));
    } else {
      CHECK(out.get(s) == xi0.get(s));
    }
  }

  const TorusLattice other(4, nearest_neighbor_offsets());
  CHECK_THROWS(forward_state(one, Configuration(other)));
}

TEST_CASE("monotone coupling and additivity") {
  const TorusLattice lat(4, nearest_neighbor_offsets());
  Engine rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rep = build_graphical_rep(lat, 1.5, rng);
    Configuration low = random_config(lat, 0.3, rng);
    Configuration high = low;
    for (Site s = 0; s < lat.size(); ++s) {
      if (uniform01(rng) < 0.3) high.set(s, true);
    }
    const auto fl = forward_state(rep, low);
    const auto fh = forward_state(rep, high);
    for (Site s = 0; s < lat.size(); ++s) REQUIRE((!fl.get(s) || fh.get(s)));

    const Configuration a = random_config(lat, 0.2, rng);
    const Configuration b = random_config(lat, 0.2, rng);
    Configuration u(lat);
    for (Site s = 0; s < lat.size(); ++s) u.set(s, a.get(s) || b.get(s));
    const auto fa = forward_state(rep, a);
    const auto fb = forward_state(rep, b);
    const auto fu = forward_state(rep, u);
    for (Site s = 0; s < lat.size(); ++s) REQUIRE(fu.get(s) == (fa.get(s) || fb.get(s)));
  }
}

TEST_CASE("dual walkers") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(7);
  const auto rep = build_graphical_rep(lat, 1.0, rng);
  const std::vector<Site> q{0, 4, 13};
  SUBCASE("s_max = 0") {
    auto d = dual_crw(rep, q, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(d.walker(i) == q[i]);
    CHECK(d.partition().set_count() == q.size());
  }
  SUBCASE("errors") {
    CHECK_THROWS(dual_crw(rep, std::vector<Site>{}, 0.5));
    CHECK_THROWS(dual_crw(rep, std::vector<Site>{1, 1}, 0.5));
    CHECK_THROWS(dual_crw(rep, q, 2.0));
  }
  SUBCASE("coalescence is permanent and the count never grows") {
    for (int trial = 0; trial < 100; ++trial) {
      const auto r = build_graphical_rep(lat, 3.0, rng);
      std::vector<Site> all;
      for (Site s = 0; s < lat.size(); ++s) all.push_back(s);
      auto d = dual_crw(r, all, 3.0);
      const auto& hist = d.live_history();
      for (std::size_t i = 1; i < hist.size(); ++i) REQUIRE(hist[i] <= hist[i - 1]);
      for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) {
          if (d.partition().same(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j))) {
            REQUIRE(d.walker(i) == d.walker(j));
          }
        }
      }
    }
  }
}

TEST_CASE("single dual walker jumps uniformly over the offsets") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(8);
  std::vector<std::uint64_t> jumps(6, 0);
  std::uint64_t total = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const auto rep = build_graphical_rep(lat, 2.0, rng);
    const auto d = dual_crw(rep, std::vector<Site>{0}, 2.0);
    for (std::size_t i = 0; i < 6; ++i) {
      jumps[i] += d.jumps_by_offset()[i];
      total += d.jumps_by_offset()[i];
    }
  }
  // Rate 1 jumps for time 2.
  CHECK(std::abs(static_cast<double>(total) / 2000.0 - 2.0) < 0.15);
  double chi2 = 0.0;
  const double expect = static_cast<double>(total) / 6.0;
  for (auto j : jumps) chi2 += (j - expect) * (j - expect) / expect;
  // 5 degrees of freedom, 0.999 quantile.
  CHECK(chi2 < 20.52);
}

TEST_CASE("pathwise duality") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  Engine rng(9);
  std::vector<Site> all;
  for (Site s = 0; s < lat.size(); ++s) all.push_back(s);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rep = build_graphical_rep(lat, 1.0, rng);
    const Configuration xi0 = random_config(lat, 0.5, rng);
    const auto xt = forward_state(rep, xi0);
    const auto d = dual_crw(rep, all, 1.0);
    for (std::size_t i = 0; i < all.size(); ++i) REQUIRE(xt.get(all[i]) == xi0.get(d.walker(i)));
  }
}

TEST_CASE("influence set determines the forward state") {
  const TorusLattice lat(4, nearest_neighbor_offsets());
  Engine rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const auto rep = build_graphical_rep(lat, 1.0, rng, BranchingRule{0.4, 1.0, 0.9});
    const Configuration xi0 = random_config(lat, 0.5, rng);
    const auto xt = forward_state(rep, xi0);
    const std::vector<Site> b{0, 17, 42};
    const auto d = dual_crw(rep, b, 1.0);
    // Only the influence set carries information; scramble everything else.
    Configuration known(lat);
    for (Site s = 0; s < lat.size(); ++s) known.set(s, uniform01(rng) < 0.5);
    for (Site s : d.occupied()) known.set(s, xi0.get(s));
    const auto values = reconstruct_from_influence(rep, d, known);
    for (std::size_t i = 0; i < b.size(); ++i) REQUIRE(values[i] == xt.get(b[i]));
  }
}

TEST_CASE("branching adds at most k walkers per encounter") {
  const TorusLattice lat(4, nearest_neighbor_offsets());
  Engine rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto rep = build_graphical_rep(lat, 1.0, rng, BranchingRule{0.5});
    const auto d = dual_crw(rep, std::vector<Site>{0}, 1.0);
    const auto& hist = d.live_history();
    std::uint32_t prev = 1;
    for (auto h : hist) {
      REQUIRE(h <= prev + 6);
      prev = h;
    }
  }
}

TEST_CASE("duality check at t = 0 and with A = all sites") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  const std::vector<Site> a{0, 1};
  const std::vector<Site> b_meet{1, 5};
  const std::vector<Site> b_miss{13, 14};
  auto e1 = check_duality(lat, a, b_meet, 0.0, 100, 1);
  CHECK(e1.p_forward == 1.0);
  CHECK(e1.p_dual == 1.0);
  auto e0 = check_duality(lat, a, b_miss, 0.0, 100, 1);
  CHECK(e0.p_forward == 0.0);
  CHECK(e0.p_dual == 0.0);
  std::vector<Site> all;
  for (Site s = 0; s < lat.size(); ++s) all.push_back(s);
  auto ea = check_duality(lat, all, b_miss, 1.0, 200, 2);
  CHECK(ea.p_forward == 1.0);
  CHECK(ea.p_dual == 1.0);
  CHECK_THROWS(check_duality(lat, std::vector<Site>{}, b_miss, 1.0, 10, 1));
}

TEST_CASE("duality check result does not depend on threads") {
  const TorusLattice lat(3, nearest_neighbor_offsets());
  const std::vector<Site> a{0, 1};
  const std::vector<Site> b{13, 14};
  const auto one = check_duality(lat, a, b, 1.0, 5000, 3, 1);
  const auto four = check_duality(lat, a, b, 1.0, 5000, 3, 4);
  CHECK(one.p_forward == four.p_forward);
  CHECK(one.p_dual == four.p_dual);
  CHECK(one.agrees());
}

TEST_CASE("gadget table") {
  SUBCASE("linear voter") {
    const auto t = gadget_flip_rates({1, 0, 0, 0});
    for (const auto& row : t.rows) {
      CHECK(row.one_to_zero == row.n);
      CHECK(row.zero_to_one == row.n);
    }
    CHECK_FALSE(t.asymmetric);
  }
  SUBCASE("a2 only") {
    const auto t = gadget_flip_rates({0, 1, 0, 0});
    CHECK(t.rows[1].one_to_zero == 0.0);
    CHECK(t.rows[1].zero_to_one == 3.0);
    CHECK(t.asymmetric);
  }
  SUBCASE("full table") {
    const double a1 = 1.0, a2 = 10.0, a3 = 100.0, a4 = 1000.0;
    const auto t = gadget_flip_rates({a1, a2, a3, a4});
    const double expect[5][2] = {{0, 0},
                                 {a1, a1 + 3 * a2 + 3 * a3 + a4},
                                 {2 * a1 + a2, 2 * a1 + 5 * a2 + 4 * a3 + a4},
                                 {3 * a1 + 3 * a2 + a3, 3 * a1 + 6 * a2 + 4 * a3 + a4},
                                 {4 * a1 + 6 * a2 + 4 * a3 + a4, 4 * a1 + 6 * a2 + 4 * a3 + a4}};
    for (int n = 0; n < 5; ++n) {
      CHECK(t.rows[static_cast<std::size_t>(n)].one_to_zero == expect[n][0]);
      CHECK(t.rows[static_cast<std::size_t>(n)].zero_to_one == expect[n][1]);
    }
  }
  SUBCASE("asymmetry exactly when a2 + a3 + a4 > 0") {
    Engine rng(12);
    for (int i = 0; i < 500; ++i) {
      std::array<double, 4> a{};
      for (auto& v : a) v = uniform01(rng) < 0.5 ? 0.0 : uniform01(rng);
      REQUIRE(gadget_flip_rates(a).asymmetric == (a[1] + a[2] + a[3] > 0.0));
    }
  }
  CHECK_THROWS(gadget_flip_rates({-1, 0, 0, 0}));
}
