#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "qvoter/equilibrium.hpp"
#include "qvoter/statistics.hpp"

using namespace qvoter;

TEST_CASE("fate signature text form") {
  const auto s = FateSignature::parse("0;2,1");
  CHECK(s.s0 == 0);
  CHECK(s.clusters == std::vector<int>{1, 2});
  CHECK(s.to_string() == "0;1,2");
  CHECK(s.k() == 3);
  CHECK(FateSignature::parse("3;0").to_string() == "3;0");
  CHECK(FateSignature::parse("3;0").j() == 0);
  CHECK_THROWS(FateSignature::parse("x;1"));
  CHECK_THROWS(FateSignature::parse("1"));
}

TEST_CASE("k = 3 has exactly seven signatures") {
  const auto sigs = enumerate_signatures(3);
  std::set<std::string> names;
  for (const auto& s : sigs) names.insert(s.to_string());
  CHECK(names == std::set<std::string>{"0;3", "1;2", "2;1", "3;0", "0;1,2", "1;1,1", "0;1,1,1"});
}

TEST_CASE("signature counts are sums of partition numbers") {
  // sum_{s=0}^{k} p(k - s) with p the partition function.
  const int partitions[] = {1, 1, 2, 3, 5, 7, 11, 15, 22};
  for (int k = 1; k <= 8; ++k) {
    int expect = 0;
    for (int s = 0; s <= k; ++s) expect += partitions[k - s];
    CHECK(static_cast<int>(enumerate_signatures(k).size()) == expect);
  }
}

TEST_CASE("classify partitions") {
  CHECK(classify_partition(std::vector<int>{0, 0, 2, 2}).to_string() == "1;2");
  CHECK(classify_partition(std::vector<int>{0, 1, 2, 3}).to_string() == "0;1,1,1");
  CHECK(classify_partition(std::vector<int>{3, 3, 3, 3}).to_string() == "3;0");
  CHECK(classify_partition(std::vector<int>{0, 1, 1, 3}).to_string() == "0;1,2");
}

TEST_CASE("t_trunc = 0 gives the fully discrete fate") {
  const auto d = coalescence_fates(positive_axis_offsets(), 0.0, 500, 1);
  CHECK(d.probability(FateSignature::parse("0;1,1,1")) == 1);
  CHECK(d.normalized());
}

TEST_CASE("coalescing walks") {
  Engine rng(3);
  const std::vector<Vec3> starts{{0, 0, 0}, {1, 0, 0}};
  SUBCASE("zero time keeps labels apart") {
    const auto roots = coalesce_on_z3(starts, nearest_neighbor_offsets(), 0.0, rng);
    CHECK(roots == std::vector<int>{0, 1});
  }
  SUBCASE("a shared start is already merged") {
    const std::vector<Vec3> same{{0, 0, 0}, {0, 0, 0}};
    const auto roots = coalesce_on_z3(same, nearest_neighbor_offsets(), 0.0, rng);
    CHECK(roots[0] == roots[1]);
  }
  SUBCASE("adjacent walkers meet with the textbook probability") {
    // Two nearest-neighbor walks from adjacent sites meet with probability
    // 1 - 1/G(0) where the return probability of the simple walk is 0.3405.
    int met = 0;
    const int reps = 20000;
    for (int i = 0; i < reps; ++i) {
      const auto roots = coalesce_on_z3(starts, nearest_neighbor_offsets(), 2000.0, rng);
      met += roots[0] == roots[1] ? 1 : 0;
    }
    const double p = static_cast<double>(met) / reps;
    const double se = std::sqrt(p * (1 - p) / reps);
    // Finite horizon leaves a t^{-1/2} tail of order 0.01.
    CHECK(p <= 0.3405 + 3 * se);
    CHECK(p >= 0.3405 - 0.02);
  }
}

TEST_CASE("fates do not depend on the thread count") {
  const auto a = coalescence_fates(positive_axis_offsets(), 100.0, 3000, 5, 1);
  const auto b = coalescence_fates(positive_axis_offsets(), 100.0, 3000, 5, 3);
  CHECK(a.probabilities() == b.probabilities());
  CHECK(a.samples() == 3000);
}

TEST_CASE("fully discrete fate is non-increasing in t_trunc") {
  const auto sig = FateSignature::parse("0;1,1,1,1,1,1");
  double prev = 1.0;
  for (double t : {0.0, 1.0, 10.0, 100.0}) {
    const auto d = coalescence_fates(nearest_neighbor_offsets(), t, 20000, 7);
    const double p = to_double(d.probability(sig));
    CHECK(p <= prev + 3 * d.standard_error(sig) + 1e-12);
    prev = p;
  }
}

TEST_CASE("fate CSV round trip keeps exact probabilities") {
  const auto d = coalescence_fates(positive_axis_offsets(), 50.0, 2000, 9);
  std::stringstream ss;
  d.write_csv(ss);
  CHECK(ss.str().rfind("signature,probability,stderr,count\n", 0) == 0);
  const auto back = FateDistribution::read_csv(ss, 50.0);
  CHECK(back.probabilities() == d.probabilities());
  CHECK(back.normalized());

  std::stringstream plain("signature,probability,stderr,count\n3;0,0.25,0,0\n\"0;1,1,1\",0.75,0,0\n");
  const auto exact = FateDistribution::read_csv(plain);
  CHECK(exact.probability(FateSignature::parse("3;0")) == Rational(1, 4));
  CHECK(exact.normalized());
}

TEST_CASE("truncation check compares t and 2t") {
  const auto c = truncation_check(positive_axis_offsets(), 50.0, 2000, 4);
  CHECK(c.t_long == 100.0);
  CHECK_FALSE(c.rows.empty());
}

TEST_CASE("sample_nu_u") {
  const TorusLattice lat(10, nearest_neighbor_offsets());
  Engine rng(6);
  CHECK_THROWS(sample_nu_u(lat, 0.0, 1.0, rng));
  CHECK_THROWS(sample_nu_u(lat, 1.0, 1.0, rng));

  SUBCASE("burn 0 is product measure") {
    const double u = 0.3;
    const Configuration c = sample_nu_u(lat, u, 0.0, rng);
    const double sigma = std::sqrt(1000 * u * (1 - u));
    CHECK(std::abs(static_cast<double>(c.ones()) - 300.0) <= 4 * sigma);
  }

  SUBCASE("adjacent agreement exceeds product measure and the mean is u") {
    const double u = 0.4;
    double agree = 0.0;
    double pairs = 0.0;
    std::vector<double> dens;
    for (int r = 0; r < 30; ++r) {
      const Configuration c = sample_nu_u(lat, u, 20.0, rng);
      dens.push_back(c.density());
      for (Site x = 0; x < lat.size(); ++x) {
        for (Site y : lat.neighbors(x)) {
          agree += c.get(x) == c.get(y) ? 1.0 : 0.0;
          pairs += 1.0;
        }
      }
    }
    CHECK(agree / pairs > u * u + (1 - u) * (1 - u) + 0.05);
    double m = 0.0;
    for (double d : dens) m += d;
    m /= static_cast<double>(dens.size());
    CHECK(std::abs(m - u) <= 3 * std::sqrt(sample_variance(dens) / static_cast<double>(dens.size())));
  }
}

TEST_CASE("rho polynomials for k = 3 match the closed form") {
  std::map<FateSignature, Rational> p;
  p[FateSignature::parse("0;3")] = Rational(1, 20);
  p[FateSignature::parse("1;2")] = Rational(2, 20);
  p[FateSignature::parse("2;1")] = Rational(3, 20);
  p[FateSignature::parse("3;0")] = Rational(1, 20);
  p[FateSignature::parse("0;1,2")] = Rational(4, 20);
  p[FateSignature::parse("1;1,1")] = Rational(2, 20);
  p[FateSignature::parse("0;1,1,1")] = Rational(7, 20);
  const auto fates = FateDistribution::from_probabilities(3, p);
  const auto rho = rho_polynomials(fates);

  const auto u = Polynomial<Rational>::u();
  const Polynomial<Rational> one(std::vector<Rational>{1});
  const auto v = one - u;
  const Rational p21 = p[FateSignature::parse("2;1")];
  const Rational p111 = p[FateSignature::parse("1;1,1")];
  const Rational p021 = p[FateSignature::parse("0;1,2")];
  const Rational p0111 = p[FateSignature::parse("0;1,1,1")];
  const auto q1 = u * p21 + u * v * (2 * p111 + p021) + u * v * v * (3 * p0111);
  CHECK(rho.q[1] == q1);

  // Total probability that the origin is 0.
  Polynomial<Rational> total;
  for (const auto& r : rho.rho0) total += r;
  CHECK(total == v);

  for (std::size_t m = 1; m < rho.rho0.size(); ++m) {
    CHECK(rho.rho0[m](Rational(0)) == 0);
    CHECK(rho.rho1[m] == u * rho.q[m].reflect());
    CHECK(rho.rho1[m].reflect() == rho.rho0[m]);
  }
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    for (std::size_t m = 0; m < rho.rho0.size(); ++m) {
      REQUIRE(rho.rho0[m].eval(x) >= -1e-15);
      REQUIRE(rho.rho0[m].eval(x) <= 1.0 + 1e-15);
    }
  }

  std::map<FateSignature, Rational> bad = p;
  bad[FateSignature::parse("3;0")] += 1;
  CHECK_THROWS(rho_polynomials(FateDistribution::from_probabilities(3, bad)));
}
