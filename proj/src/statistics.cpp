#include "qvoter/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>

#include "qvoter/csv.hpp"
#include "qvoter/equilibrium.hpp"
#include "qvoter/parallel.hpp"

namespace qvoter {

BoxSumSample box_sums(const Configuration& config, int r, double lambda) {
  const int side = config.lattice().side();
  if (r < 1 || side % r != 0) throw std::invalid_argument("r must divide L");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0,1)");
  const int m = side / r;
  BoxSumSample s;
  s.r = r;
  s.lambda = lambda;
  s.ones.assign(static_cast<std::size_t>(m) * m * m, 0);
  const TorusLattice& lat = config.lattice();
  for (int z = 0; z < side; ++z) {
    for (int y = 0; y < side; ++y) {
      const std::size_t row = static_cast<std::size_t>(z / r) * m * m + static_cast<std::size_t>(y / r) * m;
      const Site base = lat.index({0, y, z});
      for (int x = 0; x < side; ++x) {
        if (config.get(base + static_cast<Site>(x))) ++s.ones[row + static_cast<std::size_t>(x / r)];
      }
    }
  }
  const double volume = static_cast<double>(r) * r * r;
  const double norm = 1.0 / (std::sqrt(lambda * (1.0 - lambda)) * std::pow(r, 2.5));
  s.raw.reserve(s.ones.size());
  s.values.reserve(s.ones.size());
  for (auto c : s.ones) {
    const double raw = static_cast<double>(c) - lambda * volume;
    s.raw.push_back(raw);
    s.values.push_back(norm * raw);
  }
  return s;
}

void write_box_sums_csv(std::ostream& out, std::span<const BoxSumSample> samples) {
  CsvWriter csv(out);
  csv.header({"r", "cube_index", "value"});
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      csv.field(s.r).field(static_cast<std::uint64_t>(i)).field(s.values[i]);
      csv.end_row();
    }
  }
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance needs at least two values");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

double kurtosis(std::span<const double> xs) {
  if (xs.size() < 4) throw std::invalid_argument("kurtosis needs at least four values");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d2 = (x - mean) * (x - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(xs.size());
  m4 /= static_cast<double>(xs.size());
  if (m2 == 0.0) throw std::invalid_argument("kurtosis of a constant sample");
  return m4 / (m2 * m2);
}

VarianceFit variance_exponent(std::span<const ScaleSample> scales) {
  std::set<int> distinct;
  for (const auto& s : scales) distinct.insert(s.r);
  if (distinct.size() < 3) throw std::invalid_argument("variance fit needs at least three r values");
  VarianceFit fit;
  for (const auto& s : scales) {
    const double v = sample_variance(s.sums);
    if (!(v > 0.0)) {
      throw std::invalid_argument("zero box-sum variance at r=" + std::to_string(s.r));
    }
    fit.log_r.push_back(std::log(static_cast<double>(s.r)));
    fit.log_var.push_back(std::log(v));
  }
  const auto n = static_cast<double>(fit.log_r.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < fit.log_r.size(); ++i) {
    mx += fit.log_r[i];
    my += fit.log_var[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < fit.log_r.size(); ++i) {
    sxx += (fit.log_r[i] - mx) * (fit.log_r[i] - mx);
    sxy += (fit.log_r[i] - mx) * (fit.log_var[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < fit.log_r.size(); ++i) {
    const double e = fit.log_var[i] - fit.intercept - fit.slope * fit.log_r[i];
    sse += e * e;
  }
  fit.slope_se = fit.log_r.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return fit;
}

BoundaryStats boundary_stats(const Configuration& config) {
  const TorusLattice& lat = config.lattice();
  if (!lat.symmetric()) throw std::invalid_argument("boundary needs a symmetric neighborhood");
  std::uint64_t twice = 0;
  for (Site s = 0; s < config.size(); ++s) twice += static_cast<std::uint64_t>(discordant_count(config, s));
  BoundaryStats b;
  b.size = twice / 2;
  b.ones = config.ones();
  b.ratio = b.ones ? static_cast<double>(b.size) / static_cast<double>(b.ones) : 0.0;
  return b;
}

double boundary_lower_bound(std::uint64_t ones) {
  return kBoundaryLowerConstant * std::cbrt(static_cast<double>(ones));
}

std::uint64_t boundary_upper_bound(const Configuration& config) {
  const std::uint64_t ones = config.ones();
  return static_cast<std::uint64_t>(config.lattice().k()) * std::min<std::uint64_t>(ones, config.size() - ones);
}

std::vector<ExtinctionSample> extinction_ensemble(const TorusLattice& lattice,
                                                  const QVoterParams& params, double u0,
                                                  std::size_t replicates, double t_max,
                                                  std::uint64_t seed, unsigned threads) {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  return run_replicas(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(seed, i);
    Configuration config(lattice);
    set_product_measure(config, u0, rng);
    Simulator sim(std::move(config), params);
    while (sim.step(rng, t_max)) {
    }
    ExtinctionSample s;
    s.absorbed = sim.absorbed();
    s.time = sim.time();
    s.final_density = sim.state().density();
    s.fixed_at_one = s.absorbed && sim.state().ones() == sim.state().size();
    s.events = sim.events();
    return s;
  });
}

void write_extinction_csv(std::ostream& out, std::span<const ExtinctionSample> samples) {
  CsvWriter csv(out);
  csv.header({"replicate", "time", "censored", "fixed_at_one", "final_density", "events"});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    csv.field(static_cast<std::uint64_t>(i))
        .field(s.time)
        .field(s.absorbed ? 0 : 1)
        .field(s.fixed_at_one ? 1 : 0)
        .field(s.final_density)
        .field(s.events);
    csv.end_row();
  }
}

ProportionEstimate non_coalescence_probability(std::span<const Vec3> offsets, double t,
                                               std::uint64_t replicates, std::uint64_t seed,
                                               unsigned threads) {
  if (offsets.empty()) throw std::invalid_argument("need offsets");
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  const std::vector<Vec3> starts{Vec3{0, 0, 0}, offsets[0]};
  constexpr std::size_t kBlocks = 64;
  const std::size_t blocks = std::min<std::uint64_t>(kBlocks, replicates);
  const auto apart = run_replicas(blocks, threads, [&](std::size_t block) {
    Engine rng = make_stream(seed, block);
    const std::uint64_t lo = replicates * block / blocks;
    const std::uint64_t hi = replicates * (block + 1) / blocks;
    std::uint64_t count = 0;
    for (std::uint64_t i = lo; i < hi; ++i) {
      const auto roots = coalesce_on_z3(starts, offsets, t, rng);
      if (roots[0] != roots[1]) ++count;
    }
    return count;
  });
  ProportionEstimate est;
  est.trials = replicates;
  std::uint64_t total = 0;
  for (auto c : apart) total += c;
  const double n = static_cast<double>(replicates);
  est.p = static_cast<double>(total) / n;
  est.se = std::sqrt(est.p * (1.0 - est.p) / n);
  return est;
}

RatioEstimate boundary_ratio(const TorusLattice& lattice, double u, double burn_time,
                             std::size_t replicates, std::uint64_t seed, unsigned threads) {
  const auto ratios = run_replicas(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(seed, i);
    const Configuration config = sample_nu_u(lattice, u, burn_time, rng);
    const BoundaryStats b = boundary_stats(config);
    return b.ones == 0 || b.ones == config.size() ? -1.0 : b.ratio;
  });
  std::vector<double> kept;
  for (double r : ratios) {
    if (r >= 0.0) kept.push_back(r);
  }
  RatioEstimate est;
  est.samples = kept.size();
  if (kept.empty()) return est;
  for (double r : kept) est.mean += r;
  est.mean /= static_cast<double>(kept.size());
  if (kept.size() > 1) est.se = std::sqrt(sample_variance(kept) / static_cast<double>(kept.size()));
  return est;
}

double poisson_tail(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  return std::exp(-(2.0 * std::log(2.0) - 1.0) * lambda);
}

double poisson_tail_frequency(double lambda, std::uint64_t draws, Engine& rng) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (draws < 1) throw std::invalid_argument("need at least one draw");
  std::poisson_distribution<std::int64_t> poisson(lambda);
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < draws; ++i) {
    if (static_cast<double>(poisson(rng)) >= 2.0 * lambda) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

}  // namespace qvoter
