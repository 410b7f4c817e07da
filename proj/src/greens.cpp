#include "qvoter/greens.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qvoter/csv.hpp"
#include "qvoter/dynamics.hpp"
#include "qvoter/parallel.hpp"

namespace qvoter {

RateFunction RateFunction::constant(double c) {
  RateFunction r;
  r.kind_ = Kind::constant;
  r.param_ = c;
  return r;
}

RateFunction RateFunction::linear() {
  RateFunction r;
  r.kind_ = Kind::linear;
  return r;
}

RateFunction RateFunction::power(double p) {
  RateFunction r;
  r.kind_ = Kind::power;
  r.param_ = p;
  return r;
}

RateFunction RateFunction::table(std::vector<double> values) {
  RateFunction r;
  r.kind_ = Kind::table;
  r.table_ = std::move(values);
  return r;
}

RateFunction RateFunction::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  auto param = [&]() {
    if (colon == std::string::npos) throw std::invalid_argument("rate '" + text + "' needs a parameter");
    std::size_t used = 0;
    const double v = std::stod(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1) throw std::invalid_argument("malformed rate '" + text + "'");
    return v;
  };
  if (name == "linear" && colon == std::string::npos) return linear();
  if (name == "constant") return constant(colon == std::string::npos ? 1.0 : param());
  if (name == "power") return power(param());
  throw std::invalid_argument("unknown rate '" + text + "' (constant[:c], linear, power:p)");
}

double RateFunction::operator()(std::int64_t j) const {
  switch (kind_) {
    case Kind::constant:
      return param_;
    case Kind::linear:
      return static_cast<double>(j);
    case Kind::power:
      return std::pow(static_cast<double>(j), param_);
    case Kind::table:
      if (j < 1 || static_cast<std::size_t>(j) > table_.size()) {
        throw std::out_of_range("rate table has no entry for " + std::to_string(j));
      }
      return table_[static_cast<std::size_t>(j - 1)];
  }
  return 0.0;
}

void RateFunction::validate(std::int64_t z) const {
  for (std::int64_t j = 1; j <= z; ++j) {
    if (!((*this)(j) > 0.0)) throw std::invalid_argument("rate must be positive at j=" + std::to_string(j));
  }
}

std::string RateFunction::describe() const {
  switch (kind_) {
    case Kind::constant:
      return "constant:" + format_real(param_);
    case Kind::linear:
      return "linear";
    case Kind::power:
      return "power:" + format_real(param_);
    case Kind::table:
      return "table[" + std::to_string(table_.size()) + "]";
  }
  return {};
}

namespace {

void check_range(std::int64_t x, std::int64_t z) {
  if (x <= 0 || x >= z) throw std::invalid_argument("need 0 < x < z");
}

}  // namespace

double expected_hitting_time(std::int64_t x, std::int64_t z, const RateFunction& r) {
  check_range(x, z);
  r.validate(z);
  double below = 0.0;
  double above = 0.0;
  double correction = 0.0;
  for (std::int64_t y = 1; y <= z; ++y) {
    const double inv = 1.0 / r(y);
    if (y <= x) {
      below += 2.0 * static_cast<double>(y) * inv;
    } else {
      above += 2.0 * static_cast<double>(x) * inv;
    }
    correction += 2.0 * static_cast<double>(x) * static_cast<double>(y) / static_cast<double>(z) * inv;
  }
  return below + above - correction;
}

double green_function(std::int64_t x, std::int64_t y, std::int64_t z, const RateFunction& r) {
  check_range(x, z);
  if (y <= 0 || y >= z) return 0.0;
  const double zd = static_cast<double>(z);
  const double g0 = x <= y ? 2.0 * static_cast<double>(x) * static_cast<double>(z - y) / zd
                           : 2.0 * static_cast<double>(z - x) * static_cast<double>(y) / zd;
  return g0 / r(y);
}

namespace {

struct HitBlock {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t top = 0;
  std::uint64_t count = 0;
};

}  // namespace

HittingEstimate simulate_hitting(std::int64_t x, std::int64_t z, const RateFunction& r,
                                 std::size_t replicates, std::uint64_t seed, unsigned threads) {
  check_range(x, z);
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  r.validate(z);
  std::vector<double> inv(static_cast<std::size_t>(z) + 1, 0.0);
  for (std::int64_t j = 1; j < z; ++j) inv[static_cast<std::size_t>(j)] = 1.0 / r(j);

  constexpr std::size_t kBlocks = 64;
  const std::size_t blocks = std::min(kBlocks, replicates);
  auto parts = run_replicas(blocks, threads, [&](std::size_t block) {
    Engine rng = make_stream(seed, block);
    const std::size_t lo = replicates * block / blocks;
    const std::size_t hi = replicates * (block + 1) / blocks;
    HitBlock b;
    for (std::size_t i = lo; i < hi; ++i) {
      std::int64_t j = x;
      double t = 0.0;
      while (j > 0 && j < z) {
        const std::uint64_t bits = rng();
        // 53 bits for the holding time, the lowest bit for the direction.
        const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
        t += -std::log1p(-u) * inv[static_cast<std::size_t>(j)];
        j += (bits & 1U) ? 1 : -1;
      }
      b.sum += t;
      b.sum_sq += t * t;
      if (j == z) ++b.top;
      ++b.count;
    }
    return b;
  });
  HitBlock total;
  for (const auto& b : parts) {
    total.sum += b.sum;
    total.sum_sq += b.sum_sq;
    total.top += b.top;
    total.count += b.count;
  }
  const double n = static_cast<double>(total.count);
  HittingEstimate est;
  est.replicates = total.count;
  est.mean_time = total.sum / n;
  if (total.count > 1) {
    const double var = std::max(total.sum_sq - n * est.mean_time * est.mean_time, 0.0) / (n - 1.0);
    est.time_se = std::sqrt(var / n);
  }
  est.hit_top = static_cast<double>(total.top) / n;
  est.hit_top_se = std::sqrt(est.hit_top * (1.0 - est.hit_top) / n);
  return est;
}

double total_voter_rate(const Configuration& config) {
  const int k = config.lattice().k();
  std::uint64_t sum = 0;
  for (Site s = 0; s < config.size(); ++s) sum += static_cast<std::uint64_t>(discordant_count(config, s));
  return static_cast<double>(sum) / k;
}

RateProfile voter_rate_profile(const Configuration& initial, double t_max, Engine& rng) {
  if (initial.ones() == 0 || initial.ones() == initial.size()) {
    throw std::invalid_argument("rate profile needs a non-absorbed initial state");
  }
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  Simulator sim(initial, QVoterParams::voter());
  RateProfile profile;
  std::map<std::uint64_t, double> weighted;
  double last = 0.0;
  while (true) {
    const std::uint64_t j = sim.state().ones();
    const double rate = sim.total_rate();
    const bool moved = sim.step(rng, t_max);
    const double dt = sim.time() - last;
    last = sim.time();
    weighted[j] += rate * dt;
    profile.occupation[j] += dt;
    if (!moved) break;
    if (sim.state().ones() > j) {
      ++profile.up_moves;
    } else {
      ++profile.down_moves;
    }
  }
  for (const auto& [j, w] : weighted) {
    const double occ = profile.occupation[j];
    if (occ > 0.0) profile.mean_rate[j] = w / occ;
  }
  return profile;
}

void write_rate_profile_csv(std::ostream& out, const RateProfile& profile) {
  CsvWriter csv(out);
  csv.header({"ones", "occupation", "mean_rate"});
  for (const auto& [j, rate] : profile.mean_rate) {
    csv.field(j).field(profile.occupation.at(j)).field(rate);
    csv.end_row();
  }
}

}  // namespace qvoter
