#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "qvoter/lattice.hpp"
#include "qvoter/rng.hpp"

namespace qvoter {

/// Jump rate r(j) of a birth-death chain on {0, ..., z}.
class RateFunction {
 public:
  enum class Kind { constant, linear, power, table };

  static RateFunction constant(double c);
  static RateFunction linear();
  static RateFunction power(double p);
  /// values[j-1] = r(j) for j = 1..values.size().
  static RateFunction table(std::vector<double> values);
  /// "constant:c", "linear", "power:p"; throws std::invalid_argument.
  static RateFunction parse(const std::string& text);

  Kind kind() const { return kind_; }
  double operator()(std::int64_t j) const;
  /// Throws std::invalid_argument unless r > 0 on [1, z].
  void validate(std::int64_t z) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::constant;
  double param_ = 1.0;
  std::vector<double> table_;
};

/// E_x T for the chain absorbed at 0 and z, by direct summation of
///   sum_{y<=x} 2y/r(y) + sum_{y=x+1}^{z} 2x/r(y) - sum_{y=1}^{z} 2xy/(z r(y)).
/// Throws unless 0 < x < z.
double expected_hitting_time(std::int64_t x, std::int64_t z, const RateFunction& r);

/// Expected time spent at y starting from x: G0(x, y) / r(y) with
/// G0(x, y) = 2x(z-y)/z for x <= y and 2(z-x)y/z for x >= y.
double green_function(std::int64_t x, std::int64_t y, std::int64_t z, const RateFunction& r);

struct HittingEstimate {
  double mean_time = 0.0;
  double time_se = 0.0;
  double hit_top = 0.0;
  double hit_top_se = 0.0;
  std::size_t replicates = 0;
};

/// Simulates the chain: Exp(r(j)) holding times, +-1 moves with probability
/// 1/2 each, absorbed at 0 and z.
HittingEstimate simulate_hitting(std::int64_t x, std::int64_t z, const RateFunction& r,
                                 std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

/// Total pure-voter flip rate sum_x f_x. For symmetric neighborhoods this is
/// 2 |boundary| / k.
double total_voter_rate(const Configuration& config);

struct RateProfile {
  /// Ones count j -> time-weighted mean total flip rate while at j.
  std::map<std::uint64_t, double> mean_rate;
  std::map<std::uint64_t, double> occupation;
  std::uint64_t up_moves = 0;
  std::uint64_t down_moves = 0;
};

/// Pure voter run from `initial` for time t_max recording the total flip
/// rate against the ones count. Throws for an absorbed initial state.
RateProfile voter_rate_profile(const Configuration& initial, double t_max, Engine& rng);

void write_rate_profile_csv(std::ostream& out, const RateProfile& profile);

}  // namespace qvoter
