#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "qvoter/lattice.hpp"
#include "qvoter/rng.hpp"

namespace qvoter {

/// Perturbation values r_0..r_k indexed by the number of disagreeing
/// neighbors. r_0 must be zero so that both unanimous states are absorbing.
class RateTable {
 public:
  RateTable(int k, std::vector<double> values);

  int k() const { return k_; }
  double operator[](int n) const { return values_.at(static_cast<std::size_t>(n)); }
  const std::vector<double>& values() const { return values_; }

  RateTable negated() const;

  friend bool operator==(const RateTable&, const RateTable&) = default;

 private:
  int k_;
  std::vector<double> values_;
};

enum class UpdateMode { direct_q, perturbation };

/// Flip-rate law of the q-voter model.
///
/// direct_q: a site with a fraction f of disagreeing neighbors flips at rate
/// f^q.
/// perturbation: it flips at rate f + epsilon * r[k f], a voter model plus a
/// small perturbation that depends only on the disagreeing count.
class QVoterParams {
 public:
  static QVoterParams direct(double q);
  static QVoterParams perturbation(double epsilon, RateTable rates);
  static QVoterParams voter() { return direct(1.0); }

  UpdateMode mode() const { return mode_; }
  double q() const { return q_; }
  double epsilon() const { return epsilon_; }
  const std::optional<RateTable>& rates() const { return rates_; }

  /// Rate for a site with `disagreeing` of `k` neighbors opposite. Throws
  /// std::invalid_argument when a perturbation rate would be negative.
  double rate(int disagreeing, int k) const;

  /// rate(n, k) for n = 0..k; validates every entry.
  std::vector<double> rate_by_count(int k) const;

  bool is_pure_voter() const;

 private:
  UpdateMode mode_ = UpdateMode::direct_q;
  double q_ = 1.0;
  double epsilon_ = 0.0;
  std::optional<RateTable> rates_;
};

double flip_rate(const Configuration& config, Site site, const QVoterParams& params);

struct Trajectory {
  std::vector<double> times;
  std::vector<double> densities;
  std::vector<std::uint64_t> events;
  std::uint64_t total_events = 0;
  bool absorbed = false;
  double absorption_time = 0.0;
  Configuration terminal;

  explicit Trajectory(Configuration c) : terminal(std::move(c)) {}
};

/// Writes the trajectory as CSV with columns time,density,events.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Continuous-time q-voter simulation by thinning over the active set.
///
/// Sites with at least one disagreeing neighbor are kept in an unordered
/// array. Proposals arrive at rate |active| * cap, where cap is the largest
/// per-site rate; the proposed site is uniform over the active set and flips
/// with probability rate / cap. Only the flipped site and its reverse
/// neighbors change status, so each flip costs O(k).
class Simulator {
 public:
  Simulator(Configuration initial, const QVoterParams& params);

  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  const Configuration& state() const { return config_; }
  std::size_t active_count() const { return active_.size(); }
  bool absorbed() const { return active_.empty(); }
  double rate_cap() const { return cap_; }
  int disagreeing(Site s) const { return count_[s]; }

  /// Sum of flip rates over all sites.
  double total_rate() const;

  /// Advances to the next accepted flip if it occurs no later than
  /// `t_limit` and returns true. Otherwise sets the clock to t_limit and
  /// returns false; memorylessness makes the truncation exact. Returns false
  /// without moving the clock once absorbed.
  bool step(Engine& rng, double t_limit);

  /// Flipped site of the last accepted event.
  Site last_flip() const { return last_flip_; }

 private:
  void apply_flip(Site x);
  void set_count(Site y, int value);

  Configuration config_;
  const TorusLattice* lattice_;
  int k_;
  std::vector<double> accept_;
  std::vector<double> rate_;
  double cap_ = 0.0;
  std::vector<std::uint8_t> count_;
  std::vector<std::size_t> histogram_;
  std::vector<Site> active_;
  std::vector<std::uint32_t> slot_;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  Site last_flip_ = 0;
};

/// Runs from `initial` until t_max or absorption, sampling the density at
/// 0, dt, 2dt, ... and at t_max. After absorption the simulation stops and the
/// remaining samples repeat the absorbed state.
Trajectory run(Configuration initial, const QVoterParams& params, double t_max,
               Engine& rng, double sample_dt);

struct WindowedRun {
  Trajectory perturbed;
  Trajectory windowed;
  std::size_t discrepancy = 0;
};

/// Two copies driven by one event stream. The second copy uses pure voter
/// rates while t is in [window_start, window_end) and the same rates as the
/// first copy elsewhere. Proposals are drawn over the union of both active
/// sets with a shared uniform mark, so the copies agree until their rates
/// differ at a proposed site.
WindowedRun run_windowed_voter(Configuration initial, const QVoterParams& params,
                               double t_max, double window_start, double window_end,
                               Engine& rng, double sample_dt);

/// Independent Bernoulli(u) opinions at every site.
void set_product_measure(Configuration& config, double u, Engine& rng);

}  // namespace qvoter
