#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qvoter/disjoint_set.hpp"
#include "qvoter/lattice.hpp"
#include "qvoter/rng.hpp"

namespace qvoter {

/// Perturbation part of a graphical representation. Voter arrows run at
/// total rate (1 - epsilon*gamma) per site; branching events at rate epsilon
/// per site flip x when mark < (fraction of opposite neighbors)^exponent.
struct BranchingRule {
  double epsilon = 0.0;
  double gamma = 1.0;
  double exponent = 1.0;
};

struct GraphEvent {
  double time = 0.0;
  Site site = 0;
  /// Offset index for a voter event; kBranch for a branching event.
  std::uint16_t kind = 0;
  double mark = 0.0;

  static constexpr std::uint16_t kBranch = 0xffff;
  bool branching() const { return kind == kBranch; }
};

/// Materialized space-time Poisson events on [0, T], sorted by time.
class GraphicalRep {
 public:
  GraphicalRep(const TorusLattice& lattice, double horizon, BranchingRule rule,
               std::vector<GraphEvent> events);

  const TorusLattice& lattice() const { return *lattice_; }
  double horizon() const { return horizon_; }
  const BranchingRule& rule() const { return rule_; }
  std::span<const GraphEvent> events() const { return events_; }

  std::size_t voter_event_count() const;
  std::size_t branching_event_count() const;

 private:
  const TorusLattice* lattice_;
  double horizon_;
  BranchingRule rule_;
  std::vector<GraphEvent> events_;
};

/// Samples all event streams on [0, T]. Throws std::invalid_argument if
/// T <= 0, epsilon < 0 or epsilon*gamma > 1.
GraphicalRep build_graphical_rep(const TorusLattice& lattice, double horizon, Engine& rng,
                                 BranchingRule rule = {});

/// Applies one event to a configuration.
void apply_event(Configuration& config, const GraphEvent& event, const BranchingRule& rule);

/// State at time T obtained by running the events upward from xi0.
Configuration forward_state(const GraphicalRep& rep, const Configuration& xi0);

/// Dual process run downward from time T.
///
/// Particle ids 0..|B|-1 are the walkers started on B; branching adds new ids.
/// Two particles meeting on a site coalesce: the partition merges their ids
/// and only one stays live.
class DualState {
 public:
  std::size_t query_count() const { return query_count_; }
  Site query_site(std::size_t i) const { return query_.at(i); }
  /// Site currently carrying the lineage of the i-th query site.
  Site walker(std::size_t i) const;
  /// Sites of live particles: the influence set.
  std::vector<Site> occupied() const;
  std::size_t live_count() const { return live_; }

  DisjointSet& partition() { return partition_; }
  const DisjointSet& partition() const { return partition_; }
  double clock() const { return clock_; }
  /// Dual time at which the pass started, i.e. T.
  double start_time() const { return start_; }

  /// Number of jumps along each offset, indexed by offset.
  const std::vector<std::uint64_t>& jumps_by_offset() const { return jumps_; }
  std::uint64_t branchings() const { return branchings_; }
  /// Live-particle count after each processed encounter, in dual order.
  const std::vector<std::uint32_t>& live_history() const { return history_; }

  /// Indices (into rep.events()) of events that met a particle, in
  /// decreasing time order.
  const std::vector<std::uint32_t>& touched() const { return touched_; }

 private:
  friend DualState dual_crw(const GraphicalRep&, std::span<const Site>, double);

  std::size_t query_count_ = 0;
  std::vector<Site> query_;
  std::vector<Site> position_;
  // Live particle carrying each partition root.
  std::vector<std::uint32_t> carrier_;
  std::vector<std::uint8_t> alive_;
  DisjointSet partition_;
  std::size_t live_ = 0;
  double clock_ = 0.0;
  double start_ = 0.0;
  std::vector<std::uint64_t> jumps_;
  std::uint64_t branchings_ = 0;
  std::vector<std::uint32_t> history_;
  std::vector<std::uint32_t> touched_;
};

/// Runs the dual from the sites in B for dual time s_max <= T. Throws
/// std::invalid_argument for empty B, duplicate sites or s_max outside
/// [0, T].
DualState dual_crw(const GraphicalRep& rep, std::span<const Site> query, double s_max);

/// Values of xi_T on the query sites computed from xi_{T-s} on the influence
/// set only. `known` must carry the correct values at every occupied site;
/// other sites are never read.
std::vector<bool> reconstruct_from_influence(const GraphicalRep& rep, const DualState& dual,
                                             const Configuration& known);

struct DualityEstimate {
  double p_forward = 0.0;
  double se_forward = 0.0;
  double p_dual = 0.0;
  double se_dual = 0.0;
  std::size_t replicates = 0;

  double combined_se() const;
  /// |p_forward - p_dual| <= z * (se_forward + se_dual).
  bool agrees(double z = 3.0) const;
};

/// Estimates P(xi^A_t meets B) forward and P(A meets zeta^B_t) through the
/// coalescing dual with independent samples for each side (pure voter).
DualityEstimate check_duality(const TorusLattice& lattice, std::span<const Site> a,
                              std::span<const Site> b, double t, std::size_t replicates,
                              std::uint64_t seed, unsigned threads = 1);

struct GadgetRow {
  int n = 0;
  double one_to_zero = 0.0;
  double zero_to_one = 0.0;
};

struct GadgetTable {
  std::array<GadgetRow, 5> rows{};
  /// Some n in {1,2,3} has rate(1->0) < rate(0->1).
  bool asymmetric = false;
};

/// Flip rates of a k=4 process built from arrow-delta gadgets, where every
/// gadget with j arrows has rate a[j-1]. Throws on negative rates.
GadgetTable gadget_flip_rates(const std::array<double, 4>& a);

}  // namespace qvoter
