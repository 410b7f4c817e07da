#include "qvoter/duality.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qvoter/parallel.hpp"

namespace qvoter {

GraphicalRep::GraphicalRep(const TorusLattice& lattice, double horizon, BranchingRule rule,
                           std::vector<GraphEvent> events)
    : lattice_(&lattice), horizon_(horizon), rule_(rule), events_(std::move(events)) {}

std::size_t GraphicalRep::voter_event_count() const {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [](const GraphEvent& e) { return !e.branching(); }));
}

std::size_t GraphicalRep::branching_event_count() const {
  return events_.size() - voter_event_count();
}

GraphicalRep build_graphical_rep(const TorusLattice& lattice, double horizon, Engine& rng,
                                 BranchingRule rule) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("graphical representation needs T > 0");
  }
  if (!(rule.epsilon >= 0.0) || !(rule.gamma >= 0.0) || rule.epsilon * rule.gamma > 1.0) {
    throw std::invalid_argument("branching rule needs epsilon >= 0 and epsilon*gamma <= 1");
  }
  const double voter_rate = 1.0 - rule.epsilon * rule.gamma;
  const double per_site = voter_rate + rule.epsilon;
  const auto n = static_cast<std::uint32_t>(lattice.size());
  const auto k = static_cast<std::uint32_t>(lattice.k());
  const double total = per_site * n;
  const double voter_share = voter_rate / per_site;

  std::vector<GraphEvent> events;
  events.reserve(static_cast<std::size_t>(total * horizon * 1.1) + 16);
  double t = 0.0;
  while (true) {
    t += exponential(rng, total);
    if (t > horizon) break;
    GraphEvent e;
    e.time = t;
    e.site = uniform_index(rng, n);
    if (rule.epsilon == 0.0 || uniform01(rng) < voter_share) {
      e.kind = static_cast<std::uint16_t>(uniform_index(rng, k));
    } else {
      e.kind = GraphEvent::kBranch;
      e.mark = uniform01(rng);
    }
    events.push_back(e);
  }
  return GraphicalRep(lattice, horizon, rule, std::move(events));
}

namespace {

// Branching acceptance given the value at x and an accessor for neighbor values.
template <class Get>
bool branch_flips(const TorusLattice& lat, Site x, bool at_x, const GraphEvent& e,
                  const BranchingRule& rule, Get&& get) {
  const Site* row = lat.neighbor_row(x);
  int opposite = 0;
  for (int j = 0; j < lat.k(); ++j) opposite += get(row[j]) != at_x ? 1 : 0;
  if (opposite == 0) return false;
  const double f = static_cast<double>(opposite) / lat.k();
  return e.mark < std::pow(f, rule.exponent);
}

}  // namespace

void apply_event(Configuration& config, const GraphEvent& e, const BranchingRule& rule) {
  const TorusLattice& lat = config.lattice();
  if (!e.branching()) {
    config.set(e.site, config.get(lat.neighbor_row(e.site)[e.kind]));
    return;
  }
  const bool at_x = config.get(e.site);
  if (branch_flips(lat, e.site, at_x, e, rule, [&](Site y) { return config.get(y); })) {
    config.set(e.site, !at_x);
  }
}

Configuration forward_state(const GraphicalRep& rep, const Configuration& xi0) {
  if (!(xi0.lattice() == rep.lattice())) {
    throw std::invalid_argument("configuration and graphical representation use different lattices");
  }
  Configuration xi = xi0;
  for (const auto& e : rep.events()) apply_event(xi, e, rep.rule());
  return xi;
}

Site DualState::walker(std::size_t i) const {
  if (i >= query_count_) throw std::out_of_range("walker index out of range");
  const std::uint32_t root = partition_.find(static_cast<std::uint32_t>(i));
  return position_[carrier_[root]];
}

std::vector<Site> DualState::occupied() const {
  std::vector<Site> out;
  out.reserve(live_);
  for (std::size_t p = 0; p < position_.size(); ++p) {
    if (alive_[p]) out.push_back(position_[p]);
  }
  return out;
}

DualState dual_crw(const GraphicalRep& rep, std::span<const Site> query, double s_max) {
  if (query.empty()) throw std::invalid_argument("dual needs a nonempty query set");
  if (!(s_max >= 0.0) || s_max > rep.horizon()) {
    throw std::invalid_argument("dual time must lie in [0, T]");
  }
  const TorusLattice& lat = rep.lattice();
  const int k = lat.k();
  std::vector<std::int32_t> occ(lat.size(), -1);

  DualState d;
  d.query_count_ = query.size();
  d.query_.assign(query.begin(), query.end());
  d.partition_.reset(query.size());
  d.jumps_.assign(static_cast<std::size_t>(k), 0);
  d.start_ = rep.horizon();
  d.clock_ = s_max;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const Site s = query[i];
    if (s >= lat.size()) throw std::out_of_range("query site out of range");
    if (occ[s] >= 0) throw std::invalid_argument("duplicate query site " + std::to_string(s));
    occ[s] = static_cast<std::int32_t>(i);
    d.position_.push_back(s);
    d.alive_.push_back(1);
    d.carrier_.push_back(static_cast<std::uint32_t>(i));
  }
  d.live_ = query.size();

  const double floor_time = rep.horizon() - s_max;
  const auto events = rep.events();
  for (std::size_t idx = events.size(); idx-- > 0;) {
    const GraphEvent& e = events[idx];
    if (e.time <= floor_time) break;
    const std::int32_t p = occ[e.site];
    if (p < 0) continue;
    d.touched_.push_back(static_cast<std::uint32_t>(idx));
    if (!e.branching()) {
      const Site y = lat.neighbor_row(e.site)[e.kind];
      ++d.jumps_[e.kind];
      if (y != e.site) {
        occ[e.site] = -1;
        const std::int32_t other = occ[y];
        if (other >= 0) {
          const std::uint32_t root = d.partition_.unite(static_cast<std::uint32_t>(p),
                                                        static_cast<std::uint32_t>(other));
          d.carrier_[root] = static_cast<std::uint32_t>(other);
          d.alive_[static_cast<std::size_t>(p)] = 0;
          --d.live_;
        } else {
          occ[y] = p;
          d.position_[static_cast<std::size_t>(p)] = y;
        }
      }
    } else {
      ++d.branchings_;
      const Site* row = lat.neighbor_row(e.site);
      for (int j = 0; j < k; ++j) {
        const Site y = row[j];
        if (occ[y] >= 0) continue;
        const std::uint32_t id = d.partition_.add();
        d.position_.push_back(y);
        d.alive_.push_back(1);
        d.carrier_.push_back(id);
        occ[y] = static_cast<std::int32_t>(id);
        ++d.live_;
      }
    }
    d.history_.push_back(static_cast<std::uint32_t>(d.live_));
  }
  return d;
}

std::vector<bool> reconstruct_from_influence(const GraphicalRep& rep, const DualState& dual,
                                             const Configuration& known) {
  const TorusLattice& lat = rep.lattice();
  std::vector<std::int8_t> value(lat.size(), -1);
  for (Site s : dual.occupied()) value[s] = known.get(s) ? 1 : 0;
  auto read = [&](Site s) {
    if (value[s] < 0) throw std::logic_error("influence set does not cover site " + std::to_string(s));
    return value[s] == 1;
  };
  const auto events = rep.events();
  const auto& touched = dual.touched();
  for (auto it = touched.rbegin(); it != touched.rend(); ++it) {
    const GraphEvent& e = events[*it];
    if (!e.branching()) {
      value[e.site] = read(lat.neighbor_row(e.site)[e.kind]) ? 1 : 0;
    } else {
      const bool at_x = read(e.site);
      if (branch_flips(lat, e.site, at_x, e, rep.rule(), read)) value[e.site] = at_x ? 0 : 1;
    }
  }
  std::vector<bool> out(dual.query_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    // The query sites are the starting positions of particles 0..|B|-1.
    out[i] = read(dual.query_site(i));
  }
  return out;
}

double DualityEstimate::combined_se() const { return se_forward + se_dual; }

bool DualityEstimate::agrees(double z) const {
  return std::abs(p_forward - p_dual) <= z * combined_se();
}

namespace {

struct HitCounts {
  std::uint64_t forward = 0;
  std::uint64_t dual = 0;
  std::uint64_t trials = 0;
};

double binomial_se(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

}  // namespace

DualityEstimate check_duality(const TorusLattice& lattice, std::span<const Site> a,
                              std::span<const Site> b, double t, std::size_t replicates,
                              std::uint64_t seed, unsigned threads) {
  if (a.empty() || b.empty()) throw std::invalid_argument("duality check needs nonempty A and B");
  if (replicates < 1) throw std::invalid_argument("duality check needs at least one replicate");
  if (!(t >= 0.0)) throw std::invalid_argument("duality check needs t >= 0");
  for (Site s : a) {
    if (s >= lattice.size()) throw std::out_of_range("site in A out of range");
  }
  std::vector<Site> query(b.begin(), b.end());
  std::sort(query.begin(), query.end());
  query.erase(std::unique(query.begin(), query.end()), query.end());
  std::vector<std::uint8_t> in_a(lattice.size(), 0);
  for (Site s : a) in_a[s] = 1;

  DualityEstimate est;
  est.replicates = replicates;
  if (t == 0.0) {
    const bool meet = std::any_of(query.begin(), query.end(), [&](Site s) { return in_a[s] != 0; });
    est.p_forward = est.p_dual = meet ? 1.0 : 0.0;
    return est;
  }

  constexpr std::size_t kBlocks = 64;
  const std::size_t blocks = std::min(kBlocks, replicates);
  auto counts = run_replicas(blocks, threads, [&](std::size_t block) {
    Engine rng = make_stream(seed, block);
    const std::size_t lo = replicates * block / blocks;
    const std::size_t hi = replicates * (block + 1) / blocks;
    Configuration xi0(lattice);
    for (Site s : a) xi0.set(s, true);
    HitCounts c;
    for (std::size_t r = lo; r < hi; ++r) {
      const GraphicalRep fwd = build_graphical_rep(lattice, t, rng);
      const Configuration xi = forward_state(fwd, xi0);
      if (std::any_of(query.begin(), query.end(), [&](Site s) { return xi.get(s); })) ++c.forward;
      const GraphicalRep back = build_graphical_rep(lattice, t, rng);
      const DualState dual = dual_crw(back, query, t);
      const auto occ = dual.occupied();
      if (std::any_of(occ.begin(), occ.end(), [&](Site s) { return in_a[s] != 0; })) ++c.dual;
      ++c.trials;
    }
    return c;
  });
  HitCounts total;
  for (const auto& c : counts) {
    total.forward += c.forward;
    total.dual += c.dual;
    total.trials += c.trials;
  }
  est.p_forward = static_cast<double>(total.forward) / static_cast<double>(total.trials);
  est.p_dual = static_cast<double>(total.dual) / static_cast<double>(total.trials);
  est.se_forward = binomial_se(est.p_forward, total.trials);
  est.se_dual = binomial_se(est.p_dual, total.trials);
  return est;
}

GadgetTable gadget_flip_rates(const std::array<double, 4>& a) {
  for (double v : a) {
    if (!(v >= 0.0)) throw std::invalid_argument("gadget rates must be non-negative");
  }
  auto choose = [](int n, int j) {
    if (j < 0 || j > n) return 0.0;
    double c = 1.0;
    for (int i = 1; i <= j; ++i) c = c * (n - j + i) / i;
    return c;
  };
  constexpr int k = 4;
  GadgetTable table;
  for (int n = 0; n <= k; ++n) {
    GadgetRow row;
    row.n = n;
    for (int j = 1; j <= k; ++j) {
      const double rate = a[static_cast<std::size_t>(j - 1)];
      // 1 -> 0 needs every arrow from a 0; 0 -> 1 needs at least one arrow from a 1.
      row.one_to_zero += rate * choose(n, j);
      row.zero_to_one += rate * (choose(k, j) - choose(k - n, j));
    }
    table.rows[static_cast<std::size_t>(n)] = row;
    if (n >= 1 && n <= 3 && row.one_to_zero < row.zero_to_one) table.asymmetric = true;
  }
  return table;
}

}  // namespace qvoter
