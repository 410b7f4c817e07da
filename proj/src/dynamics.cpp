#include "qvoter/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qvoter/csv.hpp"

namespace qvoter {

RateTable::RateTable(int k, std::vector<double> values) : k_(k), values_(std::move(values)) {
  if (k < 1) throw std::invalid_argument("rate table needs k >= 1");
  if (values_.size() != static_cast<std::size_t>(k) + 1) {
    throw std::invalid_argument("rate table must have k+1 entries r_0..r_k");
  }
  if (values_[0] != 0.0) throw std::invalid_argument("rate table requires r_0 = 0");
}

RateTable RateTable::negated() const {
  std::vector<double> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), [](double x) { return -x; });
  v[0] = 0.0;
  return RateTable(k_, std::move(v));
}

QVoterParams QVoterParams::direct(double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be positive");
  QVoterParams p;
  p.mode_ = UpdateMode::direct_q;
  p.q_ = q;
  return p;
}

QVoterParams QVoterParams::perturbation(double epsilon, RateTable rates) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be non-negative");
  }
  QVoterParams p;
  p.mode_ = UpdateMode::perturbation;
  p.epsilon_ = epsilon;
  p.rates_ = std::move(rates);
  // Every attainable count must give a non-negative rate.
  p.rate_by_count(p.rates_->k());
  return p;
}

double QVoterParams::rate(int disagreeing, int k) const {
  if (disagreeing < 0 || disagreeing > k) throw std::out_of_range("disagreeing count out of range");
  if (disagreeing == 0) return 0.0;
  const double f = static_cast<double>(disagreeing) / k;
  if (mode_ == UpdateMode::direct_q) return disagreeing == k ? 1.0 : std::pow(f, q_);
  if (rates_->k() != k) {
    throw std::invalid_argument("rate table k=" + std::to_string(rates_->k()) +
                                " does not match neighborhood size " + std::to_string(k));
  }
  const double r = f + epsilon_ * (*rates_)[disagreeing];
  if (r < 0.0) {
    throw std::invalid_argument("perturbation rate is negative for n(x)=" +
                                std::to_string(disagreeing) + "; reduce epsilon");
  }
  return r;
}

std::vector<double> QVoterParams::rate_by_count(int k) const {
  std::vector<double> out(static_cast<std::size_t>(k) + 1);
  for (int n = 0; n <= k; ++n) out[static_cast<std::size_t>(n)] = rate(n, k);
  return out;
}

bool QVoterParams::is_pure_voter() const {
  if (mode_ == UpdateMode::direct_q) return q_ == 1.0;
  if (epsilon_ == 0.0) return true;
  return std::all_of(rates_->values().begin(), rates_->values().end(),
                     [](double v) { return v == 0.0; });
}

double flip_rate(const Configuration& config, Site site, const QVoterParams& params) {
  return params.rate(discordant_count(config, site), config.lattice().k());
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  CsvWriter csv(out);
  csv.header({"time", "density", "events"});
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    csv.field(traj.times[i]).field(traj.densities[i]).field(traj.events[i]);
    csv.end_row();
  }
}

namespace {

constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

}  // namespace

Simulator::Simulator(Configuration initial, const QVoterParams& params)
    : config_(std::move(initial)), lattice_(&config_.lattice()), k_(lattice_->k()) {
  if (k_ > 255) throw std::invalid_argument("neighborhood too large");
  rate_ = params.rate_by_count(k_);
  cap_ = *std::max_element(rate_.begin(), rate_.end());
  accept_.resize(rate_.size());
  for (std::size_t n = 0; n < rate_.size(); ++n) accept_[n] = cap_ > 0.0 ? rate_[n] / cap_ : 0.0;

  const std::size_t n = config_.size();
  count_.resize(n);
  slot_.assign(n, kNoSlot);
  histogram_.assign(static_cast<std::size_t>(k_) + 1, 0);
  for (Site s = 0; s < n; ++s) {
    const int c = discordant_count(config_, s);
    count_[s] = static_cast<std::uint8_t>(c);
    ++histogram_[static_cast<std::size_t>(c)];
    if (rate_[static_cast<std::size_t>(c)] > 0.0) {
      slot_[s] = static_cast<std::uint32_t>(active_.size());
      active_.push_back(s);
    }
  }
}

double Simulator::total_rate() const {
  double total = 0.0;
  for (std::size_t n = 0; n < histogram_.size(); ++n) total += histogram_[n] * rate_[n];
  return total;
}

void Simulator::set_count(Site y, int value) {
  const int old = count_[y];
  --histogram_[static_cast<std::size_t>(old)];
  ++histogram_[static_cast<std::size_t>(value)];
  count_[y] = static_cast<std::uint8_t>(value);
  const bool was = slot_[y] != kNoSlot;
  const bool now = rate_[static_cast<std::size_t>(value)] > 0.0;
  if (was == now) return;
  if (now) {
    slot_[y] = static_cast<std::uint32_t>(active_.size());
    active_.push_back(y);
  } else {
    const std::uint32_t i = slot_[y];
    const Site last = active_.back();
    active_[i] = last;
    slot_[last] = i;
    active_.pop_back();
    slot_[y] = kNoSlot;
  }
}

void Simulator::apply_flip(Site x) {
  config_.flip(x);
  const bool now = config_.get(x);
  set_count(x, k_ - count_[x]);
  const Site* rev = lattice_->reverse_row(x);
  for (int j = 0; j < k_; ++j) {
    const Site y = rev[j];
    if (y == x) continue;
    set_count(y, count_[y] + (config_.get(y) == now ? -1 : 1));
  }
}

bool Simulator::step(Engine& rng, double t_limit) {
  while (!active_.empty()) {
    const double dt = exponential(rng, static_cast<double>(active_.size()) * cap_);
    if (time_ + dt > t_limit) {
      time_ = std::max(time_, t_limit);
      return false;
    }
    time_ += dt;
    const Site x = active_[uniform_index(rng, static_cast<std::uint32_t>(active_.size()))];
    const double a = accept_[count_[x]];
    if (a >= 1.0 || uniform01(rng) < a) {
      apply_flip(x);
      ++events_;
      last_flip_ = x;
      return true;
    }
  }
  return false;
}

namespace {

std::vector<double> sample_grid(double t_max, double dt) {
  if (!(t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("sample_dt must be positive");
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    // A grid point within rounding of t_max is replaced by t_max itself.
    if (t >= t_max - 1e-9 * dt) break;
    grid.push_back(t);
  }
  grid.push_back(t_max);
  return grid;
}

}  // namespace

Trajectory run(Configuration initial, const QVoterParams& params, double t_max, Engine& rng,
               double sample_dt) {
  const auto grid = sample_grid(t_max, sample_dt);
  Simulator sim(std::move(initial), params);
  Trajectory traj(sim.state());
  traj.times.reserve(grid.size());
  traj.densities.reserve(grid.size());
  traj.events.reserve(grid.size());
  bool absorbed_seen = sim.absorbed();
  if (absorbed_seen) {
    traj.absorbed = true;
    traj.absorption_time = 0.0;
  }
  for (double s : grid) {
    if (!sim.absorbed()) {
      while (sim.step(rng, s)) {
      }
      if (sim.absorbed() && !absorbed_seen) {
        absorbed_seen = true;
        traj.absorbed = true;
        traj.absorption_time = sim.time();
      }
    }
    traj.times.push_back(s);
    traj.densities.push_back(sim.state().density());
    traj.events.push_back(sim.events());
  }
  traj.total_events = sim.events();
  traj.terminal = sim.state();
  return traj;
}

namespace {

// One copy inside a coupled pair.
struct Copy {
  Configuration config;
  std::vector<std::uint8_t> count;

  explicit Copy(const Configuration& c) : config(c), count(c.size()) {
    for (Site s = 0; s < c.size(); ++s) count[s] = static_cast<std::uint8_t>(discordant_count(c, s));
  }

  void flip(Site x, const TorusLattice& lat) {
    config.flip(x);
    const bool now = config.get(x);
    const int k = lat.k();
    count[x] = static_cast<std::uint8_t>(k - count[x]);
    const Site* rev = lat.reverse_row(x);
    for (int j = 0; j < k; ++j) {
      const Site y = rev[j];
      if (y == x) continue;
      count[y] = static_cast<std::uint8_t>(count[y] + (config.get(y) == now ? -1 : 1));
    }
  }
};

}  // namespace

WindowedRun run_windowed_voter(Configuration initial, const QVoterParams& params, double t_max,
                               double window_start, double window_end, Engine& rng,
                               double sample_dt) {
  if (!(window_start >= 0.0) || !(window_end >= window_start) || window_end > t_max) {
    throw std::invalid_argument("window must satisfy 0 <= t1 <= t2 <= t_max");
  }
  const auto grid = sample_grid(t_max, sample_dt);
  const TorusLattice& lat = initial.lattice();
  const int k = lat.k();
  const auto rate_a = params.rate_by_count(k);
  const auto rate_voter = QVoterParams::voter().rate_by_count(k);
  const double cap = std::max(*std::max_element(rate_a.begin(), rate_a.end()),
                              *std::max_element(rate_voter.begin(), rate_voter.end()));

  Copy a(initial);
  Copy b(initial);
  const std::size_t n = initial.size();
  std::vector<Site> active;
  std::vector<std::uint32_t> slot(n, kNoSlot);
  auto refresh = [&](Site y) {
    const bool now = a.count[y] > 0 || b.count[y] > 0;
    const bool was = slot[y] != kNoSlot;
    if (now == was) return;
    if (now) {
      slot[y] = static_cast<std::uint32_t>(active.size());
      active.push_back(y);
    } else {
      const std::uint32_t i = slot[y];
      const Site last = active.back();
      active[i] = last;
      slot[last] = i;
      active.pop_back();
      slot[y] = kNoSlot;
    }
  };
  for (Site s = 0; s < n; ++s) refresh(s);

  WindowedRun out{Trajectory(initial), Trajectory(initial), 0};
  std::uint64_t events_a = 0;
  std::uint64_t events_b = 0;
  double t = 0.0;
  auto record = [&](double s) {
    out.perturbed.times.push_back(s);
    out.perturbed.densities.push_back(a.config.density());
    out.perturbed.events.push_back(events_a);
    out.windowed.times.push_back(s);
    out.windowed.densities.push_back(b.config.density());
    out.windowed.events.push_back(events_b);
  };
  for (double s : grid) {
    while (!active.empty()) {
      const double dt = exponential(rng, static_cast<double>(active.size()) * cap);
      if (t + dt > s) {
        t = s;
        break;
      }
      t += dt;
      const Site x = active[uniform_index(rng, static_cast<std::uint32_t>(active.size()))];
      const double mark = uniform01(rng) * cap;
      const bool in_window = t >= window_start && t < window_end;
      const bool flip_a = mark < rate_a[a.count[x]];
      const bool flip_b = mark < (in_window ? rate_voter : rate_a)[b.count[x]];
      if (!flip_a && !flip_b) continue;
      if (flip_a) {
        a.flip(x, lat);
        ++events_a;
      }
      if (flip_b) {
        b.flip(x, lat);
        ++events_b;
      }
      refresh(x);
      const Site* rev = lat.reverse_row(x);
      for (int j = 0; j < k; ++j) refresh(rev[j]);
    }
    for (auto* traj : {&out.perturbed, &out.windowed}) {
      const Copy& c = traj == &out.perturbed ? a : b;
      if (!traj->absorbed && (c.config.ones() == 0 || c.config.ones() == n)) {
        traj->absorbed = true;
        traj->absorption_time = t;
      }
    }
    record(s);
  }
  out.perturbed.total_events = events_a;
  out.windowed.total_events = events_b;
  out.perturbed.terminal = a.config;
  out.windowed.terminal = b.config;
  for (Site s = 0; s < n; ++s) out.discrepancy += a.config.get(s) != b.config.get(s) ? 1 : 0;
  return out;
}

void set_product_measure(Configuration& config, double u, Engine& rng) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("density u must lie in [0,1]");
  config.fill(false);
  for (Site s = 0; s < config.size(); ++s) {
    if (uniform01(rng) < u) config.set(s, true);
  }
}

}  // namespace qvoter
