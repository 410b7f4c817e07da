#include "qvoter/ode.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qvoter/csv.hpp"
#include "qvoter/parallel.hpp"

namespace qvoter {

OdeRhs mean_field_rhs(double q) {
  if (!(q > 0.0)) throw std::invalid_argument("q must be positive");
  return {[q](double u) {
            const double v = 1.0 - u;
            return -u * std::pow(std::max(v, 0.0), q) + v * std::pow(std::max(u, 0.0), q);
          },
          "mean-field q=" + format_real(q)};
}

OdeRhs reaction_rhs(const ReactionTerm& term) {
  auto phi = term.phi;
  return {[phi](double u) { return phi.eval(u); }, "reaction " + factored_string(term)};
}

OdeRhs linear_rhs(double c) {
  return {[c](double u) { return c * u; }, "linear c=" + format_real(c)};
}

namespace {

std::vector<double> report_grid(double horizon, double dt) {
  if (!(horizon > 0.0)) throw std::invalid_argument("ODE horizon must be positive");
  if (!(dt > 0.0)) throw std::invalid_argument("ODE step must be positive");
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (t >= horizon * (1.0 - 1e-12)) break;
    grid.push_back(t);
  }
  grid.push_back(horizon);
  return grid;
}

double rk4_step(const OdeRhs& rhs, double u, double h) {
  const double k1 = rhs(u);
  const double k2 = rhs(u + 0.5 * h * k1);
  const double k3 = rhs(u + 0.5 * h * k2);
  const double k4 = rhs(u + h * k3);
  return u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

std::vector<double> solve_on_grid(const OdeRhs& rhs, double u0, const std::vector<double>& grid,
                                  int steps) {
  std::vector<double> values{u0};
  double u = u0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double h = (grid[i] - grid[i - 1]) / steps;
    for (int s = 0; s < steps; ++s) u = rk4_step(rhs, u, h);
    values.push_back(u);
  }
  return values;
}

}  // namespace

OdeSolution integrate_fixed(const OdeRhs& rhs, double u0, double horizon, double dt, int steps) {
  if (steps < 1) throw std::invalid_argument("need at least one step per interval");
  OdeSolution sol;
  sol.rhs = rhs.description;
  sol.times = report_grid(horizon, dt);
  sol.values = solve_on_grid(rhs, u0, sol.times, steps);
  sol.step = dt / steps;
  return sol;
}

OdeSolution integrate(const OdeRhs& rhs, double u0, double horizon, double dt, double tolerance) {
  if (!(u0 >= 0.0 && u0 <= 1.0)) throw std::invalid_argument("u0 must lie in [0,1]");
  OdeSolution sol;
  sol.rhs = rhs.description;
  sol.times = report_grid(horizon, dt);
  int steps = 1;
  auto current = solve_on_grid(rhs, u0, sol.times, steps);
  constexpr int kMaxHalvings = 24;
  for (int h = 1; h <= kMaxHalvings; ++h) {
    steps *= 2;
    auto finer = solve_on_grid(rhs, u0, sol.times, steps);
    double change = 0.0;
    for (std::size_t i = 0; i < finer.size(); ++i) change = std::max(change, std::abs(finer[i] - current[i]));
    current = std::move(finer);
    sol.halvings = h;
    sol.last_change = change;
    if (change < tolerance) {
      sol.values = std::move(current);
      sol.step = dt / steps;
      return sol;
    }
  }
  throw std::runtime_error("RK4 refinement did not converge");
}

void write_ode_csv(std::ostream& out, const OdeSolution& sol) {
  CsvWriter csv(out);
  csv.header({"time", "u"});
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    csv.field(sol.times[i]).field(sol.values[i]);
    csv.end_row();
  }
}

double particle_horizon(double t0, double epsilon, double scale) {
  if (!(epsilon > 0.0) || !(scale > 0.0)) throw std::invalid_argument("time scale must be positive");
  return t0 / (epsilon * scale);
}

OdeComparison compare_particle_ode(const TorusLattice& lattice, const QVoterParams& params,
                                   const OdeRhs& rhs, double u0, double t0, double epsilon,
                                   std::size_t replicates, std::uint64_t seed, unsigned threads,
                                   double scale, int samples) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon_n must lie in [0,1)");
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  if (samples < 1) throw std::invalid_argument("need at least one sample interval");
  const double ode_dt = t0 / samples;
  std::vector<double> target;
  double time_factor = 1.0;
  if (epsilon == 0.0) {
    target.assign(static_cast<std::size_t>(samples) + 1, u0);
  } else {
    target = integrate(rhs, u0, t0, ode_dt).values;
    time_factor = particle_horizon(1.0, epsilon, scale);
  }
  OdeComparison cmp;
  cmp.particle_time = t0 * time_factor;
  cmp.sup_deviation = run_replicas(replicates, threads, [&](std::size_t i) {
    Engine rng = make_stream(seed, i);
    Configuration config(lattice);
    set_product_measure(config, u0, rng);
    Simulator sim(std::move(config), params);
    double sup = std::abs(sim.state().density() - target[0]);
    for (int s = 1; s <= samples; ++s) {
      const double t = (s == samples ? t0 : s * ode_dt) * time_factor;
      while (sim.step(rng, t)) {
      }
      sup = std::max(sup, std::abs(sim.state().density() - target[static_cast<std::size_t>(s)]));
    }
    return sup;
  });
  double sum = 0.0;
  double sq = 0.0;
  for (double d : cmp.sup_deviation) {
    sum += d;
    sq += d * d;
  }
  const double n = static_cast<double>(replicates);
  cmp.mean = sum / n;
  if (replicates > 1) {
    const double var = std::max(sq - n * cmp.mean * cmp.mean, 0.0) / (n - 1.0);
    cmp.standard_error = std::sqrt(var / n);
  }
  return cmp;
}

void write_comparison_csv(std::ostream& out, const OdeComparison& cmp) {
  CsvWriter csv(out);
  csv.header({"replicate", "sup_deviation"});
  for (std::size_t i = 0; i < cmp.sup_deviation.size(); ++i) {
    csv.field(static_cast<std::uint64_t>(i)).field(cmp.sup_deviation[i]);
    csv.end_row();
  }
}

}  // namespace qvoter
