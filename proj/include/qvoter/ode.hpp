#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qvoter/dynamics.hpp"
#include "qvoter/lattice.hpp"
#include "qvoter/reaction.hpp"

namespace qvoter {

struct OdeRhs {
  std::function<double(double)> f;
  std::string description;

  double operator()(double u) const { return f(u); }
};

/// du/dt = -u(1-u)^q + (1-u)u^q.
OdeRhs mean_field_rhs(double q);
/// du/dt = phi(u).
OdeRhs reaction_rhs(const ReactionTerm& term);
/// du/dt = c u, for order checks.
OdeRhs linear_rhs(double c);

struct OdeSolution {
  std::vector<double> times;
  std::vector<double> values;
  std::string rhs;
  /// Step actually used after refinement.
  double step = 0.0;
  int halvings = 0;
  /// Sup-norm change of the last halving.
  double last_change = 0.0;
};

/// Fixed-step RK4 from u0 over [0, T], reported on the grid of spacing dt
/// (plus T). The step is halved until two successive refinements differ by
/// less than `tolerance` in sup norm on that grid.
OdeSolution integrate(const OdeRhs& rhs, double u0, double horizon, double dt,
                      double tolerance = 1e-9);

/// One RK4 pass with exactly `steps` steps per reporting interval, no
/// refinement.
OdeSolution integrate_fixed(const OdeRhs& rhs, double u0, double horizon, double dt, int steps);

void write_ode_csv(std::ostream& out, const OdeSolution& sol);

/// Particle time needed to cover ODE time t0: t0 / (epsilon * scale).
double particle_horizon(double t0, double epsilon, double scale = 1.0);

struct OdeComparison {
  std::vector<double> sup_deviation;
  double mean = 0.0;
  double standard_error = 0.0;
  double particle_time = 0.0;
};

/// Runs `replicates` particle systems from product measure u0 for particle
/// time t0 / (epsilon * scale), sampled on `samples` equal ODE-time
/// intervals, and returns sup_s |U(s) - u(s)| per replicate. Throws for
/// epsilon outside [0, 1); epsilon = 0 compares a pure voter run over
/// particle time t0 against the constant solution.
OdeComparison compare_particle_ode(const TorusLattice& lattice, const QVoterParams& params,
                                   const OdeRhs& rhs, double u0, double t0, double epsilon,
                                   std::size_t replicates, std::uint64_t seed,
                                   unsigned threads = 1, double scale = 1.0, int samples = 50);

void write_comparison_csv(std::ostream& out, const OdeComparison& cmp);

}  // namespace qvoter
