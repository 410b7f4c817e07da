#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qvoter/dynamics.hpp"
#include "qvoter/lattice.hpp"
#include "qvoter/rng.hpp"

namespace qvoter {

/// Sums over the (L/r)^3 disjoint cubes of side r anchored at the origin.
/// Cube c has corner (r*cx, r*cy, r*cz) with c = cx + (L/r)*cy + (L/r)^2*cz.
struct BoxSumSample {
  int r = 0;
  double lambda = 0.0;
  /// Ones per cube.
  std::vector<std::int64_t> ones;
  /// sum (xi - lambda) per cube.
  std::vector<double> raw;
  /// [lambda(1-lambda)]^{-1/2} r^{-5/2} raw.
  std::vector<double> values;
};

/// Throws std::invalid_argument if r does not divide L or lambda is not in
/// (0, 1).
BoxSumSample box_sums(const Configuration& config, int r, double lambda);

void write_box_sums_csv(std::ostream& out, std::span<const BoxSumSample> samples);

struct ScaleSample {
  int r = 0;
  /// Unnormalized box sums pooled over configurations.
  std::vector<double> sums;
};

struct VarianceFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::vector<double> log_r;
  std::vector<double> log_var;
};

/// Least-squares slope of log Var(sum) against log r. Throws for fewer than
/// three distinct r or a zero variance.
VarianceFit variance_exponent(std::span<const ScaleSample> scales);

double sample_variance(std::span<const double> xs);
/// Fourth central moment over squared variance; 3 for a normal law.
double kurtosis(std::span<const double> xs);

struct BoundaryStats {
  /// Unordered discordant neighbor pairs.
  std::uint64_t size = 0;
  std::uint64_t ones = 0;
  /// size / ones, zero when there are no ones.
  double ratio = 0.0;
};

/// Throws std::invalid_argument for an asymmetric neighborhood.
BoundaryStats boundary_stats(const Configuration& config);

/// Isoperimetric constant used for the lower bound on |boundary|.
inline constexpr double kBoundaryLowerConstant = 6.0;

/// 6 * m^{1/3}: lower bound on the boundary of m ones that do not wrap
/// around the torus.
double boundary_lower_bound(std::uint64_t ones);
/// k * min(|xi|, n - |xi|).
std::uint64_t boundary_upper_bound(const Configuration& config);

struct ExtinctionSample {
  double time = 0.0;
  bool absorbed = false;
  /// Absorbed at the all-ones state.
  bool fixed_at_one = false;
  double final_density = 0.0;
  std::uint64_t events = 0;
};

/// Per-replicate absorption times from product measure u0, censored at
/// t_max. Replicate i uses stream (seed, i).
std::vector<ExtinctionSample> extinction_ensemble(const TorusLattice& lattice,
                                                  const QVoterParams& params, double u0,
                                                  std::size_t replicates, double t_max,
                                                  std::uint64_t seed, unsigned threads = 1);

void write_extinction_csv(std::ostream& out, std::span<const ExtinctionSample> samples);

struct ProportionEstimate {
  double p = 0.0;
  double se = 0.0;
  std::uint64_t trials = 0;
};

/// Fraction of pairs of coalescing walks on Z^3, started at 0 and
/// offsets[0], still apart at time t.
ProportionEstimate non_coalescence_probability(std::span<const Vec3> offsets, double t,
                                               std::uint64_t replicates, std::uint64_t seed,
                                               unsigned threads = 1);

struct RatioEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t samples = 0;
};

/// |boundary| / |ones| averaged over voter configurations burned in from
/// product measure u. Configurations that fixated are skipped.
RatioEstimate boundary_ratio(const TorusLattice& lattice, double u, double burn_time,
                             std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

/// exp(-(2 ln 2 - 1) lambda). Throws for lambda <= 0.
double poisson_tail(double lambda);

/// Empirical P(Z >= 2 lambda) over `draws` Poisson(lambda) samples.
double poisson_tail_frequency(double lambda, std::uint64_t draws, Engine& rng);

}  // namespace qvoter
