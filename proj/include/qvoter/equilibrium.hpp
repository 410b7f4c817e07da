#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qvoter/lattice.hpp"
#include "qvoter/polynomial.hpp"
#include "qvoter/rational.hpp"
#include "qvoter/rng.hpp"

namespace qvoter {

/// Limiting partition of the walkers started at the origin and its k
/// neighbors: s0 neighbors end with the origin, the rest form clusters of the
/// listed sizes (ascending).
struct FateSignature {
  int s0 = 0;
  std::vector<int> clusters;

  int k() const;
  /// Number of clusters not containing the origin.
  int j() const { return static_cast<int>(clusters.size()); }

  /// "s0;s1,...,sj", with "k;0" when every neighbor joins the origin.
  std::string to_string() const;
  /// Inverse of to_string; sorts the cluster list. Throws
  /// std::invalid_argument on malformed text.
  static FateSignature parse(std::string_view text);

  friend bool operator==(const FateSignature&, const FateSignature&) = default;
  friend auto operator<=>(const FateSignature&, const FateSignature&) = default;
};

/// All signatures for k neighbors: an s0 part plus an integer partition of
/// k - s0.
std::vector<FateSignature> enumerate_signatures(int k);

/// Estimated (or prescribed) probabilities of coalescence fates.
class FateDistribution {
 public:
  FateDistribution() = default;

  /// Monte Carlo estimate from sample counts.
  static FateDistribution from_counts(int k, const std::map<FateSignature, std::uint64_t>& counts,
                                      double t_trunc);
  /// Prescribed exact probabilities, e.g. synthetic inputs.
  static FateDistribution from_probabilities(int k, std::map<FateSignature, Rational> probs);

  int k() const { return k_; }
  double t_trunc() const { return t_trunc_; }
  std::uint64_t samples() const { return samples_; }

  const std::map<FateSignature, Rational>& probabilities() const { return probs_; }
  Rational probability(const FateSignature& sig) const;
  std::uint64_t count(const FateSignature& sig) const;
  /// Binomial standard error; zero for prescribed distributions.
  double standard_error(const FateSignature& sig) const;

  /// Sum of probabilities equals one exactly.
  bool normalized() const;

  /// CSV with columns signature,probability,stderr,count.
  void write_csv(std::ostream& out) const;
  /// Reads write_csv output. Counts are used when present so the
  /// probabilities stay exact.
  static FateDistribution read_csv(std::istream& in, double t_trunc = 0.0);

 private:
  int k_ = 0;
  double t_trunc_ = 0.0;
  std::uint64_t samples_ = 0;
  std::map<FateSignature, Rational> probs_;
  std::map<FateSignature, std::uint64_t> counts_;
};

/// Partition of the starting labels after coalescing rate-1 walks on Z^3
/// run for time t: root label of each start. Each cluster jumps by a uniform
/// offset.
std::vector<int> coalesce_on_z3(std::span<const Vec3> starts, std::span<const Vec3> offsets,
                                double t, Engine& rng);

/// Classifies a partition of labels 0..k (label 0 the origin).
FateSignature classify_partition(std::span<const int> root_of_label);

/// Fates of the origin and its neighbors under coalescing walks on Z^3
/// truncated at t_trunc. Replicates are split into a fixed number of blocks,
/// each with its own stream, so the result does not depend on `threads`.
FateDistribution coalescence_fates(std::span<const Vec3> offsets, double t_trunc,
                                   std::uint64_t replicates, std::uint64_t seed,
                                   unsigned threads = 1);

struct TruncationRow {
  FateSignature signature;
  double p_short = 0.0;
  double p_long = 0.0;
  double se = 0.0;
};

struct TruncationCheck {
  double t_short = 0.0;
  double t_long = 0.0;
  std::vector<TruncationRow> rows;
  /// Every |p_long - p_short| <= 2 * se.
  bool passed = false;
};

/// Compares independent estimates at t and 2t.
TruncationCheck truncation_check(std::span<const Vec3> offsets, double t_trunc,
                                 std::uint64_t replicates, std::uint64_t seed, unsigned threads = 1);

/// Pure voter run from product measure of density u for burn_time. Throws
/// for u outside (0, 1) or negative burn_time.
Configuration sample_nu_u(const TorusLattice& lattice, double u, double burn_time, Engine& rng);

/// q_m, rho^0_m and rho^1_m for m = 0..k.
struct RhoTable {
  int k = 0;
  std::vector<Polynomial<Rational>> q;
  std::vector<Polynomial<Rational>> rho0;
  std::vector<Polynomial<Rational>> rho1;
};

/// Throws std::invalid_argument if the fates are not normalized.
RhoTable rho_polynomials(const FateDistribution& fates);

}  // namespace qvoter
