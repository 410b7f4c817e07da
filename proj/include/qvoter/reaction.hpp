#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qvoter/dynamics.hpp"
#include "qvoter/equilibrium.hpp"
#include "qvoter/polynomial.hpp"
#include "qvoter/rational.hpp"

namespace qvoter {

enum class Regime { q_below_one, q_above_one };

/// r_i = (i/k) ln(k/i), negated for q > 1. Throws for k < 3.
RateTable perturbation_rates(int k, Regime regime);

/// Delta_{a,b}(u) = u^a (1-u)^(b+1) - u^(b+1) (1-u)^a with its factorization
///   Delta = sign * u^e (1-u)^e (1-2u) * S(u),  S = sum_j u^j (1-u)^(d-1-j)
/// where e = min(a, b+1) and d = |b+1-a|. Zero when a = b+1.
struct DeltaTerm {
  int a = 0;
  int b = 0;
  Polynomial<Rational> poly;
  int sign = 0;
  int power = 0;
  int span = 0;
  /// u^e (1-u)^e (1-2u) S(u) without the sign.
  Polynomial<Rational> factored() const;
  /// Cofactor after removing u(1-u)(1-2u); requires power >= 1.
  Polynomial<Rational> cofactor() const;
  std::string to_string() const;
};

DeltaTerm delta_ab(int a, int b);

/// phi = sign * c_k * u(1-u)(1-2u) * f(u), with f(0) = 1.
template <class T>
struct BasicReactionTerm {
  int k = 0;
  Polynomial<T> phi;
  int sign = 1;
  T c_k = T(0);
  Polynomial<T> f;
  /// phi with every rate set to the unit vector e_m, before and after
  /// dividing by u(1-u)(1-2u); index m = 0..k.
  std::vector<Polynomial<Rational>> phi_parts;
  std::vector<Polynomial<Rational>> cofactor_parts;
  /// min of f over the grid i/1000.
  double f_grid_min = 0.0;

  bool f_positive() const { return f_grid_min > 0.0; }
  double operator()(double u) const { return phi.eval(u); }
};

using ReactionTerm = BasicReactionTerm<double>;
using ExactReactionTerm = BasicReactionTerm<Rational>;

/// phi_m = sum over fates and opinion assignments with 1-clusters of total
/// size m of p * Delta_{a,b}. Throws std::runtime_error if some phi_m is not
/// divisible by u(1-u)(1-2u).
std::vector<Polynomial<Rational>> phi_parts(const FateDistribution& fates);

ReactionTerm phi_from_fates(const FateDistribution& fates, const RateTable& rates);
ExactReactionTerm phi_from_fates(const FateDistribution& fates, const std::vector<Rational>& rates);

/// Floating-point factorization of an arbitrary phi. The remainder after
/// division must stay below 1e-12 * ||phi||_1; otherwise std::runtime_error.
ReactionTerm factor_reaction(int k, const Polynomial<double>& phi);

/// k = 3 closed form
///   phi / (u(1-u)(1-2u)) = r1 [2 p(1;1,1) + p(0;2,1) + 3 p(0;1,1,1)]
///                        + r2 [p(0;2,1) - p(1;1,1)].
struct K3Fates {
  Rational p_1_11 = 0;
  Rational p_0_21 = 0;
  Rational p_0_111 = 0;
};

K3Fates k3_fates(const FateDistribution& fates);
ReactionTerm phi_k3_explicit(const K3Fates& p, const RateTable& rates);
ExactReactionTerm phi_k3_explicit(const K3Fates& p, const std::vector<Rational>& rates);

/// Grouped coefficient of Delta_{b+1,a-1} for one signature and a >= b+2:
///   margin = sum over cluster subsets of size b+1 of r(total size)
///          - sum over subsets of size a of r(total size).
struct StructuralMargin {
  FateSignature signature;
  int a = 0;
  int b = 0;
  double margin = 0.0;
};

/// Margins for every signature of k and every pairing; k <= 12.
std::vector<StructuralMargin> structural_margins(int k, const std::vector<double>& rates);

/// CSV with columns term,power,value: rows sign, c_k, then phi and f
/// coefficients.
void write_reaction_csv(std::ostream& out, const ReactionTerm& term);
/// "+c * u(1-u)(1-2u) * [f]"
std::string factored_string(const ReactionTerm& term);

}  // namespace qvoter
