#include "qvoter/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qvoter/csv.hpp"

namespace qvoter {

RateTable perturbation_rates(int k, Regime regime) {
  if (k < 3) throw std::invalid_argument("perturbation rates need k >= 3");
  std::vector<double> r(static_cast<std::size_t>(k) + 1, 0.0);
  const double sign = regime == Regime::q_below_one ? 1.0 : -1.0;
  for (int i = 1; i < k; ++i) {
    const double x = static_cast<double>(i) / k;
    r[static_cast<std::size_t>(i)] = sign * x * std::log(1.0 / x);
  }
  return RateTable(k, std::move(r));
}

namespace {

using RPoly = Polynomial<Rational>;

RPoly one_minus_two_u() { return RPoly(std::vector<Rational>{1, -2}); }

// sum_{j=0}^{d-1} u^j (1-u)^(d-1-j)
RPoly telescoped(int d) {
  RPoly s;
  for (int j = 0; j < d; ++j) s += RPoly::basis(j, d - 1 - j);
  return s;
}

}  // namespace

DeltaTerm delta_ab(int a, int b) {
  if (a < 0 || b < 0) throw std::invalid_argument("Delta_{a,b} needs a, b >= 0");
  DeltaTerm t;
  t.a = a;
  t.b = b;
  t.poly = RPoly::basis(a, b + 1) - RPoly::basis(b + 1, a);
  t.power = std::min(a, b + 1);
  t.span = std::abs(b + 1 - a);
  t.sign = a <= b ? 1 : (a == b + 1 ? 0 : -1);
  return t;
}

Polynomial<Rational> DeltaTerm::factored() const {
  if (sign == 0) return {};
  return RPoly::basis(power, power) * one_minus_two_u() * telescoped(span);
}

Polynomial<Rational> DeltaTerm::cofactor() const {
  if (power < 1) throw std::domain_error("Delta_{0,b} has no u(1-u) factor");
  if (sign == 0) return {};
  return RPoly::basis(power - 1, power - 1) * telescoped(span);
}

std::string DeltaTerm::to_string() const {
  std::string head = "Delta_{" + std::to_string(a) + "," + std::to_string(b) + "} = ";
  if (sign == 0) return head + "0";
  std::string out = head + (sign > 0 ? "+" : "-");
  out += "u^" + std::to_string(power) + "(1-u)^" + std::to_string(power) + "(1-2u)";
  if (span > 1) {
    out += "[";
    for (int j = 0; j < span; ++j) {
      if (j) out += " + ";
      out += "u^" + std::to_string(j) + "(1-u)^" + std::to_string(span - 1 - j);
    }
    out += "]";
  }
  return out;
}

std::vector<Polynomial<Rational>> phi_parts(const FateDistribution& fates) {
  const int k = fates.k();
  if (k > 12) throw std::invalid_argument("exact assembly is limited to k <= 12");
  std::vector<RPoly> parts(static_cast<std::size_t>(k) + 1);
  std::map<std::pair<int, int>, RPoly> cache;
  for (const auto& [sig, p] : fates.probabilities()) {
    if (p == 0) continue;
    const int j = sig.j();
    for (std::uint32_t mask = 0; mask < (1U << j); ++mask) {
      int a = 0;
      int m = 0;
      for (int c = 0; c < j; ++c) {
        if (mask >> c & 1U) {
          ++a;
          m += sig.clusters[static_cast<std::size_t>(c)];
        }
      }
      if (m == 0) continue;
      auto it = cache.find({a, j - a});
      if (it == cache.end()) it = cache.emplace(std::pair{a, j - a}, delta_ab(a, j - a).poly).first;
      parts[static_cast<std::size_t>(m)] += it->second * p;
    }
  }
  return parts;
}

namespace {

std::vector<RPoly> divide_parts(const std::vector<RPoly>& parts) {
  const RPoly cubic = cubic_root_factor<Rational>();
  std::vector<RPoly> out(parts.size());
  for (std::size_t m = 1; m < parts.size(); ++m) {
    auto [quot, rem] = divide(parts[m], cubic);
    if (!rem.is_zero()) {
      throw std::runtime_error("phi_" + std::to_string(m) +
                               " is not divisible by u(1-u)(1-2u): remainder " + rem.to_string());
    }
    if (quot(Rational(0)) != quot(Rational(1))) {
      throw std::runtime_error("cofactor of phi_" + std::to_string(m) + " differs at 0 and 1");
    }
    out[m] = std::move(quot);
  }
  return out;
}

template <class T>
double grid_min(const Polynomial<T>& f) {
  double lo = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) lo = std::min(lo, f.eval(i / 1000.0));
  return lo;
}

template <class T>
void normalize(BasicReactionTerm<T>& term, const Polynomial<T>& g) {
  const T g0 = g(T(0));
  if (g0 == T(0)) {
    term.sign = 1;
    term.c_k = T(0);
    term.f = Polynomial<T>::constant(T(1));
  } else {
    term.sign = g0 > T(0) ? 1 : -1;
    term.c_k = term.sign > 0 ? g0 : T(-g0);
    term.f = g * T(T(1) / g0);
  }
  term.f_grid_min = grid_min(term.f);
}

}  // namespace

ReactionTerm phi_from_fates(const FateDistribution& fates, const RateTable& rates) {
  if (rates.k() != fates.k()) throw std::invalid_argument("fates and rates disagree on k");
  ReactionTerm term;
  term.k = fates.k();
  term.phi_parts = phi_parts(fates);
  term.cofactor_parts = divide_parts(term.phi_parts);
  Polynomial<double> g;
  for (int m = 1; m <= term.k; ++m) {
    const double r = rates[m];
    if (r == 0.0) continue;
    term.phi += term.phi_parts[static_cast<std::size_t>(m)].cast<double>() * r;
    g += term.cofactor_parts[static_cast<std::size_t>(m)].cast<double>() * r;
  }
  normalize(term, g);
  return term;
}

ExactReactionTerm phi_from_fates(const FateDistribution& fates, const std::vector<Rational>& rates) {
  if (rates.size() != static_cast<std::size_t>(fates.k()) + 1) {
    throw std::invalid_argument("rate vector must have k+1 entries");
  }
  if (rates[0] != 0) throw std::invalid_argument("rate vector requires r_0 = 0");
  ExactReactionTerm term;
  term.k = fates.k();
  term.phi_parts = phi_parts(fates);
  for (std::size_t m = 1; m < rates.size(); ++m) term.phi += term.phi_parts[m] * rates[m];
  auto [g, rem] = divide(term.phi, cubic_root_factor<Rational>());
  if (!rem.is_zero()) {
    throw std::runtime_error("phi is not divisible by u(1-u)(1-2u): remainder " + rem.to_string());
  }
  term.cofactor_parts = divide_parts(term.phi_parts);
  normalize(term, g);
  return term;
}

ReactionTerm factor_reaction(int k, const Polynomial<double>& phi) {
  ReactionTerm term;
  term.k = k;
  term.phi = phi;
  auto [g, rem] = divide(phi, cubic_root_factor<double>());
  if (rem.l1_norm() > 1e-12 * phi.l1_norm()) {
    throw std::runtime_error("phi is not divisible by u(1-u)(1-2u): remainder " + rem.to_string());
  }
  normalize(term, g);
  return term;
}

K3Fates k3_fates(const FateDistribution& fates) {
  if (fates.k() != 3) throw std::invalid_argument("k3_fates needs k = 3");
  K3Fates p;
  p.p_1_11 = fates.probability(FateSignature{1, {1, 1}});
  p.p_0_21 = fates.probability(FateSignature{0, {1, 2}});
  p.p_0_111 = fates.probability(FateSignature{0, {1, 1, 1}});
  return p;
}

namespace {

template <class T>
BasicReactionTerm<T> k3_term(const K3Fates& p, const T& r1, const T& r2) {
  auto conv = [](const Rational& x) {
    if constexpr (std::is_same_v<T, double>) {
      return to_double(x);
    } else {
      return x;
    }
  };
  const T g = r1 * (T(2) * conv(p.p_1_11) + conv(p.p_0_21) + T(3) * conv(p.p_0_111)) +
              r2 * (conv(p.p_0_21) - conv(p.p_1_11));
  BasicReactionTerm<T> term;
  term.k = 3;
  term.phi = cubic_root_factor<T>() * g;
  normalize(term, Polynomial<T>::constant(g));
  return term;
}

}  // namespace

ReactionTerm phi_k3_explicit(const K3Fates& p, const RateTable& rates) {
  if (rates.k() != 3) throw std::invalid_argument("k = 3 closed form needs a k = 3 rate table");
  return k3_term<double>(p, rates[1], rates[2]);
}

ExactReactionTerm phi_k3_explicit(const K3Fates& p, const std::vector<Rational>& rates) {
  if (rates.size() != 4) throw std::invalid_argument("k = 3 closed form needs r_0..r_3");
  return k3_term<Rational>(p, rates[1], rates[2]);
}

std::vector<StructuralMargin> structural_margins(int k, const std::vector<double>& rates) {
  if (k > 12) throw std::invalid_argument("structural check is limited to k <= 12");
  if (rates.size() != static_cast<std::size_t>(k) + 1) {
    throw std::invalid_argument("rate vector must have k+1 entries");
  }
  std::vector<StructuralMargin> out;
  for (const auto& sig : enumerate_signatures(k)) {
    const int j = sig.j();
    std::vector<double> by_count(static_cast<std::size_t>(j) + 1, 0.0);
    for (std::uint32_t mask = 0; mask < (1U << j); ++mask) {
      int a = 0;
      int m = 0;
      for (int c = 0; c < j; ++c) {
        if (mask >> c & 1U) {
          ++a;
          m += sig.clusters[static_cast<std::size_t>(c)];
        }
      }
      by_count[static_cast<std::size_t>(a)] += rates[static_cast<std::size_t>(m)];
    }
    for (int a = 0; a <= j; ++a) {
      const int b = j - a;
      if (a < b + 2) continue;
      out.push_back(StructuralMargin{sig, a, b,
                                     by_count[static_cast<std::size_t>(b + 1)] -
                                         by_count[static_cast<std::size_t>(a)]});
    }
  }
  return out;
}

void write_reaction_csv(std::ostream& out, const ReactionTerm& term) {
  CsvWriter csv(out);
  csv.header({"term", "power", "value"});
  csv.field("sign").field("").field(term.sign);
  csv.end_row();
  csv.field("c_k").field("").field(term.c_k);
  csv.end_row();
  const auto& phi = term.phi.coefficients();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    csv.field("phi").field(static_cast<std::uint64_t>(i)).field(phi[i]);
    csv.end_row();
  }
  const auto& f = term.f.coefficients();
  for (std::size_t i = 0; i < f.size(); ++i) {
    csv.field("f").field(static_cast<std::uint64_t>(i)).field(f[i]);
    csv.end_row();
  }
}

std::string factored_string(const ReactionTerm& term) {
  return std::string(term.sign > 0 ? "+" : "-") + format_real(term.c_k) + " * u(1-u)(1-2u) * [" +
         term.f.to_string() + "]";
}

}  // namespace qvoter
