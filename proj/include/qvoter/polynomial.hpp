#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qvoter/rational.hpp"

namespace qvoter {

/// Polynomial in u over the monomial basis, coefficient i multiplying u^i.
/// T is Rational for exact work or double for floating point work. Trailing
/// zero coefficients are always trimmed; the zero polynomial has no
/// coefficients.
template <class T>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<T> coeffs) : c_(std::move(coeffs)) { trim(); }

  static Polynomial constant(T value) { return Polynomial(std::vector<T>{std::move(value)}); }

  static Polynomial u() { return Polynomial(std::vector<T>{T(0), T(1)}); }

  /// u^a (1-u)^b
  static Polynomial basis(int a, int b) {
    Polynomial p = constant(T(1));
    const Polynomial one_minus(std::vector<T>{T(1), T(-1)});
    for (int i = 0; i < a; ++i) p = p * u();
    for (int i = 0; i < b; ++i) p = p * one_minus;
    return p;
  }

  const std::vector<T>& coefficients() const { return c_; }
  T coefficient(std::size_t i) const { return i < c_.size() ? c_[i] : T(0); }
  bool is_zero() const { return c_.empty(); }
  /// Degree; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }

  template <class X>
  X operator()(const X& x) const {
    X acc(0);
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + X(*it);
    return acc;
  }

  double eval(double x) const {
    double acc = 0.0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + to_double(*it);
    return acc;
  }

  /// p(1 - u)
  Polynomial reflect() const {
    Polynomial out;
    const Polynomial one_minus(std::vector<T>{T(1), T(-1)});
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) {
      out = out * one_minus + constant(*it);
    }
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
    trim();
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
    for (std::size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
    trim();
    return *this;
  }
  Polynomial& operator*=(const T& s) {
    for (auto& v : c_) v *= s;
    trim();
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const T& s) { return a *= s; }
  friend Polynomial operator*(const T& s, Polynomial a) { return a *= s; }
  friend Polynomial operator-(Polynomial a) { return a *= T(-1); }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<T> out(a.c_.size() + b.c_.size() - 1, T(0));
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
      for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
    }
    return Polynomial(std::move(out));
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.c_ == b.c_; }

  /// Sum of absolute coefficient values.
  double l1_norm() const {
    double s = 0.0;
    for (const auto& v : c_) s += std::abs(to_double(v));
    return s;
  }

  template <class U>
  Polynomial<U> cast() const {
    std::vector<U> out;
    out.reserve(c_.size());
    for (const auto& v : c_) out.push_back(static_cast<U>(v));
    return Polynomial<U>(std::move(out));
  }

  std::string to_string() const {
    if (c_.empty()) return "0";
    std::ostringstream ss;
    ss.precision(17);
    bool first = true;
    for (std::size_t i = 0; i < c_.size(); ++i) {
      if (c_[i] == T(0)) continue;
      if (!first) ss << " + ";
      ss << "(" << c_[i] << ")";
      if (i >= 1) ss << "*u";
      if (i >= 2) ss << "^" << i;
      first = false;
    }
    return ss.str();
  }

 private:
  void trim() {
    while (!c_.empty() && c_.back() == T(0)) c_.pop_back();
  }

  std::vector<T> c_;
};

template <class T>
struct PolynomialDivision {
  Polynomial<T> quotient;
  Polynomial<T> remainder;
};

/// Long division num = quotient * den + remainder with deg(remainder) <
/// deg(den).
template <class T>
PolynomialDivision<T> divide(const Polynomial<T>& num, const Polynomial<T>& den) {
  if (den.is_zero()) throw std::domain_error("polynomial division by zero");
  std::vector<T> rem = num.coefficients();
  const auto& d = den.coefficients();
  const std::size_t dn = d.size();
  if (rem.size() < dn) return {Polynomial<T>{}, num};
  std::vector<T> quot(rem.size() - dn + 1, T(0));
  for (std::size_t i = quot.size(); i-- > 0;) {
    const T factor = rem[i + dn - 1] / d.back();
    quot[i] = factor;
    for (std::size_t j = 0; j < dn; ++j) rem[i + j] -= factor * d[j];
    rem[i + dn - 1] = T(0);
  }
  rem.resize(dn - 1);
  return {Polynomial<T>(std::move(quot)), Polynomial<T>(std::move(rem))};
}

/// u(1-u)(1-2u) = u - 3u^2 + 2u^3
template <class T>
Polynomial<T> cubic_root_factor() {
  return Polynomial<T>(std::vector<T>{T(0), T(1), T(-3), T(2)});
}

}  // namespace qvoter
