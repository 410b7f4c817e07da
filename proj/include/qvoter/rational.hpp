#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace qvoter {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double r) { return r; }

}  // namespace qvoter
