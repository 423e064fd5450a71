#pragma once

#include <cmath>
#include <string>

#include "momprop/errors.hpp"

namespace momprop {

namespace detail {

inline double finite_or_domain_error(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string("non-finite intermediate in ") + what);
  return x;
}

// Exponentiation by squaring, k >= 0. One fixed multiply order so results do
// not depend on the platform's libm.
inline double pow_unsigned_int(double base, long long k) {
  double result = 1.0;
  double b = base;
  while (k > 0) {
    if (k & 1) result *= b;
    k >>= 1;
    if (k > 0) b *= b;
  }
  return result;
}

inline bool is_small_int(double x, long long& out) {
  if (!(std::abs(x) <= 16.0) || x != std::floor(x)) return false;
  out = static_cast<long long>(x);
  return true;
}

}  // namespace detail

/// base^exponent with a deterministic fast path: integer exponents of
/// magnitude <= 16 go through repeated squaring. Negative base with a
/// fractional exponent, and any overflow, surface as DomainError.
inline double checked_pow(double base, double exponent) {
  long long k = 0;
  if (detail::is_small_int(exponent, k)) {
    if (k == 0) return 1.0;
    double r = detail::pow_unsigned_int(base, k < 0 ? -k : k);
    if (k < 0) r = 1.0 / r;
    return detail::finite_or_domain_error(r, "pow");
  }
  return detail::finite_or_domain_error(std::pow(base, exponent), "pow");
}

// Evaluation primitives for plain doubles. The tree walker, the compiled
// tape, and the value slots of the dual types all route through these, so a
// given expression produces bit-identical values on every path.

inline double ev_add(double a, double b) { return detail::finite_or_domain_error(a + b, "addition"); }
inline double ev_sub(double a, double b) { return detail::finite_or_domain_error(a - b, "subtraction"); }
inline double ev_mul(double a, double b) { return detail::finite_or_domain_error(a * b, "multiplication"); }

inline double ev_div(double a, double b) {
  if (b == 0.0) throw DomainError("division by zero");
  return detail::finite_or_domain_error(a / b, "division");
}

inline double ev_pow(double a, double b) { return checked_pow(a, b); }

inline double ev_neg(double a) { return -a; }
inline double ev_sin(double a) { return std::sin(a); }
inline double ev_cos(double a) { return std::cos(a); }
inline double ev_tanh(double a) { return std::tanh(a); }

inline double ev_exp(double a) { return detail::finite_or_domain_error(std::exp(a), "exp"); }

inline double ev_log(double a) {
  if (a <= 0.0) throw DomainError("log of a non-positive value");
  return std::log(a);
}

inline double ev_sqrt(double a) {
  if (a < 0.0) throw DomainError("sqrt of a negative value");
  return std::sqrt(a);
}

}  // namespace momprop
