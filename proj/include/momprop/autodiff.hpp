#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "momprop/errors.hpp"
#include "momprop/expr.hpp"
#include "momprop/linalg.hpp"
#include "momprop/value_ops.hpp"

namespace momprop {

/// First-order dual number: value and one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value) {}  // lifts constants, derivative zero
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

/// Second-order (hyper-dual style) number tracking two directions and the
/// mixed second derivative. One evaluation seeded with directions e_i, e_j
/// yields the exact Hessian entry d2f/dx_i dx_j in d12.
struct HyperDual {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d12 = 0.0;

  HyperDual() = default;
  HyperDual(double value) : v(value) {}
};

namespace detail {

inline Dual checked_dual(double v, double d, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite intermediate in ") + what);
  if (!std::isfinite(d)) {
    throw NonFiniteError(std::string("non-finite derivative in ") + what);
  }
  return {v, d};
}

inline HyperDual checked_hyper(double v, double d1, double d2, double d12, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite intermediate in ") + what);
  if (!std::isfinite(d1) || !std::isfinite(d2) || !std::isfinite(d12)) {
    throw NonFiniteError(std::string("non-finite derivative in ") + what);
  }
  HyperDual r;
  r.v = v;
  r.d1 = d1;
  r.d2 = d2;
  r.d12 = d12;
  return r;
}

// Chain rule for a scalar function g applied to a hyper-dual argument,
// given g(u.v), g'(u.v), g''(u.v).
inline HyperDual hyper_apply(const HyperDual& u, double g0, double g1, double g2,
                             const char* what) {
  return checked_hyper(g0, g1 * u.d1, g1 * u.d2, g2 * u.d1 * u.d2 + g1 * u.d12, what);
}

}  // namespace detail

// ---- Dual arithmetic --------------------------------------------------------

inline Dual ev_add(const Dual& a, const Dual& b) {
  return detail::checked_dual(a.v + b.v, a.d + b.d, "addition");
}
inline Dual ev_sub(const Dual& a, const Dual& b) {
  return detail::checked_dual(a.v - b.v, a.d - b.d, "subtraction");
}
inline Dual ev_mul(const Dual& a, const Dual& b) {
  return detail::checked_dual(a.v * b.v, a.v * b.d + a.d * b.v, "multiplication");
}
inline Dual ev_div(const Dual& a, const Dual& b) {
  if (b.v == 0.0) throw DomainError("division by zero");
  const double q = a.v / b.v;
  return detail::checked_dual(q, (a.d - q * b.d) / b.v, "division");
}
inline Dual ev_neg(const Dual& a) { return {-a.v, -a.d}; }
inline Dual ev_sin(const Dual& a) {
  return detail::checked_dual(std::sin(a.v), std::cos(a.v) * a.d, "sin");
}
inline Dual ev_cos(const Dual& a) {
  return detail::checked_dual(std::cos(a.v), -std::sin(a.v) * a.d, "cos");
}
inline Dual ev_exp(const Dual& a) {
  const double e = std::exp(a.v);
  return detail::checked_dual(e, e * a.d, "exp");
}
inline Dual ev_log(const Dual& a) {
  if (a.v <= 0.0) throw DomainError("log of a non-positive value");
  return detail::checked_dual(std::log(a.v), a.d / a.v, "log");
}
inline Dual ev_sqrt(const Dual& a) {
  if (a.v < 0.0) throw DomainError("sqrt of a negative value");
  const double s = std::sqrt(a.v);
  return detail::checked_dual(s, a.d / (2.0 * s), "sqrt");
}
inline Dual ev_tanh(const Dual& a) {
  const double t = std::tanh(a.v);
  return detail::checked_dual(t, (1.0 - t * t) * a.d, "tanh");
}

inline Dual ev_pow(const Dual& a, const Dual& b) {
  if (b.d == 0.0) {
    // exponent constant along this direction: power rule, valid for
    // negative bases with integer exponents
    const double k = b.v;
    if (k == 0.0) return Dual{1.0, 0.0};
    const double val = checked_pow(a.v, k);
    return detail::checked_dual(val, k * checked_pow(a.v, k - 1.0) * a.d, "pow");
  }
  if (a.v <= 0.0) throw DomainError("pow of a non-positive base with a varying exponent");
  const double val = checked_pow(a.v, b.v);
  const double lg = std::log(a.v);
  return detail::checked_dual(val, val * (b.d * lg + b.v * a.d / a.v), "pow");
}

// ---- HyperDual arithmetic ---------------------------------------------------

inline HyperDual ev_add(const HyperDual& a, const HyperDual& b) {
  return detail::checked_hyper(a.v + b.v, a.d1 + b.d1, a.d2 + b.d2, a.d12 + b.d12, "addition");
}
inline HyperDual ev_sub(const HyperDual& a, const HyperDual& b) {
  return detail::checked_hyper(a.v - b.v, a.d1 - b.d1, a.d2 - b.d2, a.d12 - b.d12, "subtraction");
}
inline HyperDual ev_mul(const HyperDual& a, const HyperDual& b) {
  return detail::checked_hyper(a.v * b.v,
                               a.v * b.d1 + a.d1 * b.v,
                               a.v * b.d2 + a.d2 * b.v,
                               a.v * b.d12 + a.d1 * b.d2 + a.d2 * b.d1 + a.d12 * b.v,
                               "multiplication");
}
inline HyperDual ev_div(const HyperDual& a, const HyperDual& b) {
  if (b.v == 0.0) throw DomainError("division by zero");
  const double inv = 1.0 / b.v;
  return ev_mul(a, detail::hyper_apply(b, inv, -inv * inv, 2.0 * inv * inv * inv, "division"));
}
inline HyperDual ev_neg(const HyperDual& a) {
  HyperDual r;
  r.v = -a.v;
  r.d1 = -a.d1;
  r.d2 = -a.d2;
  r.d12 = -a.d12;
  return r;
}
inline HyperDual ev_sin(const HyperDual& a) {
  const double s = std::sin(a.v);
  return detail::hyper_apply(a, s, std::cos(a.v), -s, "sin");
}
inline HyperDual ev_cos(const HyperDual& a) {
  const double c = std::cos(a.v);
  return detail::hyper_apply(a, c, -std::sin(a.v), -c, "cos");
}
inline HyperDual ev_exp(const HyperDual& a) {
  const double e = std::exp(a.v);
  return detail::hyper_apply(a, e, e, e, "exp");
}
inline HyperDual ev_log(const HyperDual& a) {
  if (a.v <= 0.0) throw DomainError("log of a non-positive value");
  const double inv = 1.0 / a.v;
  return detail::hyper_apply(a, std::log(a.v), inv, -inv * inv, "log");
}
inline HyperDual ev_sqrt(const HyperDual& a) {
  if (a.v < 0.0) throw DomainError("sqrt of a negative value");
  const double s = std::sqrt(a.v);
  return detail::hyper_apply(a, s, 0.5 / s, -0.25 / (s * a.v), "sqrt");
}
inline HyperDual ev_tanh(const HyperDual& a) {
  const double t = std::tanh(a.v);
  const double sech2 = 1.0 - t * t;
  return detail::hyper_apply(a, t, sech2, -2.0 * t * sech2, "tanh");
}

inline HyperDual ev_pow(const HyperDual& a, const HyperDual& b) {
  if (b.d1 == 0.0 && b.d2 == 0.0 && b.d12 == 0.0) {
    const double k = b.v;
    if (k == 0.0) return HyperDual{1.0};
    const double val = checked_pow(a.v, k);
    const double first = k * checked_pow(a.v, k - 1.0);
    // k == 1 would otherwise manufacture 0 * inf at a.v == 0
    const double second = (k == 1.0) ? 0.0 : k * (k - 1.0) * checked_pow(a.v, k - 2.0);
    return detail::checked_hyper(val, first * a.d1, first * a.d2,
                                 second * a.d1 * a.d2 + first * a.d12, "pow");
  }
  if (a.v <= 0.0) throw DomainError("pow of a non-positive base with a varying exponent");
  return ev_exp(ev_mul(b, ev_log(a)));
}

// ---- derivative drivers -----------------------------------------------------

/// Value, gradient, and exactly-symmetric Hessian of f at one point.
struct Derivatives {
  double value = 0.0;
  Vec gradient;
  Mat hessian;
};

namespace detail {

inline void require_finite_point(std::span<const double> point) {
  for (double x : point) {
    if (!std::isfinite(x)) throw DomainError("non-finite input coordinate");
  }
}

}  // namespace detail

/// Exact gradient by one forward dual pass per coordinate.
inline Vec gradient(const Expression& f, std::span<const double> point) {
  detail::require_finite_point(point);
  const std::size_t n = point.size();
  std::vector<Dual> vars(n);
  for (std::size_t j = 0; j < n; ++j) vars[j] = Dual(point[j], 0.0);
  Vec g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    vars[i].d = 1.0;
    g[i] = evaluate_with<Dual>(f, vars).d;
    vars[i].d = 0.0;
  }
  return g;
}

/// Exact Hessian: one hyper-dual pass per unordered index pair. Both
/// (i, j) and (j, i) slots receive the same double, so symmetry is exact.
inline Mat hessian(const Expression& f, std::span<const double> point) {
  detail::require_finite_point(point);
  const std::size_t n = point.size();
  std::vector<HyperDual> vars(n);
  for (std::size_t j = 0; j < n; ++j) vars[j].v = point[j];
  Mat h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      vars[i].d1 = 1.0;
      vars[j].d2 = 1.0;
      const double hij = evaluate_with<HyperDual>(f, vars).d12;
      h(i, j) = hij;
      h(j, i) = hij;
      vars[i].d1 = 0.0;
      vars[j].d2 = 0.0;
    }
  }
  return h;
}

inline Derivatives full_derivatives(const Expression& f, std::span<const double> point) {
  Derivatives d;
  d.value = evaluate(f, point);
  d.gradient = gradient(f, point);
  d.hessian = hessian(f, point);
  return d;
}

/// Result of comparing the dual-number engine against central differences.
struct FdReport {
  double max_gradient_discrepancy = 0.0;
  double max_hessian_discrepancy = 0.0;
};

/// Independent cross-check of the forward-mode engine. Gradient entries are
/// compared against (f(x+h e_i) - f(x-h e_i)) / 2h; Hessian entries against
/// the 4-point cross stencil over h in both directions (for i == j this is
/// the central second difference with step 2h). DomainError propagates if
/// any stencil point leaves f's domain.
inline FdReport fd_check(const Expression& f, std::span<const double> point, double step) {
  if (!(step > 0.0)) throw PreconditionViolation("fd_check: step must be positive");
  detail::require_finite_point(point);
  const std::size_t n = point.size();
  const Vec g = gradient(f, point);
  const Mat h = hessian(f, point);

  Vec p(point.begin(), point.end());
  FdReport report;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = point[i] + step;
    const double fp = evaluate(f, p);
    p[i] = point[i] - step;
    const double fm = evaluate(f, p);
    p[i] = point[i];
    const double fd = (fp - fm) / (2.0 * step);
    report.max_gradient_discrepancy =
        std::max(report.max_gradient_discrepancy, std::abs(fd - g[i]));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto f_shifted = [&](double si, double sj) {
        p[i] += si;
        p[j] += sj;
        const double r = evaluate(f, p);
        p[i] = point[i];
        p[j] = point[j];
        return r;
      };
      const double fd = (f_shifted(step, step) - f_shifted(step, -step) -
                         f_shifted(-step, step) + f_shifted(-step, -step)) /
                        (4.0 * step * step);
      report.max_hessian_discrepancy =
          std::max(report.max_hessian_discrepancy, std::abs(fd - h(i, j)));
    }
  }
  return report;
}

}  // namespace momprop
