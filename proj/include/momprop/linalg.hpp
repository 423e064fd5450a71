#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "momprop/errors.hpp"

namespace momprop {

using Vec = std::vector<double>;

/// Small dense row-major matrix of doubles. Value semantics throughout;
/// everything in this project is desk scale (n up to a few hundred).
class Mat {
public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(rows.size(), rows.size() == 0 ? 0 : rows.begin()->size());
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != m.cols_) throw DimensionMismatch("ragged matrix initializer");
      std::size_t j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * cols_ + j]; }

  friend bool operator==(const Mat& a, const Mat& b) = default;

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

inline Mat symmetrized(const Mat& a) {
  if (!a.square()) throw DimensionMismatch("symmetrized: matrix must be square");
  Mat s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

inline double max_abs_asymmetry(const Mat& a) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
  return worst;
}

inline Mat scaled(const Mat& a, double s) {
  Mat r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
  return r;
}

inline double max_diagonal(const Mat& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) m = std::max(m, a(i, i));
  return m;
}

inline double trace(const Mat& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

/// Cholesky factorization with pivot clamping for semidefinite input.
///
/// Pivots below -pivot_tol fail; pivots in [-pivot_tol, 0] are treated as an
/// exact rank deficiency: the factor's column is zeroed, which is only
/// legitimate if the remaining column of the Schur complement is itself
/// (near) zero -- that residual is checked against column_tol. The returned
/// L is lower triangular with L*L^T reproducing the input, rank-deficient
/// columns zero.
inline Mat cholesky_lower(const Mat& a, double pivot_tol, double column_tol) {
  if (!a.square()) throw DimensionMismatch("cholesky: matrix must be square");
  const std::size_t n = a.rows();
  Mat L(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    double s = a(k, k);
    for (std::size_t j = 0; j < k; ++j) s -= L(k, j) * L(k, j);
    if (s < -pivot_tol) {
      throw NotPsdError("matrix is not positive semidefinite (pivot " + std::to_string(s) +
                            " at index " + std::to_string(k) + ")",
                        s);
    }
    if (s <= 0.0) {
      L(k, k) = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) {
        double r = a(i, k);
        for (std::size_t j = 0; j < k; ++j) r -= L(i, j) * L(k, j);
        if (std::abs(r) > column_tol) {
          throw NotPsdError("matrix is not positive semidefinite (zero pivot at index " +
                                std::to_string(k) + " with nonzero column residual " +
                                std::to_string(r) + ")",
                            s);
        }
        L(i, k) = 0.0;
      }
    } else {
      const double d = std::sqrt(s);
      L(k, k) = d;
      for (std::size_t i = k + 1; i < n; ++i) {
        double r = a(i, k);
        for (std::size_t j = 0; j < k; ++j) r -= L(i, j) * L(k, j);
        L(i, k) = r / d;
      }
    }
  }
  return L;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares fit y = slope*x + intercept. Needs >= 2 points.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("fit_line: size mismatch");
  if (x.size() < 2) throw InsufficientSamples("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_line: degenerate abscissas");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace momprop
