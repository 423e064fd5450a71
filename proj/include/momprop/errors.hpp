#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace momprop {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression source. Carries the byte offset of the offending
/// token and the set of tokens that would have been accepted there.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset, std::vector<std::string> expected)
      : Error(what), offset_(offset), expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
  std::size_t offset_ = 0;
  std::vector<std::string> expected_;
};

/// Evaluation left the domain of a function: log of a non-positive value,
/// division by zero, sqrt of a negative value, or a non-finite intermediate.
class DomainError : public Error {
public:
  using Error::Error;
};

/// A derivative component overflowed or became indeterminate (0 times inf
/// style propagation through a dual part).
class NonFiniteError : public Error {
public:
  using Error::Error;
};

/// Vector/matrix shapes do not agree.
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// A matrix required to be positive semidefinite is not.
class NotPsdError : public Error {
public:
  NotPsdError(const std::string& what, double worst_pivot)
      : Error(what), worst_pivot_(worst_pivot) {}

  double worst_pivot() const noexcept { return worst_pivot_; }

private:
  double worst_pivot_ = 0.0;
};

/// A sampling family's structural constraint is violated (for instance a
/// non-diagonal covariance with an independent-coordinates family).
class FamilyConstraintError : public Error {
public:
  using Error::Error;
};

/// An operation's stated precondition does not hold.
class PreconditionViolation : public Error {
public:
  using Error::Error;
};

/// Fewer samples than the estimator needs.
class InsufficientSamples : public Error {
public:
  using Error::Error;
};

/// A job configuration is missing fields or holds values of the wrong shape.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Domain failure during Monte Carlo accumulation; reports which sample of
/// the deterministic stream failed and the point that was being evaluated.
class McDomainError : public DomainError {
public:
  McDomainError(const std::string& what, std::uint64_t sample_index, std::vector<double> point)
      : DomainError(what), sample_index_(sample_index), point_(std::move(point)) {}

  std::uint64_t sample_index() const noexcept { return sample_index_; }
  const std::vector<double>& point() const noexcept { return point_; }

private:
  std::uint64_t sample_index_ = 0;
  std::vector<double> point_;
};

}  // namespace momprop
