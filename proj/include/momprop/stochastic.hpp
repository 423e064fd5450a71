#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "momprop/errors.hpp"
#include "momprop/linalg.hpp"
#include "momprop/rng.hpp"

namespace momprop {

/// Sampling families. All three share whatever first and second moments the
/// model declares; the estimators under test depend on nothing else.
enum class Family { gaussian, symmetric_two_point, uniform };

inline std::string_view family_name(Family f) {
  switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::symmetric_two_point: return "symmetric-two-point";
    case Family::uniform: return "uniform";
  }
  return "?";
}

inline Family family_from_name(std::string_view s) {
  if (s == "gaussian") return Family::gaussian;
  if (s == "symmetric-two-point") return Family::symmetric_two_point;
  if (s == "uniform") return Family::uniform;
  throw ConfigError("unknown sampling family '" + std::string(s) +
                    "' (expected gaussian, symmetric-two-point, or uniform)");
}

// Relative pivot tolerance for the semidefiniteness check; user-entered
// covariances are rounded, so small negative pivots are clamped to zero.
inline constexpr double kPsdPivotTolScale = 1e-10;

/// A random vector x described by mean m, covariance B, and a concrete
/// sampling family. Construction runs full validation; instances are
/// immutable afterwards and safe to share across threads.
class StochasticModel {
public:
  /// Validates shapes, symmetrizes the covariance as (B + B^T)/2 (recording
  /// whether that changed anything), clamps round-off negative dispersions,
  /// enforces the family's structure, and factors the covariance to prove
  /// positive semidefiniteness.
  static StochasticModel validate(Vec mean, Mat covariance, Family family) {
    if (!covariance.square() || covariance.rows() != mean.size()) {
      throw DimensionMismatch("model: mean has " + std::to_string(mean.size()) +
                              " entries but covariance is " + std::to_string(covariance.rows()) +
                              "x" + std::to_string(covariance.cols()));
    }
    const std::size_t n = mean.size();
    const bool asymmetric = max_abs_asymmetry(covariance) > 0.0;
    Mat b = symmetrized(covariance);

    const double pivot_tol = kPsdPivotTolScale * std::max(0.0, max_diagonal(b));
    for (std::size_t i = 0; i < n; ++i) {
      if (b(i, i) < 0.0) {
        if (b(i, i) < -pivot_tol) {
          throw NotPsdError("negative dispersion " + std::to_string(b(i, i)) + " at coordinate " +
                                std::to_string(i + 1),
                            b(i, i));
        }
        b(i, i) = 0.0;
      }
    }

    if (family != Family::gaussian) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (b(i, j) != 0.0) {
            throw FamilyConstraintError(
                std::string(family_name(family)) +
                " family requires a diagonal covariance (coordinates are sampled "
                "independently); entry (" +
                std::to_string(i + 1) + "," + std::to_string(j + 1) + ") is " +
                std::to_string(b(i, j)));
          }
        }
      }
    }

    const double column_tol =
        std::sqrt(pivot_tol * std::max(0.0, max_diagonal(b))) + pivot_tol;
    Mat factor = cholesky_lower(b, pivot_tol, column_tol);

    StochasticModel m;
    m.mean_ = std::move(mean);
    m.covariance_ = std::move(b);
    m.family_ = family;
    m.symmetrized_ = asymmetric;
    m.factor_ = std::move(factor);
    m.sigma_.resize(n);
    for (std::size_t i = 0; i < n; ++i) m.sigma_[i] = std::sqrt(m.covariance_(i, i));
    return m;
  }

  std::size_t dimension() const noexcept { return mean_.size(); }
  const Vec& mean() const noexcept { return mean_; }
  const Mat& covariance() const noexcept { return covariance_; }
  Family family() const noexcept { return family_; }
  bool was_symmetrized() const noexcept { return symmetrized_; }

  /// Per-coordinate dispersions' square roots (zero for deterministic
  /// coordinates).
  const Vec& sigma() const noexcept { return sigma_; }

  const Mat& factor() const noexcept { return factor_; }

private:
  StochasticModel() = default;

  Vec mean_;
  Mat covariance_;
  Family family_ = Family::gaussian;
  bool symmetrized_ = false;
  Mat factor_;
  Vec sigma_;
};

/// Lower-triangular L with L*L^T equal to the model covariance;
/// rank-deficient columns are zero.
inline Mat cholesky_factor(const StochasticModel& model) {
  if (model.family() != Family::gaussian) {
    throw PreconditionViolation("cholesky_factor: model family must be gaussian");
  }
  return model.factor();
}

/// Deterministic draws from a model. Point k's coordinates consume the
/// SplitMix64 counters k*n .. k*n + n-1 of the seed's stream, so any sample
/// can be produced independently of the others -- sampling order and worker
/// count can never change the values.
class PointSampler {
public:
  PointSampler(const StochasticModel& model, std::uint64_t seed)
      : mean_(model.mean()),
        sigma_(model.sigma()),
        factor_(model.factor()),
        family_(model.family()),
        seed_(seed) {}

  std::size_t dimension() const noexcept { return mean_.size(); }
  std::uint64_t seed() const noexcept { return seed_; }

  void generate(std::uint64_t index, std::span<double> out) const {
    const std::size_t n = mean_.size();
    const std::uint64_t base = index * static_cast<std::uint64_t>(n);
    switch (family_) {
      case Family::gaussian: {
        for (std::size_t i = 0; i < n; ++i) out[i] = normal_at(seed_, base + i);
        // in-place x = mean + L z; row i only reads z_j with j <= i, so
        // walking upward from the last row never clobbers an input
        for (std::size_t i = n; i-- > 0;) {
          double s = mean_[i];
          for (std::size_t j = 0; j <= i; ++j) s += factor_(i, j) * out[j];
          out[i] = s;
        }
        return;
      }
      case Family::symmetric_two_point: {
        for (std::size_t i = 0; i < n; ++i) {
          const std::uint64_t bits = splitmix64_at(seed_, base + i);
          out[i] = mean_[i] + ((bits >> 63) ? sigma_[i] : -sigma_[i]);
        }
        return;
      }
      case Family::uniform: {
        // half-width sigma*sqrt(3) matches the declared dispersion
        constexpr double kSqrt3 = 1.7320508075688772;
        for (std::size_t i = 0; i < n; ++i) {
          const double u = uniform_open01(splitmix64_at(seed_, base + i));
          out[i] = mean_[i] + sigma_[i] * kSqrt3 * (2.0 * u - 1.0);
        }
        return;
      }
    }
  }

private:
  Vec mean_;
  Vec sigma_;
  Mat factor_;
  Family family_;
  std::uint64_t seed_;
};

/// A materialized batch of draws, stored flat (count x dimension,
/// row-major). Regenerating with the same model, count, and seed is
/// bit-identical.
struct SampleBatch {
  std::size_t dimension = 0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  Vec data;  // count * dimension doubles

  std::span<const double> point(std::uint64_t k) const {
    return {data.data() + k * dimension, dimension};
  }
};

inline SampleBatch sample(const StochasticModel& model, std::uint64_t count, std::uint64_t seed) {
  if (count == 0) throw PreconditionViolation("sample: count must be positive");
  SampleBatch batch;
  batch.dimension = model.dimension();
  batch.count = count;
  batch.seed = seed;
  batch.data.resize(static_cast<std::size_t>(count) * batch.dimension);
  const PointSampler sampler(model, seed);
  for (std::uint64_t k = 0; k < count; ++k) {
    sampler.generate(k, {batch.data.data() + k * batch.dimension, batch.dimension});
  }
  return batch;
}

}  // namespace momprop
