#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "momprop/errors.hpp"
#include "momprop/expr.hpp"
#include "momprop/linalg.hpp"
#include "momprop/stochastic.hpp"
#include "momprop/tape.hpp"

namespace momprop {

/// Samples per chunk of the Monte Carlo stream. Estimates are always
/// accumulated chunk by chunk and merged in chunk order, whatever the worker
/// count, so results are bit-identical across schedules.
inline constexpr std::uint64_t kMcChunkSize = 65536;

/// Streaming count/mean/M2 accumulator: Welford's update for single values,
/// Chan's formula for merging. Numerically stable at 1e8 samples.
struct MomentAccumulator {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const MomentAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    const double delta = other.mean - mean;
    mean += delta * (nb / n);
    m2 += other.m2 + delta * delta * (na * nb / n);
    count += other.count;
  }

  /// Unbiased sample variance (count - 1 denominator); 0 below two samples.
  double variance() const {
    return count >= 2 ? m2 / static_cast<double>(count - 1) : 0.0;
  }
};

/// A Monte Carlo mean with its standard error. Regenerable bit-exactly from
/// (expression, model, count, seed).
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
};

/// Direct-sampling estimate of E f(x): the ground truth the Taylor
/// approximations are measured against.
///
/// The sample stream is fixed by (model, seed) alone; chunks are merged in
/// index order, so the result does not depend on `workers` (0 = hardware
/// concurrency). A DomainError while evaluating any sample aborts the whole
/// estimate -- skipping samples would silently change the measure -- and
/// reports the smallest failing sample index.
inline McEstimate estimate_mean(const Expression& f, const StochasticModel& model,
                                std::uint64_t count, std::uint64_t seed, unsigned workers = 0) {
  if (count == 0) throw PreconditionViolation("estimate_mean: count must be positive");
  if (static_cast<std::size_t>(f.arity()) > model.dimension()) {
    throw DimensionMismatch("estimate_mean: expression references x" + std::to_string(f.arity()) +
                            " but the model has dimension " + std::to_string(model.dimension()));
  }

  const CompiledExpr tape(f);
  const PointSampler sampler(model, seed);
  const std::size_t n = model.dimension();
  const std::uint64_t n_chunks = (count + kMcChunkSize - 1) / kMcChunkSize;

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers > n_chunks) workers = static_cast<unsigned>(n_chunks);

  std::vector<MomentAccumulator> chunk_stats(n_chunks);
  std::atomic<std::uint64_t> next_chunk{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  bool have_error = false;
  std::uint64_t error_index = 0;
  Vec error_point;
  std::string error_what;

  const auto worker_fn = [&] {
    Vec point(n);
    std::vector<double> stack(tape.stack_depth());
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;  // stop claiming new chunks
      const std::uint64_t c = next_chunk.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks) return;
      const std::uint64_t begin = c * kMcChunkSize;
      const std::uint64_t end = std::min(count, begin + kMcChunkSize);
      MomentAccumulator acc;
      bool chunk_failed = false;
      // a claimed chunk always runs to completion (or its own first error):
      // every chunk below the failing one is then fully checked, which makes
      // the reported error index the smallest in the stream
      for (std::uint64_t k = begin; k < end && !chunk_failed; ++k) {
        sampler.generate(k, point);
        try {
          acc.add(tape.eval(point, stack.data()));
        } catch (const Error& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!have_error || k < error_index) {
            have_error = true;
            error_index = k;
            error_point = point;
            error_what = e.what();
          }
          failed.store(true, std::memory_order_relaxed);
          chunk_failed = true;
        }
      }
      if (!chunk_failed) chunk_stats[c] = acc;
    }
  };

  if (workers <= 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
    for (auto& t : pool) t.join();
  }

  if (have_error) {
    std::string msg = error_what + " at sample " + std::to_string(error_index) + ", point (";
    for (std::size_t i = 0; i < error_point.size(); ++i) {
      if (i) msg += ", ";
      msg += detail::format17(error_point[i]);
    }
    msg += ")";
    throw McDomainError(msg, error_index, std::move(error_point));
  }

  MomentAccumulator total;
  for (const MomentAccumulator& s : chunk_stats) total.merge(s);

  McEstimate est;
  est.mean = total.mean;
  est.std_error =
      count >= 2 ? std::sqrt(total.variance()) / std::sqrt(static_cast<double>(count)) : 0.0;
  est.count = count;
  est.seed = seed;
  return est;
}

/// Sample mean and unbiased (count - 1 denominator) sample covariance of a
/// batch. The returned matrix is symmetric exactly: each unordered pair is
/// computed once and mirrored.
inline std::pair<Vec, Mat> empirical_covariance(const SampleBatch& batch) {
  if (batch.count < 2) {
    throw InsufficientSamples("empirical_covariance: need at least 2 samples, have " +
                              std::to_string(batch.count));
  }
  const std::size_t n = batch.dimension;
  const double inv_count = 1.0 / static_cast<double>(batch.count);

  Vec mean(n, 0.0);
  for (std::uint64_t k = 0; k < batch.count; ++k) {
    const auto p = batch.point(k);
    for (std::size_t i = 0; i < n; ++i) mean[i] += p[i];
  }
  for (std::size_t i = 0; i < n; ++i) mean[i] *= inv_count;

  Mat cov(n, n);
  const double denom = static_cast<double>(batch.count - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::uint64_t k = 0; k < batch.count; ++k) {
        const auto p = batch.point(k);
        s += (p[i] - mean[i]) * (p[j] - mean[j]);
      }
      const double value = s / denom;
      cov(i, j) = value;
      cov(j, i) = value;
    }
  }
  return {std::move(mean), std::move(cov)};
}

}  // namespace momprop
