// Copyright 2026 The AGIA Risk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Monte Carlo simulator of a single DP-SGD step attacked through an inserted
// linear layer f(X) = W X (+ b) with M rows.
//
// For row j the attacker observes
//
//   dW_j = s_j X + xi_j,   xi_j ~ N(0, C^2 sigma^2 I_N)
//   db_j = s_j + xi'_j,    xi'_j ~ N(0, C^2 sigma^2)
//
// with s_j = beta_C(X) * d_j, where d_j is the loss derivative with respect
// to the j-th layer output and beta_C(X) = 1 / max(1, ||G_X|| / C) is the
// clipping factor of the global gradient. Parameters outside the layer only
// enter through their norm (`rest_norm`), which is added in quadrature to
// ||G_X||; the noise on those coordinates never reaches the reconstruction.
//
// The reconstruction is the rescaled sample mean (1/M) sum_j dW_j / s_j with
// the scales known to the attacker.

#ifndef AGIA_MECHANISM_HPP_
#define AGIA_MECHANISM_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "agia/bounds.hpp"
#include "agia/errors.hpp"

namespace agia {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A reconstruction target together with its cached l2-norm.
template <std::floating_point Scalar>
class TargetVector {
 public:
  explicit TargetVector(Vector<Scalar> entries)
      : entries_(std::move(entries)), norm_(entries_.norm()) {
    if (entries_.size() == 0) throw ShapeError("TargetVector: empty target");
    if (!entries_.allFinite()) {
      throw DomainError("TargetVector: entries must be finite");
    }
  }

  /// Uniformly random direction on the sphere of radius `norm`.
  static TargetVector on_sphere(Eigen::Index dimension, Scalar norm,
                                std::uint64_t seed);

  const Vector<Scalar>& entries() const { return entries_; }
  Scalar norm() const { return norm_; }
  Eigen::Index dimension() const { return entries_.size(); }
  // max(X) - min(X), the peak used by the PSNR.
  Scalar range() const { return entries_.maxCoeff() - entries_.minCoeff(); }

 private:
  Vector<Scalar> entries_;
  Scalar norm_;
};

template <std::floating_point Scalar>
struct AttackConfig {
  std::int64_t rows = 1;
  Scalar clip_norm = 1;
  Scalar noise_multiplier = 1;
  // Norm of the gradient of every parameter outside the attack layer.
  Scalar rest_norm = 0;
  // d_j for each row; empty means all ones (the loss 1^T f(X)).
  Vector<Scalar> loss_derivatives;
  // Count the bias derivatives towards the clipped global norm.
  bool include_bias_rows = false;
  std::uint64_t seed = 0;
  // Scales used by the reconstructor in run_trials. Unset means the true
  // scales, i.e. the strongest attacker.
  std::optional<Vector<Scalar>> scale_estimates;

  Vector<Scalar> derivatives() const {
    if (loss_derivatives.size() == 0) {
      return Vector<Scalar>::Ones(static_cast<Eigen::Index>(rows));
    }
    return loss_derivatives;
  }

  void validate() const {
    if (rows < 1) {
      throw DomainError("AttackConfig: rows M must be >= 1, got " +
                        std::to_string(rows));
    }
    auto positive = [](Scalar v) { return std::isfinite(v) && v > 0; };
    if (!positive(clip_norm)) {
      throw DomainError("AttackConfig: clip norm C must be positive, got " +
                        internal::show(clip_norm));
    }
    if (!positive(noise_multiplier)) {
      throw DomainError("AttackConfig: noise multiplier must be positive, got " +
                        internal::show(noise_multiplier));
    }
    if (!(std::isfinite(rest_norm) && rest_norm >= 0)) {
      throw DomainError("AttackConfig: rest_norm must be >= 0, got " +
                        internal::show(rest_norm));
    }
    if (loss_derivatives.size() != 0 && loss_derivatives.size() != rows) {
      throw ShapeError("AttackConfig: " +
                       std::to_string(loss_derivatives.size()) +
                       " loss derivatives for " + std::to_string(rows) +
                       " rows");
    }
    if (loss_derivatives.size() != 0 &&
        (loss_derivatives.array() == 0).all()) {
      throw ReconstructionError(
          "AttackConfig: every loss derivative is zero; the target never "
          "enters the gradient");
    }
    if (scale_estimates && scale_estimates->size() != rows) {
      throw ShapeError("AttackConfig: scale_estimates must have M entries");
    }
  }
};

/// The privatized observations of one DP-SGD step.
template <std::floating_point Scalar>
struct PrivatizedStep {
  RowMatrix<Scalar> weight_rows;  // M x N
  Vector<Scalar> bias_entries;
  Vector<Scalar> true_scales;
  Scalar clip_factor = 1;
};

/// Per-trial reconstruction errors of a Monte Carlo batch.
template <std::floating_point Scalar>
struct TrialBatch {
  std::vector<Scalar> mse;
  // +inf where the MSE underflowed to zero.
  std::vector<Scalar> psnr;
  std::int64_t trials = 0;
  std::uint64_t seed = 0;
  Scalar data_range = 0;
  AttackConfig<Scalar> config;
};

struct TrialOptions {
  // 0 picks std::thread::hardware_concurrency().
  unsigned threads = 1;
};

namespace internal {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline void check_target(Eigen::Index n, double norm, const char* op) {
  if (n == 0) throw ShapeError(std::string(op) + ": empty target");
  if (!(norm > 0)) {
    throw DomainError(std::string(op) + ": target must be non-zero");
  }
}

}  // namespace internal

/// Independent engine for trial `trial` of the stream rooted at `seed`.
/// Streams depend only on (seed, trial), never on execution order.
inline std::mt19937_64 trial_engine(std::uint64_t seed, std::uint64_t trial) {
  return std::mt19937_64(
      internal::splitmix64(internal::splitmix64(seed) ^ trial));
}

template <std::floating_point Scalar>
TargetVector<Scalar> TargetVector<Scalar>::on_sphere(Eigen::Index dimension,
                                                     Scalar norm,
                                                     std::uint64_t seed) {
  if (dimension < 1) throw ShapeError("on_sphere: dimension must be >= 1");
  if (!(std::isfinite(norm) && norm > 0)) {
    throw DomainError("on_sphere: norm must be positive, got " +
                      internal::show(norm));
  }
  // Stream index 2^64-1 is reserved for target generation.
  auto engine = trial_engine(seed, ~std::uint64_t{0});
  std::normal_distribution<Scalar> normal;
  Vector<Scalar> v(dimension);
  do {
    for (Eigen::Index i = 0; i < dimension; ++i) v[i] = normal(engine);
  } while (v.norm() == 0);
  return TargetVector(v * (norm / v.norm()));
}

/// ||G_X|| = sqrt( sum_j d_j^2 ||X||^2 [+ sum_j d_j^2] + rest_norm^2 ).
template <std::floating_point Scalar>
Scalar global_gradient_norm(const TargetVector<Scalar>& target,
                            const AttackConfig<Scalar>& config) {
  config.validate();
  internal::check_target(target.dimension(), target.norm(),
                         "global_gradient_norm");
  const Scalar d2 = config.derivatives().squaredNorm();
  Scalar total = d2 * target.norm() * target.norm();
  if (config.include_bias_rows) total += d2;
  total += config.rest_norm * config.rest_norm;
  return std::sqrt(total);
}

/// beta_C(X) = 1 / max(1, ||G_X|| / C).
template <std::floating_point Scalar>
Scalar clip_factor(const TargetVector<Scalar>& target,
                   const AttackConfig<Scalar>& config) {
  const Scalar norm = global_gradient_norm(target, config);
  return norm <= config.clip_norm ? Scalar(1) : config.clip_norm / norm;
}

/// Draws the privatized weight-row and bias observations of one step.
template <std::floating_point Scalar, typename Engine>
PrivatizedStep<Scalar> privatize_step(const TargetVector<Scalar>& target,
                                      const AttackConfig<Scalar>& config,
                                      Engine& engine) {
  const Scalar beta = clip_factor(target, config);
  const Eigen::Index m = static_cast<Eigen::Index>(config.rows);
  const Eigen::Index n = target.dimension();
  const Scalar sd = config.clip_norm * config.noise_multiplier;

  PrivatizedStep<Scalar> step;
  step.clip_factor = beta;
  step.true_scales = beta * config.derivatives();
  step.weight_rows.resize(m, n);
  step.bias_entries.resize(m);
  std::normal_distribution<Scalar> normal;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      step.weight_rows(j, i) =
          step.true_scales[j] * target.entries()[i] + sd * normal(engine);
    }
    step.bias_entries[j] = step.true_scales[j] + sd * normal(engine);
  }
  return step;
}

/// Rescaled sample mean (1/M) sum_j weight_rows[j] / scales[j].
template <std::floating_point Scalar>
Vector<Scalar> reconstruct(const PrivatizedStep<Scalar>& step,
                           const Vector<Scalar>& scales) {
  if (scales.size() != step.weight_rows.rows()) {
    throw ShapeError("reconstruct: " + std::to_string(scales.size()) +
                     " scales for " + std::to_string(step.weight_rows.rows()) +
                     " rows");
  }
  if ((scales.array() == 0).any()) {
    throw ReconstructionError(
        "reconstruct: a zero scale leaves the reconstruction undefined");
  }
  const Vector<Scalar> inverse = scales.cwiseInverse();
  return (step.weight_rows.transpose() * inverse) /
         static_cast<Scalar>(step.weight_rows.rows());
}

/// One independent reconstruction: trial `trial` of the stream config.seed.
template <std::floating_point Scalar>
Vector<Scalar> simulate_reconstruction(const TargetVector<Scalar>& target,
                                       const AttackConfig<Scalar>& config,
                                       std::uint64_t trial) {
  auto engine = trial_engine(config.seed, trial);
  const PrivatizedStep<Scalar> step = privatize_step(target, config, engine);
  if (config.scale_estimates) return reconstruct(step, *config.scale_estimates);
  return reconstruct(step, step.true_scales);
}

/// ||a - b||^2 / N.
template <std::floating_point Scalar>
Scalar mean_squared_error(const Vector<Scalar>& a,
                          const Vector<Scalar>& b) {
  if (a.size() != b.size()) throw ShapeError("mean_squared_error: size mismatch");
  return (a - b).squaredNorm() / static_cast<Scalar>(a.size());
}

/// Repeats privatize + reconstruct `trials` times and records MSE and PSNR.
///
/// Trial t always uses trial_engine(config.seed, t) and writes slot t, so the
/// batch is bit-identical for any thread count. PSNR uses `data_range` when
/// given, else the target's own max - min.
template <std::floating_point Scalar>
TrialBatch<Scalar> run_trials(const TargetVector<Scalar>& target,
                              const AttackConfig<Scalar>& config,
                              std::int64_t trials, TrialOptions options = {},
                              std::type_identity_t<std::optional<Scalar>> data_range = std::nullopt) {
  if (trials < 1) {
    throw DomainError("run_trials: trials must be >= 1, got " +
                      std::to_string(trials));
  }
  config.validate();
  internal::check_target(target.dimension(), target.norm(), "run_trials");

  TrialBatch<Scalar> batch;
  batch.trials = trials;
  batch.seed = config.seed;
  batch.config = config;
  batch.data_range = data_range.value_or(target.range());
  batch.mse.resize(static_cast<std::size_t>(trials));
  batch.psnr.resize(static_cast<std::size_t>(trials));

  auto work = [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t t = begin; t < end; ++t) {
      const Vector<Scalar> estimate =
          simulate_reconstruction(target, config, static_cast<std::uint64_t>(t));
      const Scalar mse = mean_squared_error<Scalar>(target.entries(), estimate);
      batch.mse[static_cast<std::size_t>(t)] = mse;
      batch.psnr[static_cast<std::size_t>(t)] = psnr(mse, batch.data_range);
    }
  };

  unsigned threads =
      options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
  threads = std::max(1u, std::min<unsigned>(
                             threads, static_cast<unsigned>(std::min<std::int64_t>(
                                          trials, 1024))));
  if (threads == 1) {
    work(0, trials);
    return batch;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::int64_t chunk = (trials + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::int64_t begin = std::min<std::int64_t>(trials, w * chunk);
    const std::int64_t end = std::min<std::int64_t>(trials, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

/// Coordinate-wise mean of k reconstructions of the same target.
template <std::floating_point Scalar>
Vector<Scalar> aggregate_reconstructions(
    std::span<const Vector<Scalar>> estimates) {
  if (estimates.empty()) {
    throw ShapeError("aggregate_reconstructions: no estimates");
  }
  Vector<Scalar> sum = estimates.front();
  for (std::size_t k = 1; k < estimates.size(); ++k) {
    if (estimates[k].size() != sum.size()) {
      throw ShapeError("aggregate_reconstructions: estimate " +
                       std::to_string(k) + " has dimension " +
                       std::to_string(estimates[k].size()) + ", expected " +
                       std::to_string(sum.size()));
    }
    sum += estimates[k];
  }
  return sum / static_cast<Scalar>(estimates.size());
}

/// Pearson correlation between a target and its reconstruction.
template <std::floating_point Scalar>
Scalar normalized_cross_correlation(const Vector<Scalar>& x,
                                    const Vector<Scalar>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ShapeError("normalized_cross_correlation: need two equal-size vectors");
  }
  const auto xc = (x.array() - x.mean()).matrix();
  const auto yc = (y.array() - y.mean()).matrix();
  return xc.dot(yc) / std::sqrt(xc.squaredNorm() * yc.squaredNorm());
}

/// Two-sided Kolmogorov-Smirnov distance between the batch's MSE values and
/// the law P(MSE <= eta) = P(N/2, N eta / (2 sigma^2 ||X||^2)).
template <std::floating_point Scalar>
Scalar ks_statistic(const TrialBatch<Scalar>& batch,
                    const RiskParams<Scalar>& params, Scalar target_norm) {
  if (batch.mse.empty()) throw DomainError("ks_statistic: empty batch");
  std::vector<Scalar> sorted = batch.mse;
  std::sort(sorted.begin(), sorted.end());
  const Scalar n = static_cast<Scalar>(sorted.size());
  Scalar d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const Scalar f = mse_success_probability(params, target_norm, sorted[i]);
    const Scalar above = static_cast<Scalar>(i + 1) / n - f;
    const Scalar below = f - static_cast<Scalar>(i) / n;
    d = std::max({d, above, below});
  }
  return d;
}

/// Critical value of the one-sample KS distance at level alpha, from the
/// asymptotic Kolmogorov law with Stephens' finite-sample correction.
template <std::floating_point Scalar>
Scalar kolmogorov_critical_value(std::int64_t n, Scalar alpha) {
  if (n < 1) throw DomainError("kolmogorov_critical_value: n must be >= 1");
  if (!(alpha > 0 && alpha < 1)) {
    throw DomainError("kolmogorov_critical_value: alpha must be in (0, 1)");
  }
  auto survival = [](Scalar k) {
    Scalar sum = 0;
    for (int j = 1; j < 100; ++j) {
      const Scalar term = std::exp(-2 * Scalar(j) * Scalar(j) * k * k);
      sum += (j % 2 == 1) ? term : -term;
      if (term < std::numeric_limits<Scalar>::epsilon()) break;
    }
    return 2 * sum;
  };
  Scalar lo = Scalar(0.3), hi = Scalar(6);
  for (int iter = 0; iter < 200; ++iter) {
    const Scalar mid = (lo + hi) / 2;
    if (survival(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Scalar root_n = std::sqrt(static_cast<Scalar>(n));
  return (lo + hi) / 2 / (root_n + Scalar(0.12) + Scalar(0.11) / root_n);
}

template <std::floating_point Scalar>
struct Summary {
  std::int64_t count = 0;  // finite values only
  Scalar mean = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar q1 = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar median = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar q3 = std::numeric_limits<Scalar>::quiet_NaN();
};

/// Mean and quartiles (linear interpolation) over the finite values.
template <std::floating_point Scalar>
Summary<Scalar> summarize(std::span<const Scalar> values) {
  std::vector<Scalar> finite;
  finite.reserve(values.size());
  for (Scalar v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  Summary<Scalar> s;
  s.count = static_cast<std::int64_t>(finite.size());
  if (finite.empty()) return s;
  std::sort(finite.begin(), finite.end());
  Scalar total = 0;
  for (Scalar v : finite) total += v;
  s.mean = total / static_cast<Scalar>(finite.size());
  auto quantile = [&](Scalar p) {
    const Scalar pos = p * static_cast<Scalar>(finite.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, finite.size() - 1);
    const Scalar frac = pos - static_cast<Scalar>(lo);
    return finite[lo] + frac * (finite[hi] - finite[lo]);
  };
  s.q1 = quantile(Scalar(0.25));
  s.median = quantile(Scalar(0.5));
  s.q3 = quantile(Scalar(0.75));
  return s;
}

}  // namespace agia

#endif  // AGIA_MECHANISM_HPP_
