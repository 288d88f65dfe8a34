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

// Closed-form reconstruction-risk bounds for the optimal analytic gradient
// inversion attack against one DP-SGD step.
//
// Under the optimal attack the reconstruction of a target X is distributed as
// N(X, sigma^2 ||X||^2 I_N), so the reconstruction MSE is
// (sigma^2 ||X||^2 / N) * chi^2_N and
//
//   P(MSE <= eta) = P(N/2, N eta / (2 sigma^2 ||X||^2)).
//
// Dataset-level certificates replace ||X|| by the smallest non-zero norm m in
// the data domain, which upper-bounds the success probability for every
// target because P(a, .) is increasing.

#ifndef AGIA_BOUNDS_HPP_
#define AGIA_BOUNDS_HPP_

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>

#include "agia/errors.hpp"
#include "agia/specfun.hpp"

namespace agia {

enum class Metric { kMse, kNegPsnr, kNcc };

enum class Direction {
  // P(error <= eta) <= gamma.
  kErrorAtMostEta,
  // P(score >= eta) <= gamma.
  kScoreAtLeastEta,
};

inline const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::kMse:
      return "mse";
    case Metric::kNegPsnr:
      return "neg_psnr";
    case Metric::kNcc:
      return "ncc";
  }
  return "unknown";
}

inline const char* to_string(Direction direction) {
  return direction == Direction::kErrorAtMostEta ? "error_at_most_eta"
                                                 : "score_at_least_eta";
}

/// Privacy and data context of a risk query. Validated on construction.
///
/// `min_norm` is the smallest l2-norm over the non-zero points of the data
/// domain; the zero vector is excluded by the caller, so 0 is rejected.
/// `data_range` is max over the domain of max(X) minus min over the domain of
/// min(X), and is only needed for PSNR queries.
template <std::floating_point Scalar>
class RiskParams {
 public:
  RiskParams(std::int64_t dimension, Scalar noise_multiplier, Scalar clip_norm,
             Scalar min_norm)
      : dimension_(dimension),
        noise_multiplier_(noise_multiplier),
        clip_norm_(clip_norm),
        min_norm_(min_norm) {
    if (dimension < 1) {
      throw DomainError("RiskParams: dimension N must be >= 1, got " +
                        std::to_string(dimension));
    }
    check_positive(noise_multiplier, "noise multiplier sigma");
    check_positive(clip_norm, "clip norm C");
    check_positive(min_norm,
                   "min_norm (smallest norm over the non-zero data points)");
  }

  RiskParams& set_max_norm(Scalar max_norm) {
    check_positive(max_norm, "max_norm");
    if (max_norm < min_norm_) {
      throw DomainError("RiskParams: max_norm " + internal::show(max_norm) +
                        " is below min_norm " + internal::show(min_norm_));
    }
    max_norm_ = max_norm;
    return *this;
  }

  RiskParams& set_data_range(Scalar data_range) {
    if (!(std::isfinite(data_range) && data_range >= 0)) {
      throw DomainError("RiskParams: data_range must be >= 0, got " +
                        internal::show(data_range));
    }
    data_range_ = data_range;
    return *this;
  }

  RiskParams with_noise_multiplier(Scalar sigma) const {
    RiskParams copy = *this;
    copy.check_positive(sigma, "noise multiplier sigma");
    copy.noise_multiplier_ = sigma;
    return copy;
  }

  std::int64_t dimension() const { return dimension_; }
  Scalar noise_multiplier() const { return noise_multiplier_; }
  Scalar clip_norm() const { return clip_norm_; }
  Scalar min_norm() const { return min_norm_; }
  const std::optional<Scalar>& max_norm() const { return max_norm_; }
  const std::optional<Scalar>& data_range() const { return data_range_; }

 private:
  static void check_positive(Scalar v, const char* what) {
    if (!(std::isfinite(v) && v > 0)) {
      throw DomainError(std::string("RiskParams: ") + what +
                        " must be positive and finite, got " +
                        internal::show(v));
    }
  }

  std::int64_t dimension_;
  Scalar noise_multiplier_;
  Scalar clip_norm_;
  Scalar min_norm_;
  std::optional<Scalar> max_norm_;
  std::optional<Scalar> data_range_;
};

/// An (eta, gamma) reconstruction-robustness certificate.
template <std::floating_point Scalar>
struct ReRoResult {
  Metric metric = Metric::kMse;
  // Threshold in units of the metric (dB for PSNR).
  Scalar eta = 0;
  Scalar gamma = 0;
  Direction direction = Direction::kErrorAtMostEta;
};

template <std::floating_point Scalar>
struct Interval {
  Scalar lower = 0;
  Scalar upper = 0;
};

namespace internal {

template <std::floating_point Scalar>
void check_probability_open(Scalar gamma, const char* op) {
  if (!(gamma > 0 && gamma < 1)) {
    throw DomainError(std::string(op) +
                      ": gamma must lie strictly inside (0, 1), got " +
                      show(gamma));
  }
}

template <std::floating_point Scalar>
void check_positive_arg(Scalar v, const char* op, const char* what) {
  if (!(std::isfinite(v) && v > 0)) {
    throw DomainError(std::string(op) + ": " + what +
                      " must be positive and finite, got " + show(v));
  }
}

// P(N/2, N eta / (2 sigma^2 norm^2)), with eta = +inf mapping to 1.
template <std::floating_point Scalar>
Scalar mse_cdf(std::int64_t dimension, Scalar sigma, Scalar norm, Scalar eta) {
  if (eta == 0) return 0;
  const Scalar n = static_cast<Scalar>(dimension);
  const Scalar scale = 2 * sigma * sigma * norm * norm;
  Scalar x = n * eta / scale;
  if (std::isnan(x)) x = std::numeric_limits<Scalar>::infinity();
  return regularized_gamma_p(n / 2, x);
}

}  // namespace internal

/// P(MSE(X, X_hat) <= eta) for a specific target with ||X|| = target_norm.
template <std::floating_point Scalar>
Scalar mse_success_probability(const RiskParams<Scalar>& params,
                               Scalar target_norm, Scalar eta) {
  constexpr const char* kOp = "mse_success_probability";
  internal::check_positive_arg(target_norm, kOp, "target norm");
  if (!(eta >= 0)) {
    throw DomainError(std::string(kOp) + ": eta must be >= 0, got " +
                      internal::show(eta));
  }
  return internal::mse_cdf(params.dimension(), params.noise_multiplier(),
                           target_norm, eta);
}

/// (eta, gamma)-ReRo certificate for the MSE over the whole data domain.
template <std::floating_point Scalar>
ReRoResult<Scalar> rero_gamma_mse(const RiskParams<Scalar>& params,
                                  Scalar eta) {
  if (!(eta >= 0)) {
    throw DomainError("rero_gamma_mse: eta must be >= 0, got " +
                      internal::show(eta));
  }
  return {Metric::kMse, eta,
          internal::mse_cdf(params.dimension(), params.noise_multiplier(),
                            params.min_norm(), eta),
          Direction::kErrorAtMostEta};
}

/// Success-probability range over targets with norms in [min_norm, max_norm].
/// Larger norms receive proportionally more noise, so the lower end belongs to
/// max_norm.
template <std::floating_point Scalar>
Interval<Scalar> mse_success_range(const RiskParams<Scalar>& params,
                                   Scalar eta) {
  if (!params.max_norm()) {
    throw ConfigurationError("mse_success_range: max_norm is not set");
  }
  return {mse_success_probability(params, *params.max_norm(), eta),
          rero_gamma_mse(params, eta).gamma};
}

/// The MSE threshold whose dataset-level success probability equals gamma:
/// eta = (2 sigma^2 / N) m^2 P^{-1}(N/2, gamma).
template <std::floating_point Scalar>
Scalar eta_from_gamma(const RiskParams<Scalar>& params, Scalar gamma) {
  internal::check_probability_open(gamma, "eta_from_gamma");
  const Scalar n = static_cast<Scalar>(params.dimension());
  const Scalar sigma = params.noise_multiplier();
  const Scalar m = params.min_norm();
  return 2 * sigma * sigma / n * m * m *
         inverse_regularized_gamma_p(n / 2, gamma);
}

/// Noise multiplier that caps the success probability of reaching MSE <= eta
/// at exactly gamma: sigma = sqrt(N eta / (2 m^2 P^{-1}(N/2, gamma))).
template <std::floating_point Scalar>
Scalar sigma_from_eta_gamma(std::int64_t dimension, Scalar min_norm, Scalar eta,
                            Scalar gamma) {
  constexpr const char* kOp = "sigma_from_eta_gamma";
  if (dimension < 1) {
    throw DomainError(std::string(kOp) + ": dimension N must be >= 1, got " +
                      std::to_string(dimension));
  }
  internal::check_positive_arg(min_norm, kOp, "min_norm");
  internal::check_positive_arg(eta, kOp, "eta");
  internal::check_probability_open(gamma, kOp);
  const Scalar n = static_cast<Scalar>(dimension);
  const Scalar x = inverse_regularized_gamma_p(n / 2, gamma);
  return std::sqrt(n * eta / (2 * min_norm * min_norm * x));
}

/// MSE threshold equivalent to a PSNR threshold:
/// PSNR >= eta_db  <=>  MSE <= 10^{-eta_db/10} range^2.
template <std::floating_point Scalar>
Scalar psnr_to_mse_threshold(Scalar eta_db, Scalar data_range) {
  if (std::isnan(eta_db)) {
    throw DomainError("psnr_to_mse_threshold: eta_db is NaN");
  }
  return std::pow(Scalar(10), -eta_db / 10) * data_range * data_range;
}

/// 10 log10(range^2 / mse). An exact reconstruction (mse == 0) has no finite
/// PSNR and is reported as +infinity.
template <std::floating_point Scalar>
Scalar psnr(Scalar mse, Scalar data_range) {
  if (mse == 0) return std::numeric_limits<Scalar>::infinity();
  return 10 * std::log10(data_range * data_range / mse);
}

/// Upper bound on P(PSNR >= eta_db) for every non-zero target.
template <std::floating_point Scalar>
ReRoResult<Scalar> psnr_exceedance_bound(const RiskParams<Scalar>& params,
                                         Scalar eta_db) {
  if (!params.data_range()) {
    throw ConfigurationError(
        "psnr_exceedance_bound: data_range is required for PSNR bounds");
  }
  if (!(*params.data_range() > 0)) {
    throw DomainError("psnr_exceedance_bound: data_range must be > 0");
  }
  const Scalar eta_mse = psnr_to_mse_threshold(eta_db, *params.data_range());
  return {Metric::kNegPsnr, eta_db,
          internal::mse_cdf(params.dimension(), params.noise_multiplier(),
                            params.min_norm(), eta_mse),
          Direction::kScoreAtLeastEta};
}

/// Expected MSE of the optimal reconstruction, sigma^2 ||X||^2.
template <std::floating_point Scalar>
Scalar expected_mse(Scalar sigma, Scalar target_norm) {
  internal::check_positive_arg(sigma, "expected_mse", "sigma");
  internal::check_positive_arg(target_norm, "expected_mse", "target norm");
  return sigma * sigma * target_norm * target_norm;
}

/// Number of attack rows M = max(1, ceil(C / m)) prescribed for the optimal
/// attack with loss 1^T f(X).
///
/// With that loss the global gradient norm is sqrt(M) ||X||, so clipping only
/// saturates (and the variance only reaches sigma^2 ||X||^2) once
/// M >= (C / ||X||)^2; see saturating_rows(). The two agree when C <= m.
template <std::floating_point Scalar>
std::int64_t optimal_M(Scalar clip_norm, Scalar min_norm) {
  internal::check_positive_arg(clip_norm, "optimal_M", "clip norm C");
  internal::check_positive_arg(min_norm, "optimal_M", "min_norm");
  const Scalar rows = std::ceil(clip_norm / min_norm);
  return rows < 1 ? 1 : static_cast<std::int64_t>(rows);
}

/// Smallest M for which the all-ones loss drives sqrt(M) m >= C.
template <std::floating_point Scalar>
std::int64_t saturating_rows(Scalar clip_norm, Scalar min_norm) {
  internal::check_positive_arg(clip_norm, "saturating_rows", "clip norm C");
  internal::check_positive_arg(min_norm, "saturating_rows", "min_norm");
  const Scalar ratio = clip_norm / min_norm;
  const Scalar rows = std::ceil(ratio * ratio);
  return rows < 1 ? 1 : static_cast<std::int64_t>(rows);
}

/// Per-coordinate variance after averaging k matched optimal reconstructions.
template <std::floating_point Scalar>
Scalar multi_attack_variance(Scalar sigma, Scalar target_norm, std::int64_t k) {
  if (k < 1) {
    throw DomainError("multi_attack_variance: k must be >= 1, got " +
                      std::to_string(k));
  }
  return expected_mse(sigma, target_norm) / static_cast<Scalar>(k);
}

/// Normalized cross-correlation between target and optimal reconstruction.
///
/// With the entry variance var_x of the target the value is exact,
/// sqrt(1 / (1 + sigma^2 ||X||^2 / var_x)); var_x may not exceed ||X||^2 / N.
/// Without it the dimension-only bound sqrt(1 / (1 + sigma^2 N)) is returned.
template <std::floating_point Scalar>
Scalar ncc_bound(Scalar sigma, Scalar target_norm, std::int64_t dimension,
                 std::type_identity_t<std::optional<Scalar>> var_x = std::nullopt) {
  constexpr const char* kOp = "ncc_bound";
  internal::check_positive_arg(sigma, kOp, "sigma");
  if (dimension < 1) {
    throw DomainError(std::string(kOp) + ": dimension N must be >= 1, got " +
                      std::to_string(dimension));
  }
  if (!var_x) {
    return std::sqrt(1 / (1 + sigma * sigma * static_cast<Scalar>(dimension)));
  }
  internal::check_positive_arg(target_norm, kOp, "target norm");
  const Scalar cap = target_norm * target_norm / static_cast<Scalar>(dimension);
  if (!(*var_x > 0) || *var_x > cap * (1 + 4 * std::numeric_limits<Scalar>::epsilon())) {
    throw DomainError(std::string(kOp) + ": var_x = " + internal::show(*var_x) +
                      " violates the assumption 0 < Var(x) <= ||X||^2 / N = " +
                      internal::show(cap));
  }
  return std::sqrt(1 / (1 + sigma * sigma * target_norm * target_norm / *var_x));
}

/// Risk corridor [0, eta(gamma_prior)]: the MSE an attacker without a
/// candidate set must tolerate to match the success probability gamma_prior
/// of an identification attacker.
template <std::floating_point Scalar>
Interval<Scalar> risk_corridor(const RiskParams<Scalar>& params,
                               Scalar gamma_prior) {
  internal::check_probability_open(gamma_prior, "risk_corridor");
  return {0, eta_from_gamma(params, gamma_prior)};
}

}  // namespace agia

#endif  // AGIA_BOUNDS_HPP_
