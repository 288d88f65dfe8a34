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

// Regularized lower incomplete gamma function, its inverse in the second
// argument, and the chi-squared helpers built on top of them.
//
// P(a, x) is evaluated with the power series for x < a + 1 and with the
// Legendre continued fraction for the upper tail otherwise. The common
// prefactor x^a e^{-x} / Gamma(a) is formed in log space; for large shapes
// it is rewritten around x = a so that the O(a) terms cancel analytically
// instead of numerically.

#ifndef AGIA_SPECFUN_HPP_
#define AGIA_SPECFUN_HPP_

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "agia/errors.hpp"

namespace agia {

namespace internal {

template <std::floating_point Scalar>
void require(bool ok, const char* op, const std::string& message) {
  if (!ok) throw DomainError(std::string(op) + ": " + message);
}

template <std::floating_point Scalar>
std::string show(Scalar v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// log(1 + t) - t, accurate for small |t|.
template <std::floating_point Scalar>
Scalar log1pmx(Scalar t) {
  if (std::abs(t) >= Scalar(0.5)) return std::log1p(t) - t;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar power = t * t;
  Scalar sum = -power / 2;
  for (int k = 3; k < 200; ++k) {
    power *= -t;
    const Scalar term = -power / Scalar(k);
    sum += term;
    if (std::abs(term) <= eps * std::abs(sum)) break;
  }
  return sum;
}

// lgamma(a) - [(a - 1/2) log a - a + log(2 pi) / 2] for a >= 10.
template <std::floating_point Scalar>
Scalar stirling_correction(Scalar a) {
  const Scalar inv = 1 / a;
  const Scalar inv2 = inv * inv;
  return inv *
         (Scalar(1) / 12 -
          inv2 * (Scalar(1) / 360 -
                  inv2 * (Scalar(1) / 1260 -
                          inv2 * (Scalar(1) / 1680 - inv2 * Scalar(1) / 1188))));
}

// log( x^a e^{-x} / Gamma(a) ) for a > 0, x > 0.
template <std::floating_point Scalar>
Scalar log_gamma_prefactor(Scalar a, Scalar x) {
  if (a < 10) return a * std::log(x) - x - std::lgamma(a);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  return a * log1pmx((x - a) / a) + std::log(a / two_pi) / 2 -
         stirling_correction(a);
}

template <std::floating_point Scalar>
std::int64_t iteration_cap(Scalar a) {
  return 100000 + static_cast<std::int64_t>(100 * std::sqrt(a));
}

// sum_{n>=0} x^n / (a (a+1) ... (a+n)), valid for x < a + 1.
template <std::floating_point Scalar>
Scalar lower_series(Scalar a, Scalar x) {
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  Scalar denom = a;
  Scalar term = 1 / a;
  Scalar sum = term;
  const std::int64_t cap = iteration_cap(a);
  for (std::int64_t n = 0; n < cap; ++n) {
    denom += 1;
    term *= x / denom;
    sum += term;
    if (term <= sum * eps) return sum;
  }
  throw DomainError("regularized_gamma_p: series failed to converge for a=" +
                    show(a) + ", x=" + show(x));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x) without
// its prefactor, valid for x >= a + 1.
template <std::floating_point Scalar>
Scalar upper_continued_fraction(Scalar a, Scalar x) {
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar tiny = std::numeric_limits<Scalar>::min() / eps;
  Scalar b = x + 1 - a;
  Scalar c = 1 / tiny;
  Scalar d = 1 / b;
  Scalar h = d;
  const std::int64_t cap = iteration_cap(a);
  for (std::int64_t i = 1; i < cap; ++i) {
    const Scalar an = -Scalar(i) * (Scalar(i) - a);
    b += 2;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - 1) <= eps) return h;
  }
  throw DomainError(
      "regularized_gamma_p: continued fraction failed to converge for a=" +
      show(a) + ", x=" + show(x));
}

template <std::floating_point Scalar>
void check_shape(Scalar a, const char* op) {
  require<Scalar>(std::isfinite(a) && a > 0, op,
                  "shape a must be positive and finite, got " + show(a));
}

// Rough standard normal quantile (Abramowitz & Stegun 26.2.23, |err| < 5e-4).
// Only used to seed the root bracket.
template <std::floating_point Scalar>
Scalar rough_normal_quantile(Scalar p) {
  const bool upper = p > Scalar(0.5);
  const Scalar q = upper ? 1 - p : p;
  const Scalar t = std::sqrt(-2 * std::log(q));
  const Scalar num = Scalar(2.515517) + t * (Scalar(0.802853) + t * Scalar(0.010328));
  const Scalar den =
      1 + t * (Scalar(1.432788) + t * (Scalar(0.189269) + t * Scalar(0.001308)));
  const Scalar z = t - num / den;
  return upper ? z : -z;
}

// Starting point for the inverse: Wilson-Hilferty for the body, the
// leading small-x term P(a, x) ~ x^a / Gamma(a + 1) when that fails.
template <std::floating_point Scalar>
Scalar inverse_seed(Scalar a, Scalar p) {
  const Scalar k = 2 * a;
  const Scalar c = 2 / (9 * k);
  const Scalar base = 1 - c + rough_normal_quantile(p) * std::sqrt(c);
  if (base > 0 && a >= Scalar(0.5)) {
    const Scalar x = k * base * base * base / 2;
    if (x > 0 && std::isfinite(x)) return x;
  }
  return std::exp((std::log(p) + std::lgamma(a + 1)) / a);
}

}  // namespace internal

/// Regularized lower incomplete gamma function
/// P(a, x) = gamma(a, x) / Gamma(a), for a > 0 and x >= 0 (x may be +inf).
template <std::floating_point Scalar>
Scalar regularized_gamma_p(Scalar a, Scalar x) {
  constexpr const char* kOp = "regularized_gamma_p";
  internal::check_shape(a, kOp);
  internal::require<Scalar>(!std::isnan(x) && x >= 0, kOp,
                            "argument x must be non-negative, got " +
                                internal::show(x));
  if (x == 0) return 0;
  if (std::isinf(x)) return 1;
  const Scalar log_pref = internal::log_gamma_prefactor(a, x);
  if (x < a + 1) {
    const Scalar p = std::exp(log_pref) * internal::lower_series(a, x);
    return p > 1 ? Scalar(1) : p;
  }
  const Scalar q =
      std::exp(log_pref) * internal::upper_continued_fraction(a, x);
  return q > 1 ? Scalar(0) : 1 - q;
}

/// Upper complement Q(a, x) = 1 - P(a, x), evaluated without cancellation in
/// the upper tail.
template <std::floating_point Scalar>
Scalar regularized_gamma_q(Scalar a, Scalar x) {
  constexpr const char* kOp = "regularized_gamma_q";
  internal::check_shape(a, kOp);
  internal::require<Scalar>(!std::isnan(x) && x >= 0, kOp,
                            "argument x must be non-negative, got " +
                                internal::show(x));
  if (x == 0) return 1;
  if (std::isinf(x)) return 0;
  const Scalar log_pref = internal::log_gamma_prefactor(a, x);
  if (x < a + 1) {
    const Scalar p = std::exp(log_pref) * internal::lower_series(a, x);
    return p > 1 ? Scalar(0) : 1 - p;
  }
  return std::exp(log_pref) * internal::upper_continued_fraction(a, x);
}

/// Density of the Gamma(a, 1) law, i.e. the x-derivative of P(a, x).
template <std::floating_point Scalar>
Scalar gamma_density(Scalar a, Scalar x) {
  internal::check_shape(a, "gamma_density");
  if (!(x > 0) || std::isinf(x)) return 0;
  return std::exp(internal::log_gamma_prefactor(a, x) - std::log(x));
}

/// Inverse of P(a, .): the x >= 0 with P(a, x) = p, for p strictly inside
/// (0, 1). Safeguarded Newton iteration inside a bracket that always
/// contains the root, so a poor step falls back to bisection.
template <std::floating_point Scalar>
Scalar inverse_regularized_gamma_p(Scalar a, Scalar p) {
  constexpr const char* kOp = "inverse_regularized_gamma_p";
  internal::check_shape(a, kOp);
  internal::require<Scalar>(
      p > 0 && p < 1, kOp,
      "probability must lie strictly inside (0, 1), got " + internal::show(p));

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar smallest = std::numeric_limits<Scalar>::min();
  const Scalar largest = std::numeric_limits<Scalar>::max();
  const Scalar seed = internal::inverse_seed(a, p);

  // Grow the bracket geometrically from the seed until it holds the root.
  Scalar lo = seed;
  Scalar hi = seed;
  while (lo > smallest && regularized_gamma_p(a, lo) > p) lo /= 4;
  if (!(lo > smallest)) lo = 0;
  while (hi < largest / 4 && regularized_gamma_p(a, hi) < p) hi *= 4;

  Scalar x = seed;
  if (!(x > lo && x < hi)) x = lo > 0 ? std::sqrt(lo * hi) : hi / 2;
  for (int iter = 0; iter < 400; ++iter) {
    const Scalar f = regularized_gamma_p(a, x) - p;
    if (f == 0) return x;
    if (f < 0) {
      lo = x;
    } else {
      hi = x;
    }
    const Scalar slope = gamma_density(a, x);
    Scalar next = slope > 0 ? x - f / slope
                            : std::numeric_limits<Scalar>::quiet_NaN();
    if (!(next > lo && next < hi)) {
      next = (lo > 0 && hi > 4 * lo) ? std::sqrt(lo * hi) : (lo + hi) / 2;
    }
    if (std::abs(next - x) <= 4 * eps * x || hi - lo <= 4 * eps * hi) {
      return next;
    }
    x = next;
  }
  return x;
}

/// CDF of the central chi-squared law with `dof` degrees of freedom.
template <std::floating_point Scalar>
Scalar chi_squared_cdf(std::int64_t dof, Scalar x) {
  internal::require<Scalar>(dof >= 1, "chi_squared_cdf",
                            "degrees of freedom must be >= 1, got " +
                                std::to_string(dof));
  internal::require<Scalar>(!std::isnan(x) && x >= 0, "chi_squared_cdf",
                            "argument must be non-negative, got " +
                                internal::show(x));
  return regularized_gamma_p(Scalar(dof) / 2, x / 2);
}

template <std::floating_point Scalar>
Scalar chi_squared_quantile(std::int64_t dof, Scalar p) {
  internal::require<Scalar>(dof >= 1, "chi_squared_quantile",
                            "degrees of freedom must be >= 1, got " +
                                std::to_string(dof));
  return 2 * inverse_regularized_gamma_p(Scalar(dof) / 2, p);
}

}  // namespace agia

#endif  // AGIA_SPECFUN_HPP_
