// Copyright 2026 The lcvbandit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LCVBANDIT_STATS_HPP_
#define LCVBANDIT_STATS_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "lcvbandit/errors.hpp"

namespace lcv {

struct TQuantileQuery {
  double percentile;  // in (0, 1)
  std::int64_t dof;   // >= 1
};

namespace detail {

// Double precision throughout; boost's default promotes to long double.
using MathPolicy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

// Above this many degrees of freedom the quantile comes from the normal
// quantile plus its Cornish-Fisher correction.
inline constexpr double kNormalLimitDof = 1e6;

// Smallest upper-tail probability fed to the inversion; percentiles closer
// to 1 than this are clamped.
inline constexpr double kMinTailProbability = 1e-15;

inline double normal_upper_quantile(double tail) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * tail, MathPolicy());
}

// P(T > x) for x >= 0, T ~ Student-t(nu). Picks the incomplete-beta form whose
// argument is not close to 1 so neither tail loses precision.
inline double t_upper_tail(double x, double nu) {
  const double x2 = x * x;
  if (x2 < nu) {
    return 0.5 * boost::math::ibetac(0.5, 0.5 * nu, x2 / (nu + x2), MathPolicy());
  }
  return 0.5 * boost::math::ibeta(0.5 * nu, 0.5, nu / (nu + x2), MathPolicy());
}

inline double t_log_normalizer(double nu) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
         0.5 * std::log(nu * std::numbers::pi);
}

// Cornish-Fisher expansion of the t quantile around the normal quantile z.
inline double cornish_fisher(double z, double nu) {
  const double z2 = z * z;
  const double z3 = z2 * z, z5 = z3 * z2, z7 = z5 * z2, z9 = z7 * z2;
  const double g1 = (z3 + z) / 4.0;
  const double g2 = (5.0 * z5 + 16.0 * z3 + 3.0 * z) / 96.0;
  const double g3 = (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / 384.0;
  const double g4 = (79.0 * z9 + 776.0 * z7 + 1482.0 * z5 - 1920.0 * z3 - 945.0 * z) / 92160.0;
  return z + g1 / nu + g2 / (nu * nu) + g3 / (nu * nu * nu) + g4 / (nu * nu * nu * nu);
}

// Hill (1970), Algorithm 396: approximate upper quantile, good to a few
// digits everywhere; used as the starting point of the refinement.
inline double hill_start(double tail, double nu) {
  const double two_sided = 2.0 * tail;
  const double a = 1.0 / (nu - 0.5);
  const double b = 48.0 / (a * a);
  double c = ((20700.0 * a / b - 98.0) * a - 16.0) * a + 96.36;
  const double d = ((94.5 / (b + c) - 3.0) / b + 1.0) * std::sqrt(a * std::numbers::pi / 2.0) * nu;
  double y = std::pow(d * two_sided, 2.0 / nu);
  if (y > 0.05 + a) {
    const double x = -normal_upper_quantile(tail);
    y = x * x;
    if (nu < 5.0) c += 0.3 * (nu - 4.5) * (x + 0.6);
    c = (((0.05 * d * x - 5.0) * x - 7.0) * x - 2.0) * x + b + c;
    y = (((((0.4 * y + 6.3) * y + 36.0) * y + 94.5) / c - y - 3.0) / b + 1.0) * x;
    y = std::expm1(a * y * y);
  } else {
    y = ((1.0 / (((nu + 6.0) / (nu * y) - 0.089 * d - 0.822) * (nu + 2.0) * 3.0) +
          0.5 / (nu + 4.0)) * y - 1.0) * (nu + 1.0) / (nu + 2.0) + 1.0 / y;
  }
  return std::sqrt(nu * y);
}

// Solves P(T > x) = tail for x > 0, tail in (0, 0.5).
//
// Newton iteration on u = log(x) for g(u) = log P(T > e^u) - log(tail); the
// tail decays like a power of x so g is nearly linear in u far out, and every
// evaluation tightens a bisection bracket that catches steps that overshoot.
inline double t_upper_quantile(double tail, double nu) {
  if (nu == 1.0) return 1.0 / std::tan(std::numbers::pi * tail);
  if (nu == 2.0) return (1.0 - 2.0 * tail) / std::sqrt(2.0 * tail * (1.0 - tail));
  // The expansion's O(nu^-5) remainder is far below double precision here.
  if (nu > kNormalLimitDof) return cornish_fisher(normal_upper_quantile(tail), nu);

  const double log_target = std::log(tail);
  const double log_norm = t_log_normalizer(nu);

  struct Eval {
    double g;
    double slope;
  };
  auto evaluate = [&](double u) {
    const double x = std::exp(u);
    const double upper = t_upper_tail(x, nu);
    const double log_pdf = log_norm - 0.5 * (nu + 1.0) * std::log1p(x * x / nu);
    return Eval{std::log(upper) - log_target, -x * std::exp(log_pdf) / upper};
  };

  const double start = hill_start(tail, nu);
  double u = std::log(std::isfinite(start) && start > 0.0 ? start : 1.0);
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const Eval e = evaluate(u);
    if (e.g == 0.0) break;
    if (e.g > 0.0) {
      lo = u;  // x too small: tail still above target
    } else {
      hi = u;
    }
    double next = u - e.g / e.slope;
    // A Newton step of size h leaves an error of order h^2.
    if (std::abs(next - u) <= 1e-9) {
      u = next;
      break;
    }
    if (!(next > lo && next < hi) || !std::isfinite(next)) {
      if (std::isfinite(lo) && std::isfinite(hi)) {
        next = 0.5 * (lo + hi);
      } else {
        next = std::isfinite(lo) ? u + 2.0 : u - 2.0;
      }
    }
    const double step = std::abs(next - u);
    u = next;
    if (step <= 1e-15 * std::max(1.0, std::abs(u))) break;
  }
  return std::exp(u);
}

}  // namespace detail

/// Student-t quantile: x with CDF_t(x; dof) = percentile.
inline double t_quantile(TQuantileQuery query) {
  const double p = query.percentile;
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("t_quantile: percentile must lie in (0, 1), got " + std::to_string(p));
  }
  if (query.dof < 1) {
    throw DomainError("t_quantile: dof must be >= 1, got " + std::to_string(query.dof));
  }
  if (p == 0.5) return 0.0;
  const auto nu = static_cast<double>(query.dof);
  if (p > 0.5) return detail::t_upper_quantile(1.0 - p, nu);
  return -detail::t_upper_quantile(p, nu);
}

inline double t_quantile(double percentile, std::int64_t dof) {
  return t_quantile(TQuantileQuery{percentile, dof});
}

/// The 100(1 - 1/t^alpha)-th percentile of Student-t with `dof` degrees of
/// freedom. The upper-tail probability 1/t^alpha is computed directly (no
/// 1 - p cancellation) and clamped below at 1e-15.
inline double critical_value(double t, double alpha, std::int64_t dof) {
  if (!(t >= 2.0)) throw DomainError("critical_value: round index must be >= 2");
  if (!(alpha > 1.0)) throw DomainError("critical_value: alpha must be > 1");
  if (dof < 1) {
    throw DomainError("critical_value: dof " + std::to_string(dof) +
                      " < 1; keep warm-starting this arm");
  }
  const double tail = std::max(std::pow(t, -alpha), detail::kMinTailProbability);
  return detail::t_upper_quantile(tail, static_cast<double>(dof));
}

/// Critical value of the UCB index for an arm with `samples` observations and
/// `cvs` control variates: dof = samples - cvs - 2.
inline double ucb_critical_value(std::int64_t t, std::int64_t samples, std::int64_t cvs,
                                 double alpha) {
  return critical_value(static_cast<double>(t), alpha, samples - cvs - 2);
}

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  std::optional<double> variance_unbiased;  // present iff count >= 2

  double variance() const {
    if (!variance_unbiased) throw DomainError("variance needs at least 2 samples");
    return *variance_unbiased;
  }
};

inline SampleSummary summarize(std::span<const double> samples) {
  SampleSummary s;
  s.count = samples.size();
  if (s.count == 0) return s;
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean = sum / static_cast<double>(s.count);
  if (s.count >= 2) {
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.variance_unbiased = ss / static_cast<double>(s.count - 1);
  }
  return s;
}

struct ConfidenceBand {
  double mean;
  double low;
  double high;
};

/// mean +/- t_{(1+level)/2, n-1} * stderr over per-run values.
inline ConfidenceBand confidence_band(std::span<const double> per_run_values,
                                      double level = 0.95) {
  if (per_run_values.size() < 2) {
    throw DomainError("confidence_band: need at least 2 runs");
  }
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence_band: level must be in (0, 1)");
  const SampleSummary s = summarize(per_run_values);
  const double half = t_quantile(0.5 + 0.5 * level, static_cast<std::int64_t>(s.count) - 1) *
                      std::sqrt(*s.variance_unbiased / static_cast<double>(s.count));
  return {s.mean, s.mean - half, s.mean + half};
}

}  // namespace lcv

#endif  // LCVBANDIT_STATS_HPP_
