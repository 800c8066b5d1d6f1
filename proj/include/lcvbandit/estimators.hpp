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

#ifndef LCVBANDIT_ESTIMATORS_HPP_
#define LCVBANDIT_ESTIMATORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lcvbandit/errors.hpp"

namespace lcv {

/// Raw observation logs of one arm: rewards seen without a control variate
/// and (reward, cv) pairs. CV vectors are stored row-major, q per pair.
struct ArmHistory {
  std::size_t q = 1;
  std::vector<double> no_cv_rewards;
  std::vector<double> cv_rewards;
  std::vector<double> cv_values;

  ArmHistory() = default;
  explicit ArmHistory(std::size_t cvs) : q(cvs) {}

  std::size_t N() const { return no_cv_rewards.size(); }
  std::size_t M() const { return cv_rewards.size(); }
  std::size_t S() const { return N() + M(); }

  void add_no_cv(double reward) { no_cv_rewards.push_back(reward); }
  void add_cv_pair(double reward, std::span<const double> cv) {
    if (cv.size() != q) {
      throw DomainError("cv vector has length " + std::to_string(cv.size()) + ", expected " +
                        std::to_string(q));
    }
    cv_rewards.push_back(reward);
    cv_values.insert(cv_values.end(), cv.begin(), cv.end());
  }
  std::span<const double> cv_row(std::size_t m) const {
    return std::span<const double>(cv_values).subspan(m * q, q);
  }
};

/// Running count / mean / sum of squared deviations (Welford).
struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
};

/// Centered first and second moments of (reward, cv) pairs: means plus the
/// sums of cross products of deviations. Supports streaming updates.
struct CvMoments {
  std::size_t q = 1;
  std::size_t count = 0;
  double mean_x = 0.0;
  double cxx = 0.0;
  std::vector<double> mean_w;
  std::vector<double> cxw;
  std::vector<double> cww;  // q x q, row-major

  CvMoments() : CvMoments(1) {}
  explicit CvMoments(std::size_t cvs)
      : q(cvs), mean_w(cvs, 0.0), cxw(cvs, 0.0), cww(cvs * cvs, 0.0) {}

  void add(double x, std::span<const double> w) {
    ++count;
    const double n = static_cast<double>(count);
    const double dx = x - mean_x;
    mean_x += dx / n;
    const double dx_new = x - mean_x;
    cxx += dx * dx_new;
    if (q == 1) {
      const double dw = w[0] - mean_w[0];
      mean_w[0] += dw / n;
      cxw[0] += dw * dx_new;
      cww[0] += dw * (w[0] - mean_w[0]);
      return;
    }
    std::vector<double> dw(q);
    for (std::size_t j = 0; j < q; ++j) {
      dw[j] = w[j] - mean_w[j];
      mean_w[j] += dw[j] / n;
    }
    for (std::size_t j = 0; j < q; ++j) {
      cxw[j] += dw[j] * dx_new;
      for (std::size_t k = 0; k < q; ++k) cww[j * q + k] += dw[j] * (w[k] - mean_w[k]);
    }
  }

  // Two-pass construction over pairs [first, last) of `h`.
  static CvMoments from_history(const ArmHistory& h, std::size_t first, std::size_t last) {
    CvMoments mo(h.q);
    mo.count = last - first;
    if (mo.count == 0) return mo;
    const double n = static_cast<double>(mo.count);
    for (std::size_t m = first; m < last; ++m) {
      mo.mean_x += h.cv_rewards[m];
      for (std::size_t j = 0; j < h.q; ++j) mo.mean_w[j] += h.cv_values[m * h.q + j];
    }
    mo.mean_x /= n;
    for (double& v : mo.mean_w) v /= n;
    for (std::size_t m = first; m < last; ++m) {
      const double dx = h.cv_rewards[m] - mo.mean_x;
      mo.cxx += dx * dx;
      for (std::size_t j = 0; j < h.q; ++j) {
        const double dj = h.cv_values[m * h.q + j] - mo.mean_w[j];
        mo.cxw[j] += dx * dj;
        for (std::size_t k = 0; k < h.q; ++k) {
          mo.cww[j * h.q + k] += dj * (h.cv_values[m * h.q + k] - mo.mean_w[k]);
        }
      }
    }
    return mo;
  }
  static CvMoments from_history(const ArmHistory& h) { return from_history(h, 0, h.M()); }
};

struct BetaStar {
  std::vector<double> coefficients;
};

/// Output of a CV-side estimator: the mean and the estimated variance of
/// that mean. `z` and `beta` are filled by the Gaussian estimator only.
struct CvEstimate {
  double mu_c = 0.0;
  double B = 0.0;
  double z = 1.0;
  BetaStar beta;
};

struct NoCvEstimate {
  double mu_nc = 0.0;
  std::optional<double> A;  // needs N >= 2
};

enum class Forced { kNone, kLambdaOne, kLambdaZero };

inline const char* to_string(Forced f) {
  switch (f) {
    case Forced::kNone: return "none";
    case Forced::kLambdaOne: return "lambda_one";
    case Forced::kLambdaZero: return "lambda_zero";
  }
  return "unknown";
}

struct CombinedEstimate {
  double mu_hat = 0.0;
  double nu_hat = 0.0;
  double lambda_hat = 1.0;
  double A = 0.0;
  double B = 0.0;
  std::int64_t dof = 0;
  Forced forced = Forced::kNone;
};

namespace detail {

// Solves C x = rhs for the symmetric positive semi-definite q x q matrix C.
// Returns nullopt when C is numerically singular.
inline std::optional<std::vector<double>> solve_gram(std::span<const double> c,
                                                     std::span<const double> rhs, std::size_t q) {
  if (q == 1) {
    if (!(c[0] > 0.0)) return std::nullopt;
    return std::vector<double>{rhs[0] / c[0]};
  }
  const Eigen::Map<const Eigen::MatrixXd> cm(c.data(), static_cast<Eigen::Index>(q),
                                             static_cast<Eigen::Index>(q));
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(q));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cm);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::VectorXd x = lu.solve(b);
  return std::vector<double>(x.data(), x.data() + x.size());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

inline bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

inline void check_omega(std::span<const double> omega, std::size_t q) {
  if (omega.size() != q) {
    throw DomainError("omega has length " + std::to_string(omega.size()) + ", expected " +
                      std::to_string(q));
  }
}

// beta from the centered normal equations. When every cv equals omega the
// correction vanishes for any beta and 0 is returned.
inline std::vector<double> beta_from_moments(const CvMoments& mo, std::span<const double> d_bar) {
  if (auto beta = solve_gram(mo.cww, mo.cxw, mo.q)) return *beta;
  if (all_zero(mo.cww) && all_zero(d_bar)) return std::vector<double>(mo.q, 0.0);
  throw DegenerateCvError("control variate second-moment matrix is singular");
}

// Point estimate only, without B.
inline double cv_point_estimate(const CvMoments& mo, std::span<const double> omega) {
  std::vector<double> d_bar(mo.q);
  for (std::size_t j = 0; j < mo.q; ++j) d_bar[j] = mo.mean_w[j] - omega[j];
  const std::vector<double> beta = beta_from_moments(mo, d_bar);
  return mo.mean_x - dot(beta, d_bar);
}

}  // namespace detail

/// Sample mean of the no-CV rewards and the variance estimate of that mean,
/// sum (x - mean)^2 / (N (N - 1)).
inline NoCvEstimate mean_no_cv(std::span<const double> rewards) {
  if (rewards.empty()) throw NoEstimateError("mean_no_cv: no observations without control variate");
  NoCvEstimate e;
  double sum = 0.0;
  for (double x : rewards) sum += x;
  const double n = static_cast<double>(rewards.size());
  e.mu_nc = sum / n;
  if (rewards.size() >= 2) {
    double ss = 0.0;
    for (double x : rewards) ss += (x - e.mu_nc) * (x - e.mu_nc);
    e.A = ss / (n * (n - 1.0));
  }
  return e;
}

inline NoCvEstimate mean_no_cv(const ArmHistory& h) { return mean_no_cv(h.no_cv_rewards); }

inline NoCvEstimate mean_no_cv(const RunningMoments& rm) {
  if (rm.count == 0) throw NoEstimateError("mean_no_cv: no observations without control variate");
  NoCvEstimate e{rm.mean, std::nullopt};
  if (rm.count >= 2) {
    const double n = static_cast<double>(rm.count);
    e.A = rm.m2 / (n * (n - 1.0));
  }
  return e;
}

/// Regression coefficient of reward on the control variates, from the
/// centered system (W'W - M w w') beta = W'X - M w x.
inline BetaStar beta_star(const CvMoments& mo, std::span<const double> omega) {
  detail::check_omega(omega, mo.q);
  if (mo.count < mo.q + 2) {
    throw NoEstimateError("beta_star: need at least q + 2 pairs, have " + std::to_string(mo.count));
  }
  std::vector<double> d_bar(mo.q);
  for (std::size_t j = 0; j < mo.q; ++j) d_bar[j] = mo.mean_w[j] - omega[j];
  return {detail::beta_from_moments(mo, d_bar)};
}

inline BetaStar beta_star(const ArmHistory& h, std::span<const double> omega) {
  return beta_star(CvMoments::from_history(h), omega);
}

/// CV-adjusted mean mu_c = x_bar + beta'(omega - w_bar) and its variance
/// estimate B = Z * RSS / (M (M - q - 1)) with Z = 1 + M d' Cww^-1 d,
/// d = w_bar - omega. Exact for multivariate normal data.
inline CvEstimate mean_cv(const CvMoments& mo, std::span<const double> omega) {
  detail::check_omega(omega, mo.q);
  const std::size_t q = mo.q;
  if (mo.count < q + 2) {
    throw NoEstimateError("mean_cv: need at least q + 2 pairs, have " + std::to_string(mo.count));
  }
  const double m = static_cast<double>(mo.count);
  std::vector<double> d_bar(q);
  for (std::size_t j = 0; j < q; ++j) d_bar[j] = mo.mean_w[j] - omega[j];

  CvEstimate e;
  e.beta.coefficients = detail::beta_from_moments(mo, d_bar);
  const std::vector<double>& beta = e.beta.coefficients;
  e.mu_c = mo.mean_x - detail::dot(beta, d_bar);
  const double rss = std::max(mo.cxx - detail::dot(beta, mo.cxw), 0.0);
  if (!detail::all_zero(d_bar)) {
    const auto gamma = detail::solve_gram(mo.cww, d_bar, q);
    if (!gamma) throw DegenerateCvError("mean_cv: control variates are constant but differ from omega");
    e.z = 1.0 + m * detail::dot(d_bar, *gamma);
  }
  e.B = e.z * rss / (m * (m - static_cast<double>(q) - 1.0));
  return e;
}

inline CvEstimate mean_cv(const ArmHistory& h, std::span<const double> omega) {
  return mean_cv(CvMoments::from_history(h), omega);
}

/// Mean of the M leave-one-out CV estimates; B is the jackknife variance
/// (M - 1)/M * sum (theta_j - theta_bar)^2.
inline CvEstimate jackknife_mean_cv(const ArmHistory& h, std::span<const double> omega) {
  detail::check_omega(omega, h.q);
  const std::size_t q = h.q;
  const std::size_t count = h.M();
  if (count < q + 3) {
    throw NoEstimateError("jackknife_mean_cv: need at least q + 3 pairs, have " +
                          std::to_string(count));
  }
  const CvMoments full = CvMoments::from_history(h);
  const double m = static_cast<double>(count);
  const double shrink = m / (m - 1.0);
  std::vector<double> d_bar(q);
  for (std::size_t j = 0; j < q; ++j) d_bar[j] = full.mean_w[j] - omega[j];
  const bool trivial = detail::all_zero(full.cww) && detail::all_zero(d_bar);

  // delta[j] = theta_{-j} - x_bar, from downdated moments.
  std::vector<double> delta(count);
  CvMoments loo(q);
  std::vector<double> dw(q), d_loo(q);
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = h.cv_rewards[i] - full.mean_x;
    for (std::size_t j = 0; j < q; ++j) {
      dw[j] = h.cv_values[i * q + j] - full.mean_w[j];
      d_loo[j] = d_bar[j] - dw[j] / (m - 1.0);
    }
    if (trivial) {
      delta[i] = -dx / (m - 1.0);
      continue;
    }
    if (q == 1) {
      const double cww = full.cww[0] - shrink * dw[0] * dw[0];
      if (!(cww > 0.0)) throw DegenerateCvError("jackknife_mean_cv: singular leave-one-out system");
      delta[i] = -dx / (m - 1.0) - (full.cxw[0] - shrink * dx * dw[0]) / cww * d_loo[0];
      continue;
    }
    for (std::size_t j = 0; j < q; ++j) {
      loo.cxw[j] = full.cxw[j] - shrink * dx * dw[j];
      for (std::size_t k = 0; k < q; ++k) {
        loo.cww[j * q + k] = full.cww[j * q + k] - shrink * dw[j] * dw[k];
      }
    }
    const auto beta = detail::solve_gram(loo.cww, loo.cxw, q);
    if (!beta) throw DegenerateCvError("jackknife_mean_cv: singular leave-one-out system");
    delta[i] = -dx / (m - 1.0) - detail::dot(*beta, d_loo);
  }
  double mean_delta = 0.0;
  for (double d : delta) mean_delta += d;
  mean_delta /= m;
  double ss = 0.0;
  for (double d : delta) ss += (d - mean_delta) * (d - mean_delta);
  CvEstimate e;
  e.mu_c = full.mean_x + mean_delta;
  e.B = (m - 1.0) / m * ss;
  return e;
}

/// Splitting: x_bar_n = x_n + beta_{-n}'(omega - w_n) with beta_{-n} fitted
/// without pair n; mu_c is their mean and B their sample variance over M.
inline CvEstimate splitting_mean_cv(const ArmHistory& h, std::span<const double> omega) {
  detail::check_omega(omega, h.q);
  const std::size_t q = h.q;
  const std::size_t count = h.M();
  if (count < q + 3) {
    throw NoEstimateError("splitting_mean_cv: need at least q + 3 pairs, have " +
                          std::to_string(count));
  }
  const CvMoments full = CvMoments::from_history(h);
  const double m = static_cast<double>(count);
  const double shrink = m / (m - 1.0);
  std::vector<double> d_bar(q);
  for (std::size_t j = 0; j < q; ++j) d_bar[j] = full.mean_w[j] - omega[j];
  const bool trivial = detail::all_zero(full.cww) && detail::all_zero(d_bar);

  // y[n] = x_bar_n - x_bar(all), with omega - w_n = -(dw_n + d_bar).
  std::vector<double> y(count);
  CvMoments loo(q);
  std::vector<double> dw(q), shift(q);
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = h.cv_rewards[i] - full.mean_x;
    if (trivial) {
      y[i] = dx;
      continue;
    }
    for (std::size_t j = 0; j < q; ++j) {
      dw[j] = h.cv_values[i * q + j] - full.mean_w[j];
      shift[j] = dw[j] + d_bar[j];
    }
    if (q == 1) {
      const double cww = full.cww[0] - shrink * dw[0] * dw[0];
      if (!(cww > 0.0)) throw DegenerateCvError("splitting_mean_cv: singular leave-one-out system");
      y[i] = dx - (full.cxw[0] - shrink * dx * dw[0]) / cww * shift[0];
      continue;
    }
    for (std::size_t j = 0; j < q; ++j) {
      loo.cxw[j] = full.cxw[j] - shrink * dx * dw[j];
      for (std::size_t k = 0; k < q; ++k) {
        loo.cww[j * q + k] = full.cww[j * q + k] - shrink * dw[j] * dw[k];
      }
    }
    const auto beta = detail::solve_gram(loo.cww, loo.cxw, q);
    if (!beta) throw DegenerateCvError("splitting_mean_cv: singular leave-one-out system");
    y[i] = dx - detail::dot(*beta, shift);
  }
  double mean_y = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= m;
  double ss = 0.0;
  for (double v : y) ss += (v - mean_y) * (v - mean_y);
  CvEstimate e;
  e.mu_c = full.mean_x + mean_y;
  e.B = ss / (m - 1.0) / m;
  return e;
}

/// Batch boundaries: batch_count contiguous batches of floor(M / batch_count)
/// pairs, the remainder going to the last batch.
inline std::vector<std::size_t> batch_bounds(std::size_t count, std::size_t batch_count) {
  std::vector<std::size_t> bounds(batch_count + 1);
  const std::size_t size = count / batch_count;
  for (std::size_t b = 0; b < batch_count; ++b) bounds[b] = b * size;
  bounds[batch_count] = count;
  return bounds;
}

/// Batching: the CV estimate per contiguous batch; mu_c is their average and
/// B their sample variance divided by batch_count.
inline CvEstimate batching_mean_cv(const ArmHistory& h, std::span<const double> omega,
                                   std::size_t batch_count = 5) {
  detail::check_omega(omega, h.q);
  if (batch_count < 2) throw DomainError("batching_mean_cv: batch_count must be >= 2");
  if (h.M() < batch_count * (h.q + 2)) {
    throw NoEstimateError("batching_mean_cv: need at least batch_count * (q + 2) pairs, have " +
                          std::to_string(h.M()));
  }
  const std::vector<std::size_t> bounds = batch_bounds(h.M(), batch_count);
  std::vector<double> theta(batch_count);
  for (std::size_t b = 0; b < batch_count; ++b) {
    theta[b] = detail::cv_point_estimate(CvMoments::from_history(h, bounds[b], bounds[b + 1]), omega);
  }
  const double k = static_cast<double>(batch_count);
  double mean = 0.0;
  for (double v : theta) mean += v;
  mean /= k;
  double ss = 0.0;
  for (double v : theta) ss += (v - mean) * (v - mean);
  CvEstimate e;
  e.mu_c = mean;
  e.B = ss / (k - 1.0) / k;
  return e;
}

/// Sample counts an estimate was built from.
struct EstimateCounts {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t q = 1;
};

/// Convex combination lambda * mu_nc + (1 - lambda) * mu_c with
/// lambda = B / (A + B) and variance A B / (A + B). A missing side forces
/// lambda to 1 (no CV estimate) or 0 (fewer than 2 plain rewards).
inline CombinedEstimate combine(const std::optional<NoCvEstimate>& no_cv,
                                const std::optional<CvEstimate>& cv, EstimateCounts counts) {
  const bool have_nc = no_cv && no_cv->A;
  const auto s = static_cast<std::int64_t>(counts.n + counts.m);
  const std::int64_t cv_dof = s - static_cast<std::int64_t>(counts.q) - 2;
  CombinedEstimate out;
  if (have_nc && cv) {
    out.A = *no_cv->A;
    out.B = cv->B;
    const double total = out.A + out.B;
    out.lambda_hat = total > 0.0 ? out.B / total : 0.5;
    out.mu_hat = out.lambda_hat * no_cv->mu_nc + (1.0 - out.lambda_hat) * cv->mu_c;
    out.nu_hat = total > 0.0 ? out.A * out.B / total : 0.0;
    out.dof = cv_dof;
    out.forced = Forced::kNone;
  } else if (cv) {
    out.B = cv->B;
    out.lambda_hat = 0.0;
    out.mu_hat = cv->mu_c;
    out.nu_hat = cv->B;
    out.dof = cv_dof;
    out.forced = Forced::kLambdaZero;
  } else if (have_nc) {
    out.A = *no_cv->A;
    out.lambda_hat = 1.0;
    out.mu_hat = no_cv->mu_nc;
    out.nu_hat = out.A;
    out.dof = static_cast<std::int64_t>(counts.n) - 1;
    out.forced = Forced::kLambdaOne;
  } else {
    throw NoEstimateError("combine: neither estimator is available");
  }
  return out;
}

/// Variance of the combined estimator at the optimal lambda and beta:
/// (1 - rho^2) sigma2 / (m + n (1 - rho^2)).
inline double variance_combined_theoretical(double sigma2, double rho, double m, double n) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("variance_combined_theoretical: |rho| must be < 1");
  if (!(sigma2 > 0.0)) throw DomainError("variance_combined_theoretical: sigma2 must be > 0");
  if (!(m >= 0.0 && n >= 0.0 && m + n >= 1.0)) {
    throw DomainError("variance_combined_theoretical: need m, n >= 0 and m + n >= 1");
  }
  const double r = 1.0 - rho * rho;
  return r * sigma2 / (m + n * r);
}

/// Variance of the combined estimator relative to the plain mean of all
/// m + n rewards: (m + n)(1 - rho^2) / (m + n (1 - rho^2)).
inline double variance_ratio(double m, double n, double rho) {
  if (!(std::abs(rho) < 1.0)) throw DomainError("variance_ratio: |rho| must be < 1");
  if (!(m >= 0.0 && n >= 0.0 && m + n >= 1.0)) {
    throw DomainError("variance_ratio: need m, n >= 0 and m + n >= 1");
  }
  const double r = 1.0 - rho * rho;
  return (m + n) * r / (m + n * r);
}

}  // namespace lcv

#endif  // LCVBANDIT_ESTIMATORS_HPP_
