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

#ifndef LCVBANDIT_POLICIES_HPP_
#define LCVBANDIT_POLICIES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcvbandit/environment.hpp"
#include "lcvbandit/errors.hpp"
#include "lcvbandit/estimators.hpp"
#include "lcvbandit/rng.hpp"
#include "lcvbandit/stats.hpp"

namespace lcv {

enum class PolicyKind { kUcbLcv, kUcbNormal, kUcb1, kUcb1Normal, kKlUcb, kUcbV, kThompson };
enum class EstimatorVariant { kGaussian, kJackknife, kSplitting, kBatching };

// Where a CV-carrying observation goes. kAlways files it under the CV set;
// kGated files it there only once the arm already holds M = q + 2 pairs,
// which never happens if it starts below that.
enum class Routing { kAlways, kGated };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kUcbLcv: return "ucb_lcv";
    case PolicyKind::kUcbNormal: return "ucb_normal";
    case PolicyKind::kUcb1: return "ucb1";
    case PolicyKind::kUcb1Normal: return "ucb1_normal";
    case PolicyKind::kKlUcb: return "kl_ucb";
    case PolicyKind::kUcbV: return "ucb_v";
    case PolicyKind::kThompson: return "thompson";
  }
  return "unknown";
}

inline std::string_view to_string(EstimatorVariant v) {
  switch (v) {
    case EstimatorVariant::kGaussian: return "gaussian";
    case EstimatorVariant::kJackknife: return "jackknife";
    case EstimatorVariant::kSplitting: return "splitting";
    case EstimatorVariant::kBatching: return "batching";
  }
  return "unknown";
}

inline std::string_view to_string(Routing r) { return r == Routing::kAlways ? "always" : "gated"; }

inline std::optional<PolicyKind> parse_policy_kind(std::string_view s) {
  for (auto k : {PolicyKind::kUcbLcv, PolicyKind::kUcbNormal, PolicyKind::kUcb1, PolicyKind::kUcb1Normal,
                 PolicyKind::kKlUcb, PolicyKind::kUcbV, PolicyKind::kThompson}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::optional<EstimatorVariant> parse_estimator_variant(std::string_view s) {
  for (auto v : {EstimatorVariant::kGaussian, EstimatorVariant::kJackknife, EstimatorVariant::kSplitting,
                 EstimatorVariant::kBatching}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

inline std::optional<Routing> parse_routing(std::string_view s) {
  if (s == "always") return Routing::kAlways;
  if (s == "gated") return Routing::kGated;
  return std::nullopt;
}

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kUcbLcv;
  std::string name;  // display label; defaults to the kind name
  double alpha = 2.0;
  std::size_t q = 1;
  EstimatorVariant estimator_variant = EstimatorVariant::kGaussian;
  std::optional<double> ucb_v_range;
  std::size_t batch_count = 5;
  Routing routing = Routing::kAlways;

  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }

  // Pairs needed before the CV side is used at all.
  std::size_t cv_threshold() const { return q + 2; }

  // Plays per arm during the warm start.
  std::size_t warm_start_plays() const {
    switch (kind) {
      case PolicyKind::kUcbLcv:
      case PolicyKind::kUcbNormal: return q + 4;
      case PolicyKind::kUcb1: return 1;
      default: return 2;
    }
  }

  void validate() const {
    if (!(alpha > 1.0)) throw DomainError("alpha must be > 1");
    if (q < 1) throw DomainError("q must be >= 1");
    if (batch_count < 2) throw DomainError("batch_count must be >= 2");
    if (ucb_v_range && !(*ucb_v_range > 0.0)) throw DomainError("ucb_v_range must be > 0");
  }

  bool operator==(const PolicyConfig&) const = default;
};

// -- Index formulas ------------------------------------------------------------

/// mu_hat + t-quantile(1 - 1/t^alpha, dof) * sqrt(nu_hat). The estimate carries
/// its dof: S - q - 2 with a CV component, N - 1 without.
inline double ucb_lcv_index(const CombinedEstimate& est, std::int64_t t, double alpha) {
  if (est.dof < 1) {
    throw WarmStartIncompleteError("ucb_lcv_index: dof " + std::to_string(est.dof) + " < 1");
  }
  if (est.nu_hat == 0.0) return est.mu_hat;
  return est.mu_hat + critical_value(static_cast<double>(t), alpha, est.dof) * std::sqrt(est.nu_hat);
}

inline double ucb_normal_index(std::span<const double> rewards, std::int64_t t, double alpha) {
  if (rewards.size() < 2) throw WarmStartIncompleteError("ucb_normal_index: need 2 samples");
  const NoCvEstimate e = mean_no_cv(rewards);
  CombinedEstimate est;
  est.mu_hat = e.mu_nc;
  est.nu_hat = *e.A;
  est.A = *e.A;
  est.dof = static_cast<std::int64_t>(rewards.size()) - 1;
  est.forced = Forced::kLambdaOne;
  return ucb_lcv_index(est, t, alpha);
}

struct BaselineParams {
  double ucb_v_range = 1.0;  // b in the UCB-V bonus
};

/// Index of a baseline policy from one arm's reward moments at round t.
/// Thompson needs `rng` and returns a posterior draw.
inline double baseline_index(PolicyKind kind, const RunningMoments& arm, std::int64_t t,
                             const BaselineParams& params = {}, RngStream* rng = nullptr) {
  const double s = static_cast<double>(arm.count);
  const double log_t = std::log(static_cast<double>(t));
  auto need = [&](std::size_t n) {
    if (arm.count < n) {
      throw WarmStartIncompleteError(std::string(to_string(kind)) + " index needs " + std::to_string(n) +
                                     " samples, have " + std::to_string(arm.count));
    }
  };
  switch (kind) {
    case PolicyKind::kUcb1:
      need(1);
      return arm.mean + std::sqrt(2.0 * log_t / s);
    case PolicyKind::kUcb1Normal: {
      need(2);
      const double v = arm.m2 / (s - 1.0);
      return arm.mean + std::sqrt(16.0 * v * std::log(static_cast<double>(t - 1)) / s);
    }
    case PolicyKind::kKlUcb: {
      need(2);
      const double v = arm.m2 / (s - 1.0);
      return arm.mean + std::sqrt(2.0 * v * log_t / s);
    }
    case PolicyKind::kUcbV: {
      need(2);
      const double v_biased = arm.m2 / s;
      return arm.mean + std::sqrt(2.0 * v_biased * log_t / s) + 3.0 * params.ucb_v_range * log_t / s;
    }
    case PolicyKind::kThompson: {
      need(2);
      if (rng == nullptr) throw DomainError("thompson index needs an RngStream");
      const double v = arm.m2 / (s - 1.0);
      if (v == 0.0) return arm.mean;
      return normal_draw(arm.mean, v / s, *rng);
    }
    default:
      throw DomainError("baseline_index: not a baseline kind");
  }
}

// -- Policies ----------------------------------------------------------------

class BanditPolicy {
 public:
  BanditPolicy(PolicyConfig config, std::size_t arms) : config_(std::move(config)), plays_(arms, 0) {
    config_.validate();
    if (arms < 2) throw DomainError("a policy needs at least 2 arms");
  }
  virtual ~BanditPolicy() = default;

  /// Arm to play in the current round: round-robin during the warm start,
  /// then the index argmax with ties to the lowest arm.
  virtual std::size_t select_arm() = 0;

  /// Records the observation for `arm` and advances the round.
  void update(std::size_t arm, const Observation& obs) {
    if (arm >= plays_.size()) throw DomainError("update: arm index out of range");
    ++plays_[arm];
    ++round_;
    record(arm, obs);
  }

  const PolicyConfig& config() const { return config_; }
  std::size_t num_arms() const { return plays_.size(); }
  std::int64_t round() const { return round_; }  // 1-based index of the next round
  std::size_t plays(std::size_t arm) const { return plays_[arm]; }

 protected:
  virtual void record(std::size_t arm, const Observation& obs) = 0;

  std::optional<std::size_t> warm_start_arm() const {
    const auto k = static_cast<std::int64_t>(plays_.size());
    if (round_ <= k * static_cast<std::int64_t>(config_.warm_start_plays())) {
      return static_cast<std::size_t>((round_ - 1) % k);
    }
    return std::nullopt;
  }

  template <typename IndexFn>
  std::size_t argmax(IndexFn&& index) {
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plays_.size(); ++i) {
      const double v = index(i);
      if (i == 0 || v > best_value) {
        best = i;
        best_value = v;
      }
    }
    return best;
  }

  PolicyConfig config_;
  std::vector<std::size_t> plays_;
  std::int64_t round_ = 1;
};

/// UCB-LCV and, with CVs ignored, UCB-NORMAL.
class UcbLcvPolicy final : public BanditPolicy {
 public:
  UcbLcvPolicy(PolicyConfig config, std::vector<std::vector<double>> omega)
      : BanditPolicy(std::move(config), omega.size()), omega_(std::move(omega)) {
    const std::size_t q = config_.q;
    for (const auto& w : omega_) {
      if (w.size() != q) throw DomainError("omega length does not match q");
    }
    arms_.reserve(omega_.size());
    for (std::size_t i = 0; i < omega_.size(); ++i) arms_.emplace_back(q);
  }

  std::size_t select_arm() override {
    if (auto arm = warm_start_arm()) return *arm;
    return argmax([this](std::size_t i) { return index(i); });
  }

  /// Current index of `arm`; +inf while the arm has no usable estimate.
  double index(std::size_t arm) {
    const ArmState& a = arms_[arm];
    if (!a.estimate) return std::numeric_limits<double>::infinity();
    const CombinedEstimate& est = *a.estimate;
    if (est.dof < 1) throw WarmStartIncompleteError("ucb_lcv: arm played too few times");
    if (est.nu_hat == 0.0) return est.mu_hat;
    return est.mu_hat + critical(est.dof) * std::sqrt(est.nu_hat);
  }

  const ArmHistory& history(std::size_t arm) const { return arms_[arm].history; }
  const std::optional<CombinedEstimate>& estimate(std::size_t arm) const { return arms_[arm].estimate; }

 private:
  struct ArmState {
    explicit ArmState(std::size_t q) : history(q), cv_moments(q) {}
    ArmHistory history;
    RunningMoments no_cv;
    CvMoments cv_moments;
    std::optional<CombinedEstimate> estimate;
  };

  void record(std::size_t arm, const Observation& obs) override {
    ArmState& a = arms_[arm];
    const bool use_cv = config_.kind == PolicyKind::kUcbLcv && obs.cv.has_value() &&
                        (config_.routing == Routing::kAlways || a.history.M() >= config_.cv_threshold());
    if (use_cv) {
      a.history.add_cv_pair(obs.reward, *obs.cv);
      a.cv_moments.add(obs.reward, *obs.cv);
    } else {
      a.history.add_no_cv(obs.reward);
      a.no_cv.add(obs.reward);
    }
    a.estimate = estimate_arm(arm);
  }

  std::optional<CvEstimate> cv_side(std::size_t arm) const {
    const ArmState& a = arms_[arm];
    const std::size_t m = a.history.M();
    const std::size_t q = config_.q;
    if (m < config_.cv_threshold()) return std::nullopt;
    const std::vector<double>& omega = omega_[arm];
    try {
      // A resampling variant falls back to the Gaussian estimator until it
      // has enough pairs of its own.
      switch (config_.estimator_variant) {
        case EstimatorVariant::kJackknife:
          if (m >= q + 3) return jackknife_mean_cv(a.history, omega);
          break;
        case EstimatorVariant::kSplitting:
          if (m >= q + 3) return splitting_mean_cv(a.history, omega);
          break;
        case EstimatorVariant::kBatching:
          if (m >= config_.batch_count * (q + 2)) {
            return batching_mean_cv(a.history, omega, config_.batch_count);
          }
          break;
        case EstimatorVariant::kGaussian:
          break;
      }
      return mean_cv(a.cv_moments, omega);
    } catch (const DegenerateCvError&) {
      return std::nullopt;
    }
  }

  std::optional<CombinedEstimate> estimate_arm(std::size_t arm) const {
    const ArmState& a = arms_[arm];
    std::optional<NoCvEstimate> nc;
    if (a.no_cv.count >= 2) nc = mean_no_cv(a.no_cv);
    const std::optional<CvEstimate> cv = cv_side(arm);
    if (!nc && !cv) return std::nullopt;
    return combine(nc, cv, {a.history.N(), a.history.M(), config_.q});
  }

  // Critical values are shared by all arms with the same dof in a round.
  double critical(std::int64_t dof) {
    const auto d = static_cast<std::size_t>(dof);
    if (d >= critical_cache_.size()) critical_cache_.resize(d + 1, {0, 0.0});
    auto& slot = critical_cache_[d];
    if (slot.first != round_) {
      slot = {round_, critical_value(static_cast<double>(round_), config_.alpha, dof)};
    }
    return slot.second;
  }

  std::vector<std::vector<double>> omega_;
  std::vector<ArmState> arms_;
  std::vector<std::pair<std::int64_t, double>> critical_cache_;
};

/// UCB1, UCB1-NORMAL, kl-UCB (Gaussian), UCB-V and Gaussian Thompson sampling.
class BaselinePolicy final : public BanditPolicy {
 public:
  BaselinePolicy(PolicyConfig config, std::size_t arms, RngStream rng)
      : BanditPolicy(std::move(config), arms), moments_(arms), rng_(rng) {
    if (config_.kind == PolicyKind::kUcbLcv || config_.kind == PolicyKind::kUcbNormal) {
      throw DomainError("BaselinePolicy: not a baseline kind");
    }
    if (config_.ucb_v_range) params_.ucb_v_range = *config_.ucb_v_range;
  }

  std::size_t select_arm() override {
    if (auto arm = warm_start_arm()) return *arm;
    if (config_.kind == PolicyKind::kUcbV && !config_.ucb_v_range && !range_fixed_) fix_ucb_v_range();
    if (config_.kind == PolicyKind::kUcb1Normal) {
      // Any arm below ceil(8 ln t) plays is played first, fewest plays first.
      const double floor_plays = std::max(2.0, std::ceil(8.0 * std::log(static_cast<double>(round_))));
      std::size_t least = 0;
      for (std::size_t i = 1; i < plays_.size(); ++i) {
        if (plays_[i] < plays_[least]) least = i;
      }
      if (static_cast<double>(plays_[least]) < floor_plays) return least;
    }
    return argmax([this](std::size_t i) { return baseline_index(config_.kind, moments_[i], round_, params_, &rng_); });
  }

  const RunningMoments& moments(std::size_t arm) const { return moments_[arm]; }
  double ucb_v_range() const { return params_.ucb_v_range; }

 private:
  void record(std::size_t arm, const Observation& obs) override { moments_[arm].add(obs.reward); }

  // b = 4 * pooled within-arm standard deviation of the warm-start samples.
  void fix_ucb_v_range() {
    double ss = 0.0;
    double dof = 0.0;
    for (const RunningMoments& m : moments_) {
      ss += m.m2;
      dof += static_cast<double>(m.count) - 1.0;
    }
    const double pooled = dof > 0.0 ? ss / dof : 0.0;
    params_.ucb_v_range = pooled > 0.0 ? 4.0 * std::sqrt(pooled) : 1.0;
    range_fixed_ = true;
  }

  std::vector<RunningMoments> moments_;
  RngStream rng_;
  BaselineParams params_;
  bool range_fixed_ = false;
};

inline std::unique_ptr<BanditPolicy> make_policy(const PolicyConfig& config,
                                                 const std::vector<std::vector<double>>& omega,
                                                 RngStream rng) {
  switch (config.kind) {
    case PolicyKind::kUcbLcv:
    case PolicyKind::kUcbNormal:
      return std::make_unique<UcbLcvPolicy>(config, omega);
    default:
      return std::make_unique<BaselinePolicy>(config, omega.size(), rng);
  }
}

inline std::unique_ptr<BanditPolicy> make_policy(const PolicyConfig& config, const InstanceSpec& instance,
                                                 RngStream rng) {
  if (config.q != instance.cv_count()) throw DomainError("policy q does not match the instance CV count");
  return make_policy(config, instance.omega_reported, rng);
}

}  // namespace lcv

#endif  // LCVBANDIT_POLICIES_HPP_
