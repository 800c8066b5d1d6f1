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

#ifndef LCVBANDIT_ENVIRONMENT_HPP_
#define LCVBANDIT_ENVIRONMENT_HPP_

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/random/lognormal_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "lcvbandit/errors.hpp"
#include "lcvbandit/rng.hpp"

namespace lcv {

enum class ArmKind { kGaussianAdditive, kMultiModal, kLogNormal };

inline std::string_view to_string(ArmKind kind) {
  switch (kind) {
    case ArmKind::kGaussianAdditive: return "gaussian_additive";
    case ArmKind::kMultiModal: return "multi_modal";
    case ArmKind::kLogNormal: return "log_normal";
  }
  return "unknown";
}

inline double normal_draw(double mean, double variance, RngStream& rng) {
  return boost::random::normal_distribution<double>(mean, std::sqrt(variance))(rng);
}

// Log-normal draw with the given mean and variance (moment matched).
inline double lognormal_draw(double mean, double variance, RngStream& rng) {
  const double s2 = std::log1p(variance / (mean * mean));
  const double m = std::log(mean) - 0.5 * s2;
  return boost::random::lognormal_distribution<double>(m, std::sqrt(s2))(rng);
}

/// X = V + Y with V ~ N(mu_v, sigma_v2), Y ~ N(mu_w, sigma_w2) independent;
/// returns (X, Y). corr(X, Y) = sqrt(sigma_w2 / (sigma_v2 + sigma_w2)).
inline std::pair<double, double> sample_bivariate_gaussian_additive(double mu_v, double sigma_v2,
                                                                    double mu_w, double sigma_w2,
                                                                    RngStream& rng) {
  if (!(sigma_v2 > 0.0) || !(sigma_w2 > 0.0)) {
    throw DomainError("sample_bivariate_gaussian_additive: variances must be positive");
  }
  const double v = normal_draw(mu_v, sigma_v2, rng);
  const double y = normal_draw(mu_w, sigma_w2, rng);
  return {v + y, y};
}

inline double implied_correlation(double sigma_v2, double sigma_w2) {
  return std::sqrt(sigma_w2 / (sigma_v2 + sigma_w2));
}

/// Joint (reward, control variates) model of one arm.
///
/// gaussian_additive: reward = V + sum_j Y_j, cv_j = Y_j.
/// multi_modal:       gaussian_additive (q = 1) plus +/- modal_shift on the
///                    reward only, each sign with probability 1/2.
/// log_normal:        cv = LogNormal(mu_w, sigma_w2), reward = LogNormal(mu_v,
///                    sigma_v2) + cv, both moment matched.
struct ArmModel {
  ArmKind kind = ArmKind::kGaussianAdditive;
  double mu_v = 0.0;
  double sigma_v2 = 0.01;
  double mu_w = 0.0;
  double sigma_w2 = 0.01;
  double modal_shift = 0.0;
  std::size_t q = 1;

  double true_mean() const { return mu_v + static_cast<double>(q) * mu_w; }
  double true_cv_mean() const { return mu_w; }
  double reward_variance() const {
    const double base = sigma_v2 + static_cast<double>(q) * sigma_w2;
    return kind == ArmKind::kMultiModal ? base + modal_shift * modal_shift : base;
  }

  void validate() const {
    if (!(sigma_v2 > 0.0) || !(sigma_w2 > 0.0)) throw DomainError("arm variances must be positive");
    if (!(modal_shift >= 0.0)) throw DomainError("modal_shift must be >= 0");
    if (kind != ArmKind::kGaussianAdditive && q != 1) {
      throw DomainError(std::string(to_string(kind)) + " arms carry exactly one control variate");
    }
    if (kind == ArmKind::kLogNormal && !(mu_v > 0.0 && mu_w > 0.0)) {
      throw DomainError("log_normal arms need positive component means");
    }
  }
};

struct CvAvailability {
  double epsilon = 0.5;
};

struct Observation {
  double reward = 0.0;
  std::optional<std::vector<double>> cv;  // length q when present
};

struct InstanceSpec {
  std::string name;
  std::vector<ArmModel> arms;
  CvAvailability availability;
  std::vector<std::vector<double>> omega_reported;  // per arm, length q
  std::size_t horizon = 10000;

  std::size_t num_arms() const { return arms.size(); }
  std::size_t cv_count() const { return arms.empty() ? 0 : arms.front().q; }

  // argmax of true means, lowest index on ties.
  std::size_t optimal_arm() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < arms.size(); ++i) {
      if (arms[i].true_mean() > arms[best].true_mean()) best = i;
    }
    return best;
  }

  std::vector<double> gaps() const {
    const double top = arms[optimal_arm()].true_mean();
    std::vector<double> out;
    out.reserve(arms.size());
    for (const ArmModel& arm : arms) out.push_back(top - arm.true_mean());
    return out;
  }

  void validate() const {
    if (arms.size() < 2) throw DomainError("an instance needs at least 2 arms");
    if (!(availability.epsilon >= 0.0 && availability.epsilon <= 1.0)) {
      throw DomainError("epsilon must lie in [0, 1]");
    }
    if (horizon == 0) throw DomainError("horizon must be positive");
    if (omega_reported.size() != arms.size()) throw DomainError("omega_reported needs one entry per arm");
    for (std::size_t i = 0; i < arms.size(); ++i) {
      arms[i].validate();
      if (arms[i].q != arms.front().q) throw DomainError("all arms must share the CV count");
      if (omega_reported[i].size() != arms[i].q) throw DomainError("omega_reported has wrong length");
    }
  }
};

/// One round's draw for `arm`: the joint (reward, cv) sample, then an
/// independent Bernoulli(epsilon) decides whether the cv is revealed.
inline Observation pull(const InstanceSpec& instance, std::size_t arm, RngStream& rng) {
  if (arm >= instance.arms.size()) {
    throw DomainError("pull: arm index " + std::to_string(arm) + " out of range");
  }
  const ArmModel& model = instance.arms[arm];
  Observation obs;
  std::vector<double> cv(model.q);
  switch (model.kind) {
    case ArmKind::kGaussianAdditive: {
      double reward = normal_draw(model.mu_v, model.sigma_v2, rng);
      for (double& w : cv) {
        w = normal_draw(model.mu_w, model.sigma_w2, rng);
        reward += w;
      }
      obs.reward = reward;
      break;
    }
    case ArmKind::kMultiModal: {
      const auto [reward, w] =
          sample_bivariate_gaussian_additive(model.mu_v, model.sigma_v2, model.mu_w, model.sigma_w2, rng);
      const double sign = (rng() >> 63) != 0 ? 1.0 : -1.0;
      obs.reward = reward + sign * model.modal_shift;
      cv[0] = w;
      break;
    }
    case ArmKind::kLogNormal: {
      cv[0] = lognormal_draw(model.mu_w, model.sigma_w2, rng);
      obs.reward = lognormal_draw(model.mu_v, model.sigma_v2, rng) + cv[0];
      break;
    }
  }
  if (rng.uniform01() < instance.availability.epsilon) obs.cv = std::move(cv);
  return obs;
}

// -- Experiment instances -----------------------------------------------------

/// Instance 1: mu_v,i = mu_w,i = 0.1 i, sigma_v2 = sigma_w2 = 0.01, epsilon 0.5.
inline InstanceSpec make_instance_1(std::size_t arms = 10, std::size_t cvs = 1) {
  InstanceSpec spec;
  spec.name = "instance1";
  spec.availability.epsilon = 0.5;
  for (std::size_t i = 1; i <= arms; ++i) {
    ArmModel arm;
    arm.mu_v = 0.1 * static_cast<double>(i);
    arm.mu_w = 0.1 * static_cast<double>(i);
    arm.q = cvs;
    spec.arms.push_back(arm);
    spec.omega_reported.emplace_back(cvs, arm.true_cv_mean());
  }
  return spec;
}

/// Instance 2: Instance 1 with every CV mean at 0.5.
inline InstanceSpec make_instance_2(std::size_t arms = 10, std::size_t cvs = 1) {
  InstanceSpec spec = make_instance_1(arms, cvs);
  spec.name = "instance2";
  for (std::size_t i = 0; i < spec.arms.size(); ++i) {
    spec.arms[i].mu_w = 0.5;
    spec.omega_reported[i].assign(cvs, 0.5);
  }
  return spec;
}

inline InstanceSpec make_instance_3(double epsilon, std::size_t arms = 10, std::size_t cvs = 1) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("make_instance_3: epsilon must lie in [0, 1]");
  InstanceSpec spec = make_instance_1(arms, cvs);
  spec.name = "instance3";
  spec.availability.epsilon = epsilon;
  return spec;
}

/// Instance 4: Instance 1 with every reported CV mean shifted by `cv_mean_error`.
inline InstanceSpec make_instance_4(double cv_mean_error, std::size_t arms = 10, std::size_t cvs = 1) {
  InstanceSpec spec = make_instance_1(arms, cvs);
  spec.name = "instance4";
  for (std::size_t i = 0; i < spec.arms.size(); ++i) {
    spec.omega_reported[i].assign(cvs, spec.arms[i].true_cv_mean() + cv_mean_error);
  }
  return spec;
}

struct GeneralInstances {
  InstanceSpec normal;
  InstanceSpec multi_modal;
  InstanceSpec log_normal;
};

/// Non-Gaussian comparison family: mu_v,i = 0.6 - 0.01 (i - 1),
/// mu_w,i = 0.8 - 0.01 (i - 1), variances 0.01, epsilon 0.2.
inline GeneralInstances make_general_instances(std::size_t arms = 10) {
  auto build = [arms](std::string name, ArmKind kind) {
    InstanceSpec spec;
    spec.name = std::move(name);
    spec.availability.epsilon = 0.2;
    for (std::size_t i = 1; i <= arms; ++i) {
      ArmModel arm;
      arm.kind = kind;
      arm.mu_v = 0.6 - 0.01 * static_cast<double>(i - 1);
      arm.mu_w = 0.8 - 0.01 * static_cast<double>(i - 1);
      if (kind == ArmKind::kMultiModal) arm.modal_shift = 0.5;
      spec.arms.push_back(arm);
      spec.omega_reported.emplace_back(1, arm.true_cv_mean());
    }
    return spec;
  };
  return {build("general_normal", ArmKind::kGaussianAdditive),
          build("general_multimodal", ArmKind::kMultiModal),
          build("general_lognormal", ArmKind::kLogNormal)};
}

/// Optional parameter overrides applied on top of a named instance.
struct InstanceOverrides {
  std::optional<double> epsilon;
  std::optional<double> cv_mean_error;
  std::optional<std::size_t> arms;
  std::optional<std::size_t> cvs;
  std::optional<std::size_t> horizon;
};

inline const std::vector<std::string>& instance_names() {
  static const std::vector<std::string> names = {
      "instance1", "instance2", "instance3", "instance4",
      "general_normal", "general_multimodal", "general_lognormal"};
  return names;
}

inline InstanceSpec make_named_instance(std::string_view name, const InstanceOverrides& o = {}) {
  const std::size_t k = o.arms.value_or(10);
  const std::size_t q = o.cvs.value_or(1);
  const bool general = name.rfind("general_", 0) == 0;
  if (general && q != 1) throw DomainError("the general instances carry exactly one control variate");
  InstanceSpec spec;
  if (name == "instance1") {
    spec = make_instance_1(k, q);
  } else if (name == "instance2") {
    spec = make_instance_2(k, q);
  } else if (name == "instance3") {
    spec = make_instance_3(o.epsilon.value_or(0.5), k, q);
  } else if (name == "instance4") {
    spec = make_instance_4(o.cv_mean_error.value_or(0.0), k, q);
  } else if (name == "general_normal") {
    spec = make_general_instances(k).normal;
  } else if (name == "general_multimodal") {
    spec = make_general_instances(k).multi_modal;
  } else if (name == "general_lognormal") {
    spec = make_general_instances(k).log_normal;
  } else {
    throw DomainError("unknown instance '" + std::string(name) + "'");
  }
  if (o.epsilon) spec.availability.epsilon = *o.epsilon;
  if (o.cv_mean_error && name != "instance4") {
    for (std::size_t i = 0; i < spec.arms.size(); ++i) {
      spec.omega_reported[i].assign(spec.arms[i].q, spec.arms[i].true_cv_mean() + *o.cv_mean_error);
    }
  }
  if (o.horizon) spec.horizon = *o.horizon;
  spec.validate();
  return spec;
}

}  // namespace lcv

#endif  // LCVBANDIT_ENVIRONMENT_HPP_
