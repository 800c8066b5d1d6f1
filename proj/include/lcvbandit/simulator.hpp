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

#ifndef LCVBANDIT_SIMULATOR_HPP_
#define LCVBANDIT_SIMULATOR_HPP_

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "lcvbandit/environment.hpp"
#include "lcvbandit/errors.hpp"
#include "lcvbandit/policies.hpp"
#include "lcvbandit/rng.hpp"
#include "lcvbandit/stats.hpp"

namespace lcv {

enum class SweepParameter { kEpsilon, kCvMeanError };

inline std::string_view to_string(SweepParameter p) {
  return p == SweepParameter::kEpsilon ? "epsilon" : "cv_mean_error";
}

struct SweepSpec {
  SweepParameter parameter = SweepParameter::kEpsilon;
  std::vector<double> values;
  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentConfig {
  std::string label;
  std::string instance_name = "instance1";
  InstanceOverrides overrides;
  std::size_t q = 1;
  std::vector<PolicyConfig> policies;
  std::size_t horizon = 10000;
  std::size_t n_runs = 100;
  std::uint64_t base_seed = 1;
  std::size_t record_stride = 1;
  bool write_runs = false;
  std::optional<SweepSpec> sweep;

  InstanceSpec instance() const {
    InstanceOverrides o = overrides;
    o.cvs = q;
    o.horizon = horizon;
    return make_named_instance(instance_name, o);
  }

  /// Checks every invariant a run relies on; throws ConfigError.
  void validate() const {
    if (horizon == 0) throw ConfigError("horizon", 0, "must be positive");
    if (n_runs < 2) throw ConfigError("runs", 0, "need at least 2 runs for a confidence band");
    if (record_stride == 0) throw ConfigError("record_stride", 0, "must be positive");
    if (policies.empty()) throw ConfigError("policies", 0, "at least one policy is required");
    InstanceSpec spec;
    try {
      spec = instance();
    } catch (const DomainError& e) {
      throw ConfigError("instance", 0, e.what());
    }
    for (std::size_t p = 0; p < policies.size(); ++p) {
      const PolicyConfig& pc = policies[p];
      const std::string key = "policies[" + std::to_string(p) + "]";
      try {
        pc.validate();
      } catch (const DomainError& e) {
        throw ConfigError(key, 0, e.what());
      }
      if (pc.q != q) throw ConfigError(key + ".q", 0, "must equal the experiment q");
      const std::size_t warm = pc.warm_start_plays() * spec.num_arms();
      if (horizon < warm) {
        throw ConfigError("horizon", 0,
                          "horizon " + std::to_string(horizon) + " is shorter than the warm start of " +
                              pc.label() + " (" + std::to_string(warm) + " rounds)");
      }
      for (std::size_t o = 0; o < p; ++o) {
        if (policies[o].label() == pc.label()) {
          throw ConfigError(key + ".name", 0, "duplicate policy name '" + pc.label() + "'");
        }
      }
    }
  }

  bool operator==(const ExperimentConfig& o) const {
    auto ov = [](const InstanceOverrides& x) {
      return std::make_tuple(x.epsilon, x.cv_mean_error, x.arms, x.cvs, x.horizon);
    };
    return label == o.label && instance_name == o.instance_name && ov(overrides) == ov(o.overrides) &&
           q == o.q && policies == o.policies && horizon == o.horizon && n_runs == o.n_runs &&
           base_seed == o.base_seed && record_stride == o.record_stride && write_runs == o.write_runs &&
           sweep == o.sweep;
  }
};

struct RunTrajectory {
  std::vector<std::size_t> rounds;                 // recorded round indices (1-based)
  std::vector<double> cumulative_pseudo_regret;  // at each recorded round
  std::vector<std::size_t> arm_counts;
  std::size_t cv_observed_count = 0;
  std::vector<std::uint32_t> arm_sequence;  // filled when requested

  double final_regret() const { return cumulative_pseudo_regret.back(); }
};

/// sum_i counts[i] * gaps[i], summed in arm order.
inline double pseudo_regret(const std::vector<std::size_t>& counts, const std::vector<double>& gaps) {
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) total += static_cast<double>(counts[i]) * gaps[i];
  return total;
}

struct RunOptions {
  std::size_t record_stride = 1;
  bool record_arm_sequence = false;
};

/// Plays `horizon` rounds of select -> pull -> update with `policy`.
inline RunTrajectory run_policy(const InstanceSpec& instance, BanditPolicy& policy, std::size_t horizon,
                                RngStream env_rng, const RunOptions& options = {}) {
  if (options.record_stride == 0) throw DomainError("record_stride must be positive");
  const std::vector<double> gaps = instance.gaps();
  RunTrajectory run;
  run.arm_counts.assign(instance.num_arms(), 0);
  const std::size_t recorded = horizon / options.record_stride + 1;
  run.rounds.reserve(recorded);
  run.cumulative_pseudo_regret.reserve(recorded);
  if (options.record_arm_sequence) run.arm_sequence.reserve(horizon);
  for (std::size_t t = 1; t <= horizon; ++t) {
    const std::size_t arm = policy.select_arm();
    const Observation obs = pull(instance, arm, env_rng);
    if (obs.cv) ++run.cv_observed_count;
    policy.update(arm, obs);
    ++run.arm_counts[arm];
    if (options.record_arm_sequence) run.arm_sequence.push_back(static_cast<std::uint32_t>(arm));
    if (t % options.record_stride == 0 || t == horizon) {
      run.rounds.push_back(t);
      run.cumulative_pseudo_regret.push_back(pseudo_regret(run.arm_counts, gaps));
    }
  }
  return run;
}

inline RunTrajectory run_with_streams(const InstanceSpec& instance, const PolicyConfig& policy_config,
                                      std::size_t horizon, RngStream env_rng, RngStream policy_rng,
                                      const RunOptions& options = {}) {
  auto policy = make_policy(policy_config, instance, policy_rng);
  return run_policy(instance, *policy, horizon, env_rng, options);
}

enum class StreamRole : std::uint64_t { kEnvironment = 0, kPolicy = 1 };

/// Stream for (base_seed, run, policy, role): the seed hashes the first
/// three, the role selects the stream id.
inline RngStream derive_stream(std::uint64_t base_seed, std::size_t run_index, std::size_t policy_index,
                               StreamRole role) {
  return RngStream(derive_seed({base_seed, static_cast<std::uint64_t>(run_index),
                                static_cast<std::uint64_t>(policy_index)}),
                   static_cast<std::uint64_t>(role));
}

inline RunTrajectory run_single(const ExperimentConfig& config, std::size_t policy_index, std::size_t run_index,
                                bool record_arm_sequence = false) {
  config.validate();
  const InstanceSpec instance = config.instance();
  return run_with_streams(instance, config.policies.at(policy_index), config.horizon,
                          derive_stream(config.base_seed, run_index, policy_index, StreamRole::kEnvironment),
                          derive_stream(config.base_seed, run_index, policy_index, StreamRole::kPolicy),
                          {config.record_stride, record_arm_sequence});
}

struct PolicySummary {
  std::string name;
  std::vector<std::size_t> rounds;
  std::vector<double> mean;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<double> final_regret;      // per run
  std::vector<double> mean_arm_counts;   // per arm, averaged over runs
  double cv_fraction = 0.0;              // CV-carrying observations / total, all runs
  std::vector<RunTrajectory> runs;       // kept when requested
};

struct RegretSummary {
  std::vector<PolicySummary> policies;
  std::uint64_t base_seed = 0;
  std::size_t n_runs = 0;
  std::size_t horizon = 0;

  const PolicySummary& policy(std::string_view name) const {
    for (const PolicySummary& p : policies) {
      if (p.name == name) return p;
    }
    throw DomainError("no policy named '" + std::string(name) + "' in summary");
  }
};

/// Worker count from LCVBANDIT_WORKERS, else the hardware concurrency.
inline std::size_t default_workers() {
  if (const char* env = std::getenv("LCVBANDIT_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
/// exception is rethrown after all threads join.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct BatchOptions {
  std::size_t workers = 1;
  bool keep_runs = false;
};

/// n_runs independent runs per policy, banded at 95% at every recorded round.
/// Results are collected by (policy, run) slot so the output never depends
/// on scheduling.
inline RegretSummary run_batch(const ExperimentConfig& config, const BatchOptions& options = {}) {
  config.validate();
  const InstanceSpec instance = config.instance();
  const std::size_t n_pol = config.policies.size();
  const std::size_t n_runs = config.n_runs;
  std::vector<RunTrajectory> results(n_pol * n_runs);
  parallel_for(results.size(), options.workers, [&](std::size_t slot) {
    const std::size_t p = slot / n_runs;
    const std::size_t r = slot % n_runs;
    try {
      results[slot] = run_with_streams(instance, config.policies[p], config.horizon,
                                       derive_stream(config.base_seed, r, p, StreamRole::kEnvironment),
                                       derive_stream(config.base_seed, r, p, StreamRole::kPolicy),
                                       {config.record_stride, false});
    } catch (const std::exception& e) {
      throw std::runtime_error("policy '" + config.policies[p].label() + "' run " + std::to_string(r) +
                               ": " + e.what());
    }
  });

  RegretSummary summary;
  summary.base_seed = config.base_seed;
  summary.n_runs = n_runs;
  summary.horizon = config.horizon;
  std::vector<double> column(n_runs);
  for (std::size_t p = 0; p < n_pol; ++p) {
    PolicySummary ps;
    ps.name = config.policies[p].label();
    const RunTrajectory& first = results[p * n_runs];
    ps.rounds = first.rounds;
    const std::size_t points = first.rounds.size();
    ps.mean.resize(points);
    ps.ci_low.resize(points);
    ps.ci_high.resize(points);
    for (std::size_t k = 0; k < points; ++k) {
      for (std::size_t r = 0; r < n_runs; ++r) column[r] = results[p * n_runs + r].cumulative_pseudo_regret[k];
      const ConfidenceBand band = confidence_band(column);
      ps.mean[k] = band.mean;
      ps.ci_low[k] = band.low;
      ps.ci_high[k] = band.high;
    }
    ps.mean_arm_counts.assign(instance.num_arms(), 0.0);
    std::size_t cv_total = 0;
    for (std::size_t r = 0; r < n_runs; ++r) {
      const RunTrajectory& run = results[p * n_runs + r];
      ps.final_regret.push_back(run.final_regret());
      for (std::size_t i = 0; i < run.arm_counts.size(); ++i) {
        ps.mean_arm_counts[i] += static_cast<double>(run.arm_counts[i]) / static_cast<double>(n_runs);
      }
      cv_total += run.cv_observed_count;
    }
    ps.cv_fraction = static_cast<double>(cv_total) / static_cast<double>(n_runs * config.horizon);
    if (options.keep_runs) {
      ps.runs.assign(std::make_move_iterator(results.begin() + static_cast<std::ptrdiff_t>(p * n_runs)),
                     std::make_move_iterator(results.begin() + static_cast<std::ptrdiff_t>((p + 1) * n_runs)));
    }
    summary.policies.push_back(std::move(ps));
  }
  return summary;
}

/// Seed for one sweep point, derived from the base seed and the value's bits.
inline std::uint64_t sweep_seed(std::uint64_t base_seed, SweepParameter parameter, double value) {
  return derive_seed({base_seed, static_cast<std::uint64_t>(parameter) + 1, std::bit_cast<std::uint64_t>(value)});
}

/// Config for one sweep point, or ConfigError when the parameter does not
/// belong to the configured instance.
inline ExperimentConfig sweep_point(const ExperimentConfig& config, SweepParameter parameter, double value) {
  ExperimentConfig point = config;
  point.sweep.reset();
  if (parameter == SweepParameter::kEpsilon) {
    if (config.instance_name != "instance3") {
      throw ConfigError("sweep.parameter", 0, "epsilon sweeps need instance3, not " + config.instance_name);
    }
    point.overrides.epsilon = value;
  } else {
    if (config.instance_name != "instance4") {
      throw ConfigError("sweep.parameter", 0, "cv_mean_error sweeps need instance4, not " + config.instance_name);
    }
    point.overrides.cv_mean_error = value;
  }
  point.base_seed = sweep_seed(config.base_seed, parameter, value);
  return point;
}

struct SweepResult {
  double value;
  ExperimentConfig config;
  RegretSummary summary;
};

inline std::vector<SweepResult> sweep(const ExperimentConfig& config, SweepParameter parameter,
                                      const std::vector<double>& values, const BatchOptions& options = {}) {
  if (values.empty()) throw ConfigError("sweep.values", 0, "no values to sweep");
  std::vector<SweepResult> out;
  for (double v : values) {
    ExperimentConfig point = sweep_point(config, parameter, v);
    RegretSummary summary = run_batch(point, options);
    out.push_back({v, std::move(point), std::move(summary)});
  }
  return out;
}

}  // namespace lcv

#endif  // LCVBANDIT_SIMULATOR_HPP_
