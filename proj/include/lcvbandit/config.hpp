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

#ifndef LCVBANDIT_CONFIG_HPP_
#define LCVBANDIT_CONFIG_HPP_

// Experiment configuration files (YAML):
//
//   name: fig3a                  # optional label
//   instance:
//     name: instance1            # instance1..4, general_normal, general_multimodal, general_lognormal
//     epsilon: 0.5               # CV availability; default per instance
//     cv_mean_error: 0.0         # shift of the reported CV means
//     arms: 10
//   q: 1
//   horizon: 10000
//   runs: 100
//   seed: 1
//   record_stride: 1
//   write_runs: false            # also write runs.csv
//   policies:
//     - kind: ucb_lcv            # ucb_lcv, ucb_normal, ucb1, ucb1_normal, kl_ucb, ucb_v, thompson
//       name: UCB-LCV            # optional, unique
//       alpha: 2
//       estimator: gaussian      # gaussian, jackknife, splitting, batching
//       batch_count: 5
//       routing: always          # always, gated
//       ucb_v_range: 0.5         # ucb_v only
//   sweep:                       # used by the sweep command
//     parameter: epsilon         # epsilon (instance3) or cv_mean_error (instance4)
//     values: [0.0, 0.5, 1.0]

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "lcvbandit/errors.hpp"
#include "lcvbandit/simulator.hpp"

namespace lcv {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// `v` with `digits` significant digits, %g style.
inline std::string format_double(double v, int digits) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
  return std::string(buf, res.ptr);
}

namespace detail {

inline int line_of(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : 0;
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const YAML::Node& node, const std::string& msg) const {
    throw ConfigError(key, node ? line_of(node) : 0, source_.empty() ? msg : msg + " (" + source_ + ")");
  }

  void expect_map(const std::string& key, const YAML::Node& node) const {
    if (!node.IsMap()) fail(key, node, "expected a mapping");
  }

  void check_keys(const std::string& prefix, const YAML::Node& map,
                  std::initializer_list<std::string_view> allowed) const {
    std::set<std::string> seen;
    for (const auto& kv : map) {
      const std::string k = kv.first.Scalar();
      const std::string path = prefix.empty() ? k : prefix + "." + k;
      bool known = false;
      for (std::string_view a : allowed) known = known || a == k;
      if (!known) fail(path, kv.first, "unknown key");
      if (!seen.insert(k).second) fail(path, kv.first, "duplicate key");
    }
  }

  std::string scalar(const std::string& key, const YAML::Node& node) const {
    if (!node.IsScalar()) fail(key, node, "expected a scalar value");
    return node.Scalar();
  }

  double real(const std::string& key, const YAML::Node& node) const {
    const std::string s = scalar(key, node);
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(key, node, "expected a number, got '" + s + "'");
    }
  }

  std::uint64_t unsigned_int(const std::string& key, const YAML::Node& node) const {
    const std::string s = scalar(key, node);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(key, node, "expected a non-negative integer, got '" + s + "'");
    }
    return v;
  }

  std::size_t count(const std::string& key, const YAML::Node& node, std::size_t min) const {
    const std::uint64_t v = unsigned_int(key, node);
    if (v < min) fail(key, node, "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& key, const YAML::Node& node) const {
    const std::string s = scalar(key, node);
    if (s == "true") return true;
    if (s == "false") return false;
    fail(key, node, "expected true or false, got '" + s + "'");
  }

 private:
  std::string source_;
};

inline PolicyConfig parse_policy(const ConfigReader& r, const std::string& key, const YAML::Node& node,
                                 std::size_t q) {
  r.expect_map(key, node);
  r.check_keys(key, node, {"kind", "name", "alpha", "estimator", "batch_count", "routing", "ucb_v_range"});
  PolicyConfig pc;
  pc.q = q;
  if (!node["kind"]) r.fail(key + ".kind", node, "missing required key");
  const std::string kind = r.scalar(key + ".kind", node["kind"]);
  const auto k = parse_policy_kind(kind);
  if (!k) r.fail(key + ".kind", node["kind"], "unknown policy kind '" + kind + "'");
  pc.kind = *k;
  if (node["name"]) pc.name = r.scalar(key + ".name", node["name"]);
  if (pc.name.empty()) pc.name = std::string(to_string(pc.kind));
  if (node["alpha"]) {
    pc.alpha = r.real(key + ".alpha", node["alpha"]);
    if (!(pc.alpha > 1.0)) r.fail(key + ".alpha", node["alpha"], "alpha must be > 1");
  }
  if (node["estimator"]) {
    const std::string v = r.scalar(key + ".estimator", node["estimator"]);
    const auto e = parse_estimator_variant(v);
    if (!e) r.fail(key + ".estimator", node["estimator"], "unknown estimator '" + v + "'");
    pc.estimator_variant = *e;
  }
  if (node["batch_count"]) pc.batch_count = r.count(key + ".batch_count", node["batch_count"], 2);
  if (node["routing"]) {
    const std::string v = r.scalar(key + ".routing", node["routing"]);
    const auto rt = parse_routing(v);
    if (!rt) r.fail(key + ".routing", node["routing"], "unknown routing '" + v + "'");
    pc.routing = *rt;
  }
  if (node["ucb_v_range"]) {
    pc.ucb_v_range = r.real(key + ".ucb_v_range", node["ucb_v_range"]);
    if (!(*pc.ucb_v_range > 0.0)) r.fail(key + ".ucb_v_range", node["ucb_v_range"], "must be > 0");
  }
  return pc;
}

inline ExperimentConfig parse_config_node(const YAML::Node& root, const std::string& source) {
  const ConfigReader r(source);
  if (!root || root.IsNull()) throw ConfigError("", 0, "empty configuration");
  r.expect_map("", root);
  r.check_keys("", root, {"name", "instance", "q", "horizon", "runs", "seed", "record_stride", "write_runs",
                          "policies", "sweep"});
  ExperimentConfig c;
  if (root["name"]) c.label = r.scalar("name", root["name"]);
  if (root["q"]) c.q = r.count("q", root["q"], 1);
  if (root["horizon"]) c.horizon = r.count("horizon", root["horizon"], 1);
  if (root["runs"]) c.n_runs = r.count("runs", root["runs"], 2);
  if (root["seed"]) c.base_seed = r.unsigned_int("seed", root["seed"]);
  if (root["record_stride"]) c.record_stride = r.count("record_stride", root["record_stride"], 1);
  if (root["write_runs"]) c.write_runs = r.boolean("write_runs", root["write_runs"]);

  const YAML::Node inst = root["instance"];
  if (!inst) throw ConfigError("instance", 0, "missing required key");
  r.expect_map("instance", inst);
  r.check_keys("instance", inst, {"name", "epsilon", "cv_mean_error", "arms"});
  if (!inst["name"]) r.fail("instance.name", inst, "missing required key");
  c.instance_name = r.scalar("instance.name", inst["name"]);
  bool known = false;
  for (const std::string& n : instance_names()) known = known || n == c.instance_name;
  if (!known) r.fail("instance.name", inst["name"], "unknown instance '" + c.instance_name + "'");
  if (inst["epsilon"]) {
    const double eps = r.real("instance.epsilon", inst["epsilon"]);
    if (!(eps >= 0.0 && eps <= 1.0)) r.fail("instance.epsilon", inst["epsilon"], "must lie in [0, 1]");
    c.overrides.epsilon = eps;
  }
  if (inst["cv_mean_error"]) {
    const double err = r.real("instance.cv_mean_error", inst["cv_mean_error"]);
    if (!std::isfinite(err)) r.fail("instance.cv_mean_error", inst["cv_mean_error"], "must be finite");
    c.overrides.cv_mean_error = err;
  }
  if (inst["arms"]) c.overrides.arms = r.count("instance.arms", inst["arms"], 2);

  const YAML::Node pols = root["policies"];
  if (!pols) throw ConfigError("policies", 0, "missing required key");
  if (!pols.IsSequence() || pols.size() == 0) r.fail("policies", pols, "expected a non-empty list");
  for (std::size_t i = 0; i < pols.size(); ++i) {
    const std::string key = "policies[" + std::to_string(i) + "]";
    c.policies.push_back(parse_policy(r, key, pols[i], c.q));
    for (std::size_t j = 0; j < i; ++j) {
      if (c.policies[j].label() == c.policies[i].label()) {
        r.fail(key + ".name", pols[i], "duplicate policy name '" + c.policies[i].label() + "'");
      }
    }
  }

  if (const YAML::Node sw = root["sweep"]) {
    r.expect_map("sweep", sw);
    r.check_keys("sweep", sw, {"parameter", "values"});
    if (!sw["parameter"] || !sw["values"]) r.fail("sweep", sw, "needs both parameter and values");
    SweepSpec spec;
    const std::string p = r.scalar("sweep.parameter", sw["parameter"]);
    if (p == "epsilon") {
      spec.parameter = SweepParameter::kEpsilon;
    } else if (p == "cv_mean_error") {
      spec.parameter = SweepParameter::kCvMeanError;
    } else {
      r.fail("sweep.parameter", sw["parameter"], "unknown sweep parameter '" + p + "'");
    }
    const std::string family = spec.parameter == SweepParameter::kEpsilon ? "instance3" : "instance4";
    if (c.instance_name != family) {
      r.fail("sweep.parameter", sw["parameter"], p + " sweeps need " + family + ", not " + c.instance_name);
    }
    const YAML::Node vals = sw["values"];
    if (!vals.IsSequence() || vals.size() == 0) r.fail("sweep.values", vals, "expected a non-empty list");
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const std::string key = "sweep.values[" + std::to_string(i) + "]";
      const double v = r.real(key, vals[i]);
      if (spec.parameter == SweepParameter::kEpsilon && !(v >= 0.0 && v <= 1.0)) {
        r.fail(key, vals[i], "epsilon must lie in [0, 1]");
      }
      spec.values.push_back(v);
    }
    c.sweep = spec;
  }

  // Resolve instance defaults so the snapshot is explicit.
  InstanceSpec spec;
  try {
    spec = c.instance();
  } catch (const DomainError& e) {
    throw ConfigError("instance", line_of(inst), e.what());
  }
  c.overrides.epsilon = spec.availability.epsilon;
  c.overrides.arms = spec.num_arms();
  if (!c.overrides.cv_mean_error) c.overrides.cv_mean_error = 0.0;
  c.overrides.cvs.reset();
  c.overrides.horizon.reset();

  try {
    c.validate();
  } catch (const ConfigError& e) {
    // Point at the offending entry when the key names one.
    const std::string& key = e.key_path();
    YAML::Node at = root;
    if (key.rfind("policies[", 0) == 0) {
      at = pols[std::stoul(key.substr(9))];
    } else if (!key.empty() && root[key.substr(0, key.find('.'))]) {
      at = root[key.substr(0, key.find('.'))];
    }
    const std::string msg = e.what();
    const std::string prefix = key + ": ";
    throw ConfigError(key, line_of(at), msg.rfind(prefix, 0) == 0 ? msg.substr(prefix.size()) : msg);
  }
  return c;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

// Splits "policies[1].alpha" or "policies.1.alpha" into segments.
inline std::vector<std::string> split_key(const std::string& key) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : key) {
    if (ch == '.' || ch == '[' || ch == ']') {
      if (!cur.empty()) parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return parts;
}

}  // namespace detail

/// Canonical YAML text of a resolved configuration; parses back to an equal
/// configuration.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  if (!c.label.empty()) out << "name: " << detail::quote(c.label) << "\n";
  out << "instance:\n";
  out << "  name: " << c.instance_name << "\n";
  if (c.overrides.epsilon) out << "  epsilon: " << format_double(*c.overrides.epsilon) << "\n";
  if (c.overrides.cv_mean_error) out << "  cv_mean_error: " << format_double(*c.overrides.cv_mean_error) << "\n";
  if (c.overrides.arms) out << "  arms: " << *c.overrides.arms << "\n";
  out << "q: " << c.q << "\n";
  out << "horizon: " << c.horizon << "\n";
  out << "runs: " << c.n_runs << "\n";
  out << "seed: " << c.base_seed << "\n";
  out << "record_stride: " << c.record_stride << "\n";
  out << "write_runs: " << (c.write_runs ? "true" : "false") << "\n";
  out << "policies:\n";
  for (const PolicyConfig& p : c.policies) {
    out << "  - kind: " << to_string(p.kind) << "\n";
    out << "    name: " << detail::quote(p.label()) << "\n";
    out << "    alpha: " << format_double(p.alpha) << "\n";
    out << "    estimator: " << to_string(p.estimator_variant) << "\n";
    out << "    batch_count: " << p.batch_count << "\n";
    out << "    routing: " << to_string(p.routing) << "\n";
    if (p.ucb_v_range) out << "    ucb_v_range: " << format_double(*p.ucb_v_range) << "\n";
  }
  if (c.sweep) {
    out << "sweep:\n";
    out << "  parameter: " << to_string(c.sweep->parameter) << "\n";
    out << "  values: [";
    for (std::size_t i = 0; i < c.sweep->values.size(); ++i) {
      out << (i ? ", " : "") << format_double(c.sweep->values[i]);
    }
    out << "]\n";
  }
  return out.str();
}

/// Applies KEY=VALUE overrides to a resolved configuration. Keys use the
/// file's names ("instance.epsilon", "policies[0].alpha", "policies.0.alpha")
/// and must already exist in the resolved configuration.
inline ExperimentConfig apply_overrides(const ExperimentConfig& config, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return config;
  YAML::Node root = YAML::Load(serialize_config(config));
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("--set " + ov, 0, "expected KEY=VALUE");
    }
    const std::string key = ov.substr(0, eq);
    const std::string value = ov.substr(eq + 1);
    const std::vector<std::string> parts = detail::split_key(key);
    // Walk with explicit node copies: YAML::Node assignment rebinds.
    std::vector<YAML::Node> chain{root};
    for (const std::string& part : parts) {
      YAML::Node cur = chain.back();
      YAML::Node next;
      if (cur.IsSequence()) {
        std::size_t idx = 0;
        const auto res = std::from_chars(part.data(), part.data() + part.size(), idx);
        if (res.ec != std::errc() || res.ptr != part.data() + part.size() || idx >= cur.size()) {
          throw ConfigError("--set " + key, 0, "no such key in the resolved configuration");
        }
        next = cur[idx];
      } else if (cur.IsMap() && cur[part]) {
        next = cur[part];
      } else {
        throw ConfigError("--set " + key, 0, "no such key in the resolved configuration");
      }
      chain.push_back(next);
    }
    YAML::Node parsed;
    try {
      parsed = YAML::Load(value);
    } catch (const YAML::Exception& e) {
      throw ConfigError("--set " + key, 0, std::string("malformed value: ") + e.what());
    }
    if (parts.empty()) throw ConfigError("--set " + key, 0, "empty key");
    YAML::Node parent = chain[chain.size() - 2];
    if (parent.IsSequence()) {
      parent[std::stoul(parts.back())] = parsed;
    } else {
      parent[parts.back()] = parsed;
    }
  }
  // Re-emit so marks (line numbers) refer to a concrete document.
  YAML::Emitter em;
  em << root;
  try {
    return detail::parse_config_node(YAML::Load(em.c_str()), "after --set overrides");
  } catch (const YAML::Exception& e) {
    throw ConfigError("--set", 0, e.what());
  }
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {},
                                          const std::string& source = "") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, std::string("malformed YAML: ") + e.msg);
  }
  return apply_overrides(detail::parse_config_node(root, source), overrides);
}

inline ExperimentConfig parse_config(const std::filesystem::path& path,
                                     const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides, "");
}

}  // namespace lcv

#endif  // LCVBANDIT_CONFIG_HPP_
