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

#ifndef LCVBANDIT_OUTPUT_HPP_
#define LCVBANDIT_OUTPUT_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "lcvbandit/config.hpp"
#include "lcvbandit/simulator.hpp"
#include "lcvbandit/stats.hpp"

namespace lcv {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

// Policy names are written verbatim unless they need CSV quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// policy,round,mean_regret,ci_low,ci_high at 6 significant digits.
inline std::string regret_csv(const RegretSummary& summary) {
  std::string out = "policy,round,mean_regret,ci_low,ci_high\n";
  for (const PolicySummary& p : summary.policies) {
    const std::string name = csv_field(p.name);
    for (std::size_t k = 0; k < p.rounds.size(); ++k) {
      out += name + ',' + std::to_string(p.rounds[k]) + ',' + format_double(p.mean[k], 6) + ',' +
             format_double(p.ci_low[k], 6) + ',' + format_double(p.ci_high[k], 6) + '\n';
    }
  }
  return out;
}

/// policy,run,round,cum_regret at 17 significant digits; needs kept runs.
inline std::string runs_csv(const RegretSummary& summary) {
  std::string out = "policy,run,round,cum_regret\n";
  for (const PolicySummary& p : summary.policies) {
    const std::string name = csv_field(p.name);
    for (std::size_t r = 0; r < p.runs.size(); ++r) {
      const RunTrajectory& run = p.runs[r];
      for (std::size_t k = 0; k < run.rounds.size(); ++k) {
        out += name + ',' + std::to_string(r) + ',' + std::to_string(run.rounds[k]) + ',' +
               format_double(run.cumulative_pseudo_regret[k], 17) + '\n';
      }
    }
  }
  return out;
}

/// One row per policy: final-round band plus CV fraction and mean arm counts.
inline std::string final_csv(const RegretSummary& summary) {
  std::string out = "policy,runs,horizon,mean_regret,ci_low,ci_high,cv_fraction,mean_arm_counts\n";
  for (const PolicySummary& p : summary.policies) {
    std::string counts;
    for (std::size_t i = 0; i < p.mean_arm_counts.size(); ++i) {
      counts += (i ? ";" : "") + format_double(p.mean_arm_counts[i], 6);
    }
    out += csv_field(p.name) + ',' + std::to_string(summary.n_runs) + ',' + std::to_string(summary.horizon) + ',' +
           format_double(p.mean.back(), 6) + ',' + format_double(p.ci_low.back(), 6) + ',' +
           format_double(p.ci_high.back(), 6) + ',' + format_double(p.cv_fraction, 6) + ',' + counts + '\n';
  }
  return out;
}

// -- Figure data ----------------------------------------------------------------

/// Critical value with s - 1 degrees of freedom at round t, alpha = 2.
inline double no_cv_critical(double t, std::int64_t s) { return critical_value(t, 2.0, s - 1); }

/// S,ratio rows: critical value with S - 1 dof over the one with T - 1 dof,
/// both at round T, for S = 2..T.
inline std::string fig1_ratio_csv(std::int64_t horizon = 20000) {
  const double t = static_cast<double>(horizon);
  const double denom = no_cv_critical(t, horizon);
  std::string out = "S,ratio\n";
  for (std::int64_t s = 2; s <= horizon; ++s) {
    out += std::to_string(s) + ',' + format_double(no_cv_critical(t, s) / denom, 10) + '\n';
  }
  return out;
}

/// Rounds 2..20 then a geometric grid up to `max_t`.
inline std::vector<std::int64_t> log_grid(std::int64_t first, std::int64_t max_t, int per_decade = 20) {
  std::vector<std::int64_t> grid;
  for (std::int64_t t = first; t <= std::min<std::int64_t>(20, max_t); ++t) grid.push_back(t);
  const double step = std::pow(10.0, 1.0 / per_decade);
  for (double x = 20.0 * step; x < static_cast<double>(max_t); x *= step) {
    const auto t = static_cast<std::int64_t>(std::llround(x));
    if (t > grid.back()) grid.push_back(t);
  }
  if (grid.back() != max_t) grid.push_back(max_t);
  return grid;
}

/// T,squared_critical_value,bound rows with dof T - 1 - cvs (cvs = 0: the
/// no-CV case; cvs = 1: the single-CV index at S = T).
inline std::string fig2_quantile_csv(std::int64_t max_t = 20000, std::int64_t cvs = 0) {
  std::string out = "T,squared_critical_value,bound\n";
  const std::int64_t first = cvs == 0 ? 2 : cvs + 3;
  for (std::int64_t t : log_grid(first, max_t)) {
    const double v = critical_value(static_cast<double>(t), 2.0, cvs == 0 ? t - 1 : t - cvs - 2);
    out += std::to_string(t) + ',' + format_double(v * v, 10) + ',' +
           format_double(3.726 * std::log(static_cast<double>(t)), 10) + '\n';
  }
  return out;
}

/// percentile,dof,quantile over a fixed grid.
inline std::string quantile_table_csv() {
  std::string out = "percentile,dof,quantile\n";
  for (double p : {0.5, 0.75, 0.9, 0.95, 0.975, 0.99, 0.995, 0.999, 0.9999}) {
    for (std::int64_t dof : {1, 2, 3, 4, 5, 10, 20, 30, 50, 100, 1000, 100000}) {
      out += format_double(p) + ',' + std::to_string(dof) + ',' + format_double(t_quantile(p, dof), 10) + '\n';
    }
  }
  return out;
}

// -- Files and manifest ---------------------------------------------------------

struct WrittenFile {
  std::string path;  // relative to the output directory
  std::string sha256;
  std::size_t bytes = 0;
};

/// Writes `content` to out_dir / rel and returns its checksum entry.
inline WrittenFile write_file(const std::filesystem::path& out_dir, const std::string& rel, const std::string& content) {
  const std::filesystem::path full = out_dir / rel;
  std::error_code ec;
  std::filesystem::create_directories(full.parent_path(), ec);
  if (ec) throw std::runtime_error("cannot create directory " + full.parent_path().string() + ": " + ec.message());
  std::ofstream out(full, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + full.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw std::runtime_error("write failed for " + full.string());
  return {rel, sha256_hex(content), content.size()};
}

}  // namespace lcv

#endif  // LCVBANDIT_OUTPUT_HPP_
