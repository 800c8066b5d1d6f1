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

// lcvbandit: run bandit experiments from YAML configs and write CSV data.
//
//   lcvbandit run      --config exp.yaml --out results/ [--set runs=10] [--workers 4] [--seed 7]
//   lcvbandit sweep    --config sweep.yaml --out results/
//   lcvbandit figures  --out figures/ [--presets configs/] [--only fig1,fig2,fig3a]
//   lcvbandit quantile-table [--out DIR]
//   lcvbandit validate --config exp.yaml [--set key=value]

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcvbandit/config.hpp"
#include "lcvbandit/output.hpp"
#include "lcvbandit/simulator.hpp"

namespace fs = std::filesystem;
using lcv::ExperimentConfig;
using lcv::WrittenFile;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  std::string presets = "configs";
  std::string only;
};

std::size_t worker_count(const Options& o) { return o.workers ? *o.workers : lcv::default_workers(); }

ExperimentConfig load(const Options& o, const fs::path& path) {
  ExperimentConfig c = lcv::parse_config(path, o.overrides);
  if (o.seed) c.base_seed = *o.seed;
  return c;
}

class Manifest {
 public:
  Manifest(std::string command, const Options& o)
      : start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "lcvbandit";
    doc_["version"] = lcv::kToolVersion;
    doc_["command"] = std::move(command);
    doc_["workers"] = worker_count(o);
    doc_["overrides"] = o.overrides;
    doc_["files"] = nlohmann::json::array();
    doc_["experiments"] = nlohmann::json::array();
  }

  void add_experiment(const std::string& key, const ExperimentConfig& c) {
    const std::string text = lcv::serialize_config(c);
    doc_["experiments"].push_back({{"key", key},
                                   {"base_seed", c.base_seed},
                                   {"config_sha256", lcv::sha256_hex(text)},
                                   {"config", text}});
  }

  void add(const WrittenFile& f) {
    doc_["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }

  void write(const fs::path& out_dir) {
    doc_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    lcv::write_file(out_dir, "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  nlohmann::json doc_;
  std::chrono::steady_clock::time_point start_;
};

void write_batch(const fs::path& out_dir, const std::string& prefix, const ExperimentConfig& c,
                 const lcv::RegretSummary& s, Manifest& manifest) {
  manifest.add(lcv::write_file(out_dir, prefix + "regret.csv", lcv::regret_csv(s)));
  manifest.add(lcv::write_file(out_dir, prefix + "final.csv", lcv::final_csv(s)));
  if (c.write_runs) manifest.add(lcv::write_file(out_dir, prefix + "runs.csv", lcv::runs_csv(s)));
  manifest.add(lcv::write_file(out_dir, prefix + "config.yaml", lcv::serialize_config(c)));
}

void run_experiment(const fs::path& out_dir, const std::string& prefix, const ExperimentConfig& c,
                    const Options& o, Manifest& manifest) {
  const lcv::BatchOptions batch{worker_count(o), c.write_runs};
  manifest.add_experiment(prefix.empty() ? "." : prefix, c);
  write_batch(out_dir, prefix, c, lcv::run_batch(c, batch), manifest);
}

void run_sweep(const fs::path& out_dir, const std::string& prefix, const ExperimentConfig& c, const Options& o,
               Manifest& manifest) {
  if (!c.sweep) throw lcv::ConfigError("sweep", 0, "the configuration has no sweep section");
  const lcv::BatchOptions batch{worker_count(o), c.write_runs};
  for (double v : c.sweep->values) {
    const ExperimentConfig point = lcv::sweep_point(c, c.sweep->parameter, v);
    const std::string sub =
        prefix + std::string(lcv::to_string(c.sweep->parameter)) + "=" + lcv::format_double(v) + "/";
    manifest.add_experiment(sub, point);
    write_batch(out_dir, sub, point, lcv::run_batch(point, batch), manifest);
    std::cerr << "  " << sub << " done\n";
  }
}

int cmd_run(const Options& o, bool sweep) {
  const ExperimentConfig c = load(o, o.config_path);
  Manifest manifest(sweep ? "sweep" : "run", o);
  const fs::path out(o.out_dir);
  if (sweep) {
    run_sweep(out, "", c, o, manifest);
  } else {
    run_experiment(out, "", c, o, manifest);
  }
  manifest.write(out);
  return 0;
}

bool wanted(const Options& o, const std::string& name) {
  if (o.only.empty()) return true;
  std::stringstream ss(o.only);
  for (std::string item; std::getline(ss, item, ',');) {
    if (item == name || (item == "fig3" && name.rfind("fig3", 0) == 0) ||
        (item == "fig4" && name.rfind("fig4", 0) == 0)) {
      return true;
    }
  }
  return false;
}

int cmd_figures(const Options& o) {
  const fs::path out(o.out_dir);
  Manifest manifest("figures", o);
  if (wanted(o, "fig1")) manifest.add(lcv::write_file(out, "fig1_ratio.csv", lcv::fig1_ratio_csv(20000)));
  if (wanted(o, "fig2")) {
    manifest.add(lcv::write_file(out, "fig2_quantile.csv", lcv::fig2_quantile_csv(20000, 0)));
    manifest.add(lcv::write_file(out, "fig2_quantile_single_cv.csv", lcv::fig2_quantile_csv(20000, 1)));
  }
  std::vector<fs::path> presets;
  if (fs::is_directory(o.presets)) {
    for (const auto& entry : fs::directory_iterator(o.presets)) {
      const std::string stem = entry.path().stem().string();
      if (entry.path().extension() == ".yaml" && (stem.rfind("fig3", 0) == 0 || stem.rfind("fig4", 0) == 0) &&
          wanted(o, stem)) {
        presets.push_back(entry.path());
      }
    }
  } else if (wanted(o, "fig3") || wanted(o, "fig4")) {
    std::cerr << "warning: preset directory '" << o.presets << "' not found; skipping fig3/fig4\n";
  }
  std::sort(presets.begin(), presets.end());
  for (const fs::path& p : presets) {
    const ExperimentConfig c = load(o, p);
    const std::string prefix = p.stem().string() + "/";
    std::cerr << p.stem().string() << "...\n";
    if (c.sweep) {
      run_sweep(out, prefix, c, o, manifest);
    } else {
      run_experiment(out, prefix, c, o, manifest);
    }
  }
  manifest.write(out);
  return 0;
}

int cmd_quantile_table(const Options& o) {
  const std::string table = lcv::quantile_table_csv();
  std::cout << table;
  if (!o.out_dir.empty()) {
    Manifest manifest("quantile-table", o);
    manifest.add(lcv::write_file(o.out_dir, "quantile_table.csv", table));
    manifest.write(o.out_dir);
  }
  return 0;
}

int cmd_validate(const Options& o) {
  const ExperimentConfig c = load(o, o.config_path);
  std::cout << lcv::serialize_config(c);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic bandits with limited control variates: experiment runner"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub, bool needs_config, bool needs_out) {
    auto* cfg = sub->add_option("--config", o.config_path, "experiment configuration (YAML)");
    if (needs_config) cfg->required()->check(CLI::ExistingFile);
    auto* out = sub->add_option("--out", o.out_dir, "output directory");
    if (needs_out) out->required();
    sub->add_option("--set", o.overrides, "override KEY=VALUE (repeatable)")->allow_extra_args(false);
    sub->add_option("--workers", o.workers, "worker threads (default: LCVBANDIT_WORKERS or all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "base seed (overrides the config)");
  };

  CLI::App* run = app.add_subcommand("run", "run every configured policy and write regret curves");
  add_common(run, true, true);
  CLI::App* sweep = app.add_subcommand("sweep", "run the configured parameter sweep");
  add_common(sweep, true, true);
  CLI::App* figures = app.add_subcommand("figures", "write figure datasets (quantile curves and presets)");
  add_common(figures, false, true);
  figures->add_option("--presets", o.presets, "directory with fig3*/fig4* preset configs");
  figures->add_option("--only", o.only, "comma-separated subset, e.g. fig1,fig2,fig3a,fig4");
  CLI::App* table = app.add_subcommand("quantile-table", "print Student-t quantiles over a grid");
  add_common(table, false, false);
  CLI::App* validate = app.add_subcommand("validate", "parse a config and print the resolved form");
  add_common(validate, true, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(o, false);
    if (sweep->parsed()) return cmd_run(o, true);
    if (figures->parsed()) return cmd_figures(o);
    if (table->parsed()) return cmd_quantile_table(o);
    if (validate->parsed()) return cmd_validate(o);
  } catch (const lcv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
