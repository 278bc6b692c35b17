// Copyright 2026 The HAT Authors
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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is zero
// when every failing criterion is listed with --known-red and every listed
// criterion still fails.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hat/cli.hpp"
#include "hat/config.hpp"
#include "hat/evaluate.hpp"
#include "hat/selftest.hpp"
#include "hat/serialize.hpp"

namespace fs = std::filesystem;
using hat::CheckResult;

namespace {

constexpr std::size_t kTrainingSeeds = 5;
constexpr std::size_t kImmSeeds = 50;

struct Criterion {
  std::string name;
  double runtime_limit_s = 0.0;  // 0: no limit of its own
  std::function<CheckResult()> run;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

CheckResult imm_sanity() {
  std::vector<double> ratios, delays;
  for (std::uint64_t seed = 0; seed < kImmSeeds; ++seed) {
    const hat::SwitchingTrial t = hat::run_switching_trial(hat::SwitchingConfig{}, seed);
    ratios.push_back(t.imm_rmse / std::min(t.cv_rmse, t.ctrv_rmse));
    delays.push_back(static_cast<double>(
        *std::max_element(t.switch_delay.begin(), t.switch_delay.end())));
  }
  const double ratio = median(ratios);
  const double delay = median(delays);
  CheckResult r;
  r.name = "imm_sanity";
  r.measured = ratio;
  r.tolerance = 1.05;
  r.passed = ratio <= 1.05 && delay <= 10.0;
  r.detail = "median RMSE ratio " + fmt(ratio) + " (<= 1.05), median worst switch delay " +
             fmt(delay) + " frames (<= 10), " + std::to_string(kImmSeeds) + " seeds";
  return r;
}

// Trains and evaluates with the default configuration once per seed and
// keeps the reports for the criteria that share the run.
class BenchmarkRun {
 public:
  explicit BenchmarkRun(fs::path root) : root_(std::move(root)) {}

  void ensure() {
    if (!reports_.empty()) return;
    for (std::size_t s = 0; s < kTrainingSeeds; ++s) {
      hat::ExperimentConfig config = hat::ExperimentConfig::defaults();
      config.training.seed = s;
      const hat::cli::RunContext ctx =
          hat::cli::make_context(config, (root_ / ("seed" + std::to_string(s))).string());
      hat::cli::cmd_gen(ctx);
      hat::cli::cmd_train(ctx);
      reports_.push_back(hat::cli::cmd_eval(ctx));
      dirs_.push_back(ctx.out_dir);
      std::cerr << "[acceptance] seed " << s << " hat "
                << fmt(reports_.back().find("hat", hat::kAllRegimes).mean_translation) << "\n";
    }
  }

  double mean_error(const std::string& method) {
    ensure();
    double sum = 0.0;
    for (const auto& r : reports_) sum += r.find(method, hat::kAllRegimes).mean_translation;
    return sum / static_cast<double>(reports_.size());
  }

  std::vector<std::string> methods() {
    ensure();
    return reports_.front().methods();
  }

  std::vector<double> contrasts() {
    ensure();
    std::vector<double> out;
    for (const auto& r : reports_) out.push_back(r.weights.value().turning_contrast());
    return out;
  }

  const std::string& first_dir() {
    ensure();
    return dirs_.front();
  }

 private:
  fs::path root_;
  std::vector<hat::EvalReport> reports_;
  std::vector<std::string> dirs_;
};

CheckResult multi_hypothesis_benefit(BenchmarkRun& bench) {
  const double hat_error = bench.mean_error("hat");
  std::ostringstream detail;
  detail << "5-seed mean translation error: hat " << fmt(hat_error);
  bool passed = true;
  double closest = -1e300;
  for (const std::string& m : bench.methods()) {
    if (m == "hat" || m == "imm") continue;
    const double e = bench.mean_error(m);
    detail << ", " << m << " " << fmt(e);
    const bool ok = m == "hat_m1" ? hat_error <= e : hat_error < e;
    passed = passed && ok;
    closest = std::max(closest, hat_error - e);
  }
  detail << " (imm " << fmt(bench.mean_error("imm")) << ", reported only)";
  CheckResult r;
  r.name = "multi_hypothesis_benefit";
  r.passed = passed;
  r.measured = closest;
  r.tolerance = 0.0;
  r.detail = detail.str();
  return r;
}

CheckResult weight_interpretability(BenchmarkRun& bench) {
  const std::vector<double> c = bench.contrasts();
  CheckResult r;
  r.name = "weight_interpretability";
  r.measured = median(c);
  r.tolerance = 0.05;
  r.passed = r.measured >= 0.05;
  std::ostringstream detail;
  detail << "median turning-minus-linear W_a mass on {ctrv, ctra} " << fmt(r.measured)
         << " (>= 0.05); per seed";
  for (double v : c) detail << " " << fmt(v);
  r.detail = detail.str();
  return r;
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name == hat::cli::kLatencyFile) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    out[name] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return out;
}

CheckResult determinism(const fs::path& root) {
  hat::ExperimentConfig config = hat::ExperimentConfig::defaults();
  config.scene.tracks = 8;
  config.scene.frames = 16;
  config.data.train_scenes = 3;
  config.data.test_scenes = 2;
  config.training.epochs = 2;
  config.training.seed = 7;
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"a", "b"}) {
    const auto ctx = hat::cli::make_context(config, (root / name).string());
    hat::cli::cmd_gen(ctx);
    hat::cli::cmd_train(ctx);
    hat::cli::cmd_eval(ctx);
    runs.push_back(snapshot_dir(ctx.out_dir));
  }
  std::size_t differing = 0;
  std::string first;
  for (const auto& [name, bytes] : runs[0]) {
    const auto it = runs[1].find(name);
    if (it == runs[1].end() || it->second != bytes) {
      ++differing;
      if (first.empty()) first = name;
    }
  }
  CheckResult r;
  r.name = "determinism";
  r.measured = static_cast<double>(differing);
  r.tolerance = 0.0;
  r.passed = differing == 0 && runs[0].size() == runs[1].size() && runs[0].size() >= 8;
  r.detail = std::to_string(runs[0].size()) + " artifacts compared byte for byte (latency.json " +
             "excluded), " + std::to_string(differing) + " differ" +
             (first.empty() ? "" : " (first: " + first + ")");
  return r;
}

CheckResult latency_report(BenchmarkRun& bench) {
  const fs::path path = fs::path(bench.first_dir()) / hat::cli::kLatencyFile;
  CheckResult r;
  r.name = "latency_report";
  if (!fs::exists(path)) {
    r.detail = "missing " + path.string();
    return r;
  }
  const auto j = nlohmann::json::parse(hat::read_text_file(path.string()));
  r.measured = j.value("median_ms", -1.0);
  r.passed = r.measured > 0.0 && j.value("calls", 0) >= 100;
  r.detail = "align median " + fmt(r.measured) + " ms per frame over " +
             std::to_string(j.value("calls", 0)) + " calls, K=" +
             std::to_string(j.value("instances", 0)) + " (recorded, no threshold)";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HAT acceptance suite"};
  std::vector<std::string> known_red;
  std::vector<std::string> only;
  std::string out_dir;
  app.add_option("--known-red", known_red, "Criteria expected to fail (documented)");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--out", out_dir, "Keep artifacts in this directory");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = out_dir.empty()
                            ? fs::temp_directory_path() / "hat_acceptance"
                            : fs::path(out_dir);
  fs::remove_all(root);
  fs::create_directories(root);
  BenchmarkRun bench(root / "benchmark");

  const std::vector<Criterion> criteria = {
      {"kinematics_oracle", 5.0, [] { return hat::check_kinematics(1000, 1); }},
      {"degeneracy_lattice", 5.0, [] { return hat::check_degeneracy_lattice(1000, 2); }},
      {"hypothesis_hull", 10.0, [] { return hat::check_hypothesis_hull(10000, 3); }},
      {"gradient_integrity", 30.0, [] { return hat::check_gradients(4); }},
      {"imm_sanity", 60.0, imm_sanity},
      {"multi_hypothesis_benefit", 900.0, [&] { return multi_hypothesis_benefit(bench); }},
      {"weight_interpretability", 0.0, [&] { return weight_interpretability(bench); }},
      {"determinism", 120.0, [&] { return determinism(root / "determinism"); }},
      {"latency_report", 0.0, [&] { return latency_report(bench); }},
  };

  const std::set<std::string> expected_red(known_red.begin(), known_red.end());
  int unexpected = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult result;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result.passed = false;
      result.detail = std::string("error: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool within_time = c.runtime_limit_s == 0.0 || seconds < c.runtime_limit_s;
    const bool passed = result.passed && within_time;
    std::cout << (passed ? "PASS " : "FAIL ") << c.name << ": measured " << fmt(result.measured)
              << ", tolerance " << fmt(result.tolerance) << "; " << result.detail;
    std::cout << " [" << fmt(seconds) << " s";
    if (c.runtime_limit_s > 0.0) std::cout << ", limit " << fmt(c.runtime_limit_s) << " s";
    std::cout << "]";
    const bool listed = expected_red.count(c.name) > 0;
    if (!passed && listed) std::cout << " (known red)";
    if (passed && listed) std::cout << " (listed as known red but passed)";
    std::cout << "\n" << std::flush;
    if (passed == listed) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
