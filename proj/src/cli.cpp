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

#include "hat/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "hat/error.hpp"
#include "hat/training.hpp"

namespace hat::cli {
namespace {

using nlohmann::json;

// Exclusive ownership of an output directory for one command.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir) {
    std::filesystem::create_directories(dir);
    path_ = (std::filesystem::path(dir) / kLockFile).string();
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      if (errno == EEXIST) {
        throw Error("output directory " + dir + " is locked by another hat command (remove " +
                    path_ + " if none is running)");
      }
      throw Error("cannot create lock file " + path_);
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto written = ::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~OutputLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

void note(const RunContext& ctx, const std::string& message) {
  if (ctx.log != nullptr) *ctx.log << "[hat] " << message << "\n" << std::flush;
}

json manifest_for(const RunContext& ctx) {
  return json{{"provenance", ctx.provenance().to_json()}};
}

Dataset load_scenes(const RunContext& ctx, const char* file) {
  const SceneFile f = scenes_from_jsonl(read_text_file(ctx.path(file)));
  if (f.header.value("data_hash", std::string()) != data_hash(ctx.config)) {
    throw ValidationError(std::string(file) +
                          " was generated with different scene, noise or data settings; rerun gen");
  }
  Dataset d;
  d.config = ctx.config.scene;
  d.scenes = f.scenes;
  d.observations = f.observations;
  return d;
}

struct TrainedModels {
  HatModel hat;
  HatModel hat_m1;
  ImplicitModel implicit;
};

TrainedModels load_models(const RunContext& ctx) {
  return {load_hat_model(ctx.path(kHatParamsFile)), load_hat_model(ctx.path(kHatM1ParamsFile)),
          load_implicit_model(ctx.path(kImplicitParamsFile))};
}

EvalReport evaluate_all(const RunContext& ctx, const TrainedModels& models, const Dataset& test) {
  MethodSet methods;
  methods.hat = &models.hat;
  methods.hat_m1 = &models.hat_m1;
  methods.implicit = &models.implicit;
  methods.imm_options = ctx.config.imm;
  return evaluate(test, methods);
}

std::string error_category(int code) {
  switch (code) {
    case kExitMissingInput:
      return "missing_input";
    case kExitValidation:
      return "validation";
    case kExitNumerical:
      return "numerical";
    default:
      return "failure";
  }
}

int report_error(std::ostream& err, int code, const std::string& message) {
  err << json{{"error", error_category(code)}, {"exit_code", code}, {"message", message}}.dump()
      << "\n";
  return code;
}

}  // namespace

std::string RunContext::path(const std::string& file) const {
  return (std::filesystem::path(out_dir) / file).string();
}

Provenance RunContext::provenance() const {
  return {kToolVersion, config_hash(config), config.training.seed};
}

Provenance RunContext::data_provenance() const {
  return {kToolVersion, config_hash(config), config.data.seed};
}

RunContext make_context(ExperimentConfig config, const std::string& out_override) {
  RunContext ctx;
  if (!out_override.empty()) {
    ctx.out_dir = out_override;
  } else if (!config.output_dir.empty()) {
    ctx.out_dir = config.output_dir;
  } else if (const char* root = std::getenv("HAT_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    ctx.out_dir = root;
  } else {
    ctx.out_dir = "hat_out";
  }
  ctx.config = std::move(config);
  return ctx;
}

std::string data_hash(const ExperimentConfig& config) {
  const json full = config_to_json(config);
  const json part = {{"scene", full["scene"]}, {"noise", full["noise"]}, {"data", full["data"]}};
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(part.dump());
  return s.str();
}

void cmd_gen(const RunContext& ctx) {
  OutputLock lock(ctx.out_dir);
  const ExperimentConfig& c = ctx.config;
  const json extra = {{"data_hash", data_hash(c)}};
  note(ctx, "generating " + std::to_string(c.data.train_scenes) + " training scenes");
  const Dataset train =
      generate_dataset(c.scene, c.noise, c.data.train_scenes, derive_seed(c.data.seed, 1));
  write_text_file(ctx.path(kTrainScenesFile), scenes_to_jsonl(train, ctx.data_provenance(), extra));
  note(ctx, "generating " + std::to_string(c.data.test_scenes) + " test scenes");
  const Dataset test =
      generate_dataset(c.scene, c.noise, c.data.test_scenes, derive_seed(c.data.seed, 2));
  write_text_file(ctx.path(kTestScenesFile), scenes_to_jsonl(test, ctx.data_provenance(), extra));
}

void cmd_train(const RunContext& ctx) {
  OutputLock lock(ctx.out_dir);
  const ExperimentConfig& c = ctx.config;
  const std::vector<AlignmentSample> samples = build_samples(load_scenes(ctx, kTrainScenesFile));

  note(ctx, "training hat (M=" + std::to_string(c.model.hypothesis_count()) + ")");
  const auto hat = train_hat(samples, HatModel::create(c.model, c.training.seed), c.training);
  HatDims m1 = c.model;
  m1.models = {MotionModelKind::kCv};
  note(ctx, "training hat_m1 (CV only)");
  const auto hat_m1 = train_hat(samples, HatModel::create(m1, c.training.seed), c.training);
  note(ctx, "training implicit aligner");
  const auto implicit = train_implicit(
      samples, ImplicitModel::create(c.model.channels, c.training.seed), c.training);

  save_hat_model(ctx.path(kHatParamsFile), hat.model, manifest_for(ctx));
  save_hat_model(ctx.path(kHatM1ParamsFile), hat_m1.model, manifest_for(ctx));
  save_implicit_model(ctx.path(kImplicitParamsFile), implicit.model, manifest_for(ctx));
  write_text_file(ctx.path(kLossFile),
                  loss_to_csv({{"hat", hat.curve}, {"hat_m1", hat_m1.curve},
                               {"implicit", implicit.curve}},
                              ctx.provenance()));
}

EvalReport cmd_eval(const RunContext& ctx) {
  OutputLock lock(ctx.out_dir);
  const TrainedModels models = load_models(ctx);
  const Dataset test = load_scenes(ctx, kTestScenesFile);
  note(ctx, "evaluating");
  const EvalReport report = evaluate_all(ctx, models, test);
  write_text_file(ctx.path(kEvalCsvFile), eval_to_csv(report, ctx.provenance()));
  write_text_file(ctx.path(kEvalJsonFile), eval_to_json(report, ctx.provenance()).dump(2) + "\n");
  note(ctx, "measuring latency");
  const LatencyReport latency = measure_latency(build_samples(test), models.hat, 100);
  write_text_file(ctx.path(kLatencyFile),
                  latency_to_json(latency, ctx.provenance()).dump(2) + "\n");
  return report;
}

EvalReport cmd_compare(const RunContext& ctx, std::ostream& out) {
  OutputLock lock(ctx.out_dir);
  const TrainedModels models = load_models(ctx);
  const EvalReport report = evaluate_all(ctx, models, load_scenes(ctx, kTestScenesFile));
  write_text_file(ctx.path(kCompareFile), compare_to_csv(report, ctx.provenance()));
  out << "mean translation error (m)\n" << compare_to_text(report);
  return report;
}

WeightReport cmd_weights(const RunContext& ctx) {
  OutputLock lock(ctx.out_dir);
  const HatModel hat = load_hat_model(ctx.path(kHatParamsFile));
  const std::vector<AlignmentSample> samples = build_samples(load_scenes(ctx, kTestScenesFile));
  const WeightReport report = weight_report(samples, hat);
  write_text_file(ctx.path(kWeightsFile), weights_to_csv(report, ctx.provenance()));
  return report;
}

std::vector<CheckResult> cmd_selftest(bool quick, std::ostream& out) {
  std::vector<CheckResult> results = run_selftest(quick);
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.measured << " (limit "
        << r.tolerance << ") " << r.detail << "\n";
  }
  return results;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const MissingInputError*>(&e) != nullptr) return kExitMissingInput;
  if (dynamic_cast<const ValidationError*>(&e) != nullptr) return kExitValidation;
  if (dynamic_cast<const NumericalError*>(&e) != nullptr) return kExitNumerical;
  return kExitFailure;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"HAT: multiple-hypothesis spatio-temporal alignment"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool verbose = false;
  bool quick = false;

  std::vector<CLI::App*> experiment_commands;
  auto add_experiment = [&](const char* name, const char* description) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("-c,--config", config_path, "Experiment config (JSON); defaults when omitted");
    sub->add_option("-o,--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override training.seed");
    sub->add_flag("-v,--verbose", verbose, "Progress messages on stderr");
    experiment_commands.push_back(sub);
    return sub;
  };
  CLI::App* gen = add_experiment("gen", "Generate training and test scenes");
  CLI::App* train = add_experiment("train", "Train HAT, HAT (M=1) and the implicit aligner");
  CLI::App* eval = add_experiment("eval", "Evaluate every method on the test scenes");
  CLI::App* compare = add_experiment("compare", "Side-by-side mean translation error table");
  CLI::App* weights = add_experiment("weights", "Per-regime decoding-weight table");
  CLI::App* selftest = app.add_subcommand("selftest", "Run the oracle checks");
  selftest->add_flag("--quick", quick, "Reduced draw counts");
  CLI::App* schema = app.add_subcommand("schema", "Print the config JSON schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    return report_error(err, kExitValidation, e.what());
  }

  try {
    if (selftest->parsed()) {
      const auto results = cmd_selftest(quick, out);
      for (const auto& r : results) {
        if (!r.passed) return kExitFailure;
      }
      return kExitOk;
    }
    if (schema->parsed()) {
      out << config_schema().dump(2) << "\n";
      return kExitOk;
    }
    CLI::App* active = nullptr;
    for (CLI::App* sub : experiment_commands) {
      if (sub->parsed()) active = sub;
    }
    ExperimentConfig config =
        config_path.empty() ? ExperimentConfig::defaults() : load_config(config_path);
    if (active->count("--seed") > 0) {
      config.training.seed = seed;
      config.validate();
    }
    RunContext ctx = make_context(std::move(config), out_dir);
    if (verbose) ctx.log = &err;

    if (active == gen) {
      cmd_gen(ctx);
    } else if (active == train) {
      cmd_train(ctx);
    } else if (active == eval) {
      cmd_eval(ctx);
    } else if (active == compare) {
      cmd_compare(ctx, out);
    } else if (active == weights) {
      const WeightReport r = cmd_weights(ctx);
      out << "turning-model mass: turning " << r.turning_model_mass(true) << ", linear "
          << r.turning_model_mass(false) << "\n";
    }
    out << "wrote " << ctx.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return report_error(err, exit_code_for(e), e.what());
  }
}

}  // namespace hat::cli
