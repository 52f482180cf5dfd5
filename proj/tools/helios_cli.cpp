#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "helios/pipeline/stages.hpp"

namespace {

using namespace helios;
using namespace helios::pipeline;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool quiet = false;
};

// Precedence, lowest first: defaults, config file, HELIOS_OUT_DIR, --set, dedicated flags.
PipelineConfig resolve_config(const Options& o) {
  PipelineConfig cfg = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
  if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.output_dir = env;
  for (const auto& a : o.overrides) apply_assignment(cfg, a);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"helios: event-camera microgesture pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-c,--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "Override a key, e.g. --set train.epochs=2")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_option("--seed", o.seed, "Global seed");
  app.add_option("--out", o.out, "Output directory (overrides HELIOS_OUT_DIR)");
  app.add_option("--threads", o.threads, "Worker threads");
  app.add_flag("-q,--quiet", o.quiet, "Suppress progress output");

  auto* simulate = app.add_subcommand("simulate", "Synthesize hand sequences, events and labels");
  auto* encode = app.add_subcommand("encode", "Slice sequences into labelled windows");
  bool dump_npy = false;
  encode->add_flag("--npy", dump_npy, "Also dump time surfaces as NPY arrays");
  auto* train = app.add_subcommand("train", "Train the float model");
  auto* finetune = app.add_subcommand("finetune", "Rotation-augmented fine-tuning of the late stages");
  auto* qat = app.add_subcommand("qat", "Calibrate, quantization-aware training, int8 export");
  auto* evaluate = app.add_subcommand("evaluate", "Prompted-trial F1 and validation confusion");
  std::string model = "int8";
  evaluate->add_option("--model", model, "float, qat, int8 or finetuned")
      ->check(CLI::IsMember(model_kinds()));
  auto* bench = app.add_subcommand("bench", "Float vs integer latency");
  auto* report = app.add_subcommand("report", "Summarize evaluations and latency");
  auto* show = app.add_subcommand("config", "Print the resolved config as INI");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorCode::kUsage);
  }

  try {
    const PipelineConfig cfg = resolve_config(o);
    const StageContext ctx(cfg, o.quiet ? nullptr : &std::cerr);
    if (*simulate) run_simulate(ctx);
    else if (*encode) run_encode(ctx, dump_npy);
    else if (*train) run_train(ctx);
    else if (*finetune) run_finetune(ctx);
    else if (*qat) run_qat(ctx);
    else if (*evaluate) run_evaluate(ctx, model);
    else if (*bench) run_bench(ctx);
    else if (*report) std::cout << run_report(ctx).dump(2) << "\n";
    else if (*show) std::cout << to_ini(cfg);
    return 0;
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
}
