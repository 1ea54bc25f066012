// vrl - command-line front end over the verdict_rl C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "verdict_rl.h"

namespace {

struct ConfigDeleter {
  void operator()(vrl_config* cfg) const { vrl_config_free(cfg); }
};
using ConfigPtr = std::unique_ptr<vrl_config, ConfigDeleter>;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  std::vector<std::string> overrides;  // key=value
};

int fail(vrl_status status) {
  std::fprintf(stderr, "error: %s\n", vrl_last_error());
  return static_cast<int>(status);
}

// Loads the config file (or defaults) and applies --seed/--out/--set.
ConfigPtr resolve_config(const CommonOpts& opts, vrl_status& status) {
  ConfigPtr cfg(opts.config_path.empty() ? vrl_config_new()
                                         : vrl_config_load(opts.config_path.c_str()));
  if (!cfg) {
    status = VRL_ERR_CONFIG;
    return nullptr;
  }
  if (opts.seed >= 0) {
    const std::string seed = std::to_string(opts.seed);
    for (const char* key : {"dataset.seed", "grpo.seed"}) {
      if ((status = vrl_config_set(cfg.get(), key, seed.c_str())) != VRL_OK) return nullptr;
    }
  }
  if (!opts.out_dir.empty()) {
    if ((status = vrl_config_set(cfg.get(), "output.dir", opts.out_dir.c_str())) != VRL_OK) {
      return nullptr;
    }
  }
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      status = VRL_ERR_INVALID_ARG;
      return nullptr;
    }
    if ((status = vrl_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                                 kv.substr(eq + 1).c_str())) != VRL_OK) {
      return nullptr;
    }
  }
  status = VRL_OK;
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Run configuration file (INI)");
  cmd->add_option("--seed", opts.seed, "Override dataset.seed and grpo.seed");
  cmd->add_option("--out", opts.out_dir, "Override output.dir");
  cmd->add_option("--set", opts.overrides, "Override any config key (key=value)")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"verdict-rl: GRPO training harness for structured forgery verdicts"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "Cold start + GRPO; writes run artifacts");
  add_common(train, train_opts);

  CommonOpts ablate_opts;
  std::vector<std::string> arms;
  CLI::App* ablate = app.add_subcommand("ablate", "Run reward/stage ablation arms");
  add_common(ablate, ablate_opts);
  ablate->add_option("--arm", arms,
                     "Arms to run (full, no_format, no_json, no_agentic, zero, sft_only); "
                     "default: all")
      ->take_all();

  std::string ckpt_path, dataset_path, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on an instance JSONL");
  eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  eval->add_option("--dataset", dataset_path, "Instance JSONL")->required();
  eval->add_option("--out", eval_out, "Also write the report JSON to this file");

  std::string completions_path, labels_path, scores_out;
  CLI::App* reward_check =
      app.add_subcommand("reward-check", "Score a JSONL file of completions");
  reward_check->add_option("--completions", completions_path, "JSONL of {id, completion}")
      ->required();
  reward_check->add_option("--labels", labels_path, "Instance JSONL with labels and agent_gt")
      ->required();
  reward_check->add_option("--out", scores_out, "Output path (default: stdout)");

  CommonOpts data_opts;
  std::string data_out;
  CLI::App* make_data = app.add_subcommand("make-data", "Write a synthetic instance JSONL");
  add_common(make_data, data_opts);
  make_data->add_option("--out-file", data_out, "Output JSONL path")->required();

  CLI11_PARSE(app, argc, argv);

  vrl_status status = VRL_OK;

  if (*train) {
    ConfigPtr cfg = resolve_config(train_opts, status);
    if (!cfg) return fail(status);
    if ((status = vrl_train(cfg.get())) != VRL_OK) return fail(status);
    char* dir = nullptr;
    if (vrl_config_get(cfg.get(), "output.dir", &dir) == VRL_OK) {
      std::printf("run artifacts written to %s\n", dir);
      vrl_string_free(dir);
    }
    return 0;
  }

  if (*ablate) {
    ConfigPtr cfg = resolve_config(ablate_opts, status);
    if (!cfg) return fail(status);
    if (arms.empty()) {
      arms = {"full", "no_format", "no_json", "no_agentic", "zero", "sft_only"};
    }
    for (const std::string& arm : arms) {
      std::printf("running arm %s\n", arm.c_str());
      if ((status = vrl_ablate(cfg.get(), arm.c_str())) != VRL_OK) return fail(status);
    }
    return 0;
  }

  if (*eval) {
    char* report = nullptr;
    status = vrl_eval(ckpt_path.c_str(), dataset_path.c_str(),
                      eval_out.empty() ? nullptr : eval_out.c_str(), &report);
    if (status != VRL_OK) return fail(status);
    std::printf("%s\n", report);
    vrl_string_free(report);
    return 0;
  }

  if (*reward_check) {
    status = vrl_reward_check(completions_path.c_str(), labels_path.c_str(),
                              scores_out.empty() ? nullptr : scores_out.c_str());
    if (status != VRL_OK) return fail(status);
    return 0;
  }

  if (*make_data) {
    ConfigPtr cfg = resolve_config(data_opts, status);
    if (!cfg) return fail(status);
    if ((status = vrl_make_dataset(cfg.get(), data_out.c_str())) != VRL_OK) return fail(status);
    std::printf("dataset written to %s\n", data_out.c_str());
    return 0;
  }

  return 0;
}
