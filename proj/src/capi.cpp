#include "verdict_rl.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "vrl/agents.hpp"
#include "vrl/checkpoint.hpp"
#include "vrl/config.hpp"
#include "vrl/error.hpp"
#include "vrl/pipeline.hpp"

namespace {

thread_local std::string t_last_error;

vrl_status status_of(const vrl::Error& e) {
  switch (e.code()) {
    case vrl::ErrorCode::invalid_argument: return VRL_ERR_INVALID_ARG;
    case vrl::ErrorCode::config: return VRL_ERR_CONFIG;
    case vrl::ErrorCode::io: return VRL_ERR_IO;
    case vrl::ErrorCode::data: return VRL_ERR_DATA;
    case vrl::ErrorCode::incompatible: return VRL_ERR_INCOMPATIBLE;
    case vrl::ErrorCode::training: return VRL_ERR_TRAINING;
    case vrl::ErrorCode::locked: return VRL_ERR_LOCKED;
  }
  return VRL_ERR_INTERNAL;
}

// Runs fn, converting exceptions into status codes + the thread-local message.
template <typename Fn>
vrl_status guard(Fn&& fn) {
  try {
    t_last_error.clear();
    fn();
    return VRL_OK;
  } catch (const vrl::Error& e) {
    t_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return VRL_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return VRL_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

struct vrl_config {
  vrl::RunConfig cfg;
};

extern "C" {

const char* vrl_version(void) { return "0.1.0"; }

const char* vrl_last_error(void) { return t_last_error.c_str(); }

void vrl_string_free(char* s) { std::free(s); }

vrl_config* vrl_config_new(void) { return new (std::nothrow) vrl_config{}; }

vrl_config* vrl_config_load(const char* path) {
  vrl_config* out = nullptr;
  const vrl_status st = guard([&] {
    if (!path) throw vrl::Error(vrl::ErrorCode::invalid_argument, "path is null");
    out = new vrl_config{vrl::load_config(path)};
  });
  return st == VRL_OK ? out : nullptr;
}

void vrl_config_free(vrl_config* cfg) { delete cfg; }

vrl_status vrl_config_set(vrl_config* cfg, const char* key, const char* value) {
  return guard([&] {
    if (!cfg || !key || !value) {
      throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    }
    vrl::set_config_value(cfg->cfg, key, value);
  });
}

vrl_status vrl_config_get(const vrl_config* cfg, const char* key, char** value_out) {
  return guard([&] {
    if (!cfg || !key || !value_out) {
      throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    }
    const auto value = vrl::get_config_value(cfg->cfg, key);
    if (!value) {
      throw vrl::Error(vrl::ErrorCode::config, "unknown config key: " + std::string(key));
    }
    *value_out = dup_string(*value);
  });
}

vrl_status vrl_config_dump(const vrl_config* cfg, char** text_out) {
  return guard([&] {
    if (!cfg || !text_out) throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    *text_out = dup_string(vrl::serialize_config(cfg->cfg));
  });
}

vrl_status vrl_config_save(const vrl_config* cfg, const char* path) {
  return guard([&] {
    if (!cfg || !path) throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    vrl::save_config(cfg->cfg, path);
  });
}

vrl_status vrl_make_dataset(const vrl_config* cfg, const char* out_path) {
  return guard([&] {
    if (!cfg || !out_path) throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    const vrl::DatasetConfig& d = cfg->cfg.dataset;
    if (d.n <= 0 || d.n % 2 != 0) {
      throw vrl::Error(vrl::ErrorCode::config, "dataset.n must be positive and even");
    }
    if (d.d < 1) throw vrl::Error(vrl::ErrorCode::config, "dataset.d must be >= 1");
    vrl::save_instances_jsonl(out_path, vrl::make_synthetic_dataset(d.n, d.d, d.seed));
  });
}

vrl_status vrl_train(const vrl_config* cfg) {
  return guard([&] {
    if (!cfg) throw vrl::Error(vrl::ErrorCode::invalid_argument, "null config");
    vrl::run_train_pipeline(cfg->cfg);
  });
}

vrl_status vrl_ablate(const vrl_config* cfg, const char* arm) {
  return guard([&] {
    if (!cfg || !arm) throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    vrl::run_ablation_arm(cfg->cfg, arm);
  });
}

vrl_status vrl_eval(const char* checkpoint_path, const char* dataset_path, const char* out_path,
                    char** report_json_out) {
  return guard([&] {
    if (!checkpoint_path || !dataset_path) {
      throw vrl::Error(vrl::ErrorCode::invalid_argument, "null path");
    }
    const vrl::Checkpoint ckpt = vrl::load_checkpoint(checkpoint_path);
    const std::vector<vrl::LabeledInstance> instances = vrl::load_instances_jsonl(dataset_path);
    if (instances.empty()) {
      throw vrl::Error(vrl::ErrorCode::data, "evaluation dataset is empty");
    }
    if (static_cast<int>(instances[0].features.size()) != ckpt.params.shape.feature_dim) {
      throw vrl::Error(vrl::ErrorCode::incompatible,
                       "checkpoint expects feature dim " +
                           std::to_string(ckpt.params.shape.feature_dim) + ", dataset has " +
                           std::to_string(instances[0].features.size()));
    }
    const vrl::EvalReport report = vrl::evaluate(ckpt.params, instances);
    const std::string json = vrl::eval_report_json(report);
    if (out_path) {
      std::ofstream out(out_path);
      if (!out) throw vrl::Error(vrl::ErrorCode::io, "cannot write " + std::string(out_path));
      out << json << "\n";
    }
    if (report_json_out) *report_json_out = dup_string(json);
  });
}

vrl_status vrl_score_completion(const char* completion, int label, double prob_semantic,
                                double prob_frequency, double prob_dual, const double weights[4],
                                vrl_reward_vector* out) {
  return guard([&] {
    if (!completion || !out) throw vrl::Error(vrl::ErrorCode::invalid_argument, "null argument");
    if (label != 0 && label != 1) {
      throw vrl::Error(vrl::ErrorCode::invalid_argument, "label must be 0 or 1");
    }
    for (double p : {prob_semantic, prob_frequency, prob_dual}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw vrl::Error(vrl::ErrorCode::invalid_argument, "agent probability out of [0,1]");
      }
    }
    vrl::RewardConfig reward_cfg;
    if (weights) {
      reward_cfg.weights = {weights[0], weights[1], weights[2], weights[3]};
    }
    const vrl::AgentOpinions gt{prob_semantic, prob_frequency, prob_dual};
    const vrl::RewardVector rv = vrl::score_completion(completion, label, gt, reward_cfg);
    *out = vrl_reward_vector{rv.format, rv.json, rv.accuracy, rv.agentic, rv.total};
  });
}

vrl_status vrl_reward_check(const char* completions_path, const char* labels_path,
                            const char* out_path) {
  return guard([&] {
    if (!completions_path || !labels_path) {
      throw vrl::Error(vrl::ErrorCode::invalid_argument, "null path");
    }
    vrl::RewardCheckSummary summary;
    if (!out_path || std::strcmp(out_path, "-") == 0) {
      summary = vrl::run_reward_check(completions_path, labels_path, std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out) throw vrl::Error(vrl::ErrorCode::io, "cannot write " + std::string(out_path));
      summary = vrl::run_reward_check(completions_path, labels_path, out);
    }
    if (summary.line_errors > 0) {
      std::string msg = std::to_string(summary.line_errors) + " line(s) failed; first offenders:";
      for (const std::string& id : summary.offenders) msg += " " + id;
      throw vrl::Error(vrl::ErrorCode::data, msg);
    }
  });
}

}  // extern "C"
