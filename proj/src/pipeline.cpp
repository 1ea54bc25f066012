#include "vrl/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "vrl/error.hpp"

namespace vrl {

namespace fs = std::filesystem;

namespace {

std::string json_number(double v) { return format_double(v); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write file: " + path);
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

// Appends a timestamped line to the run.log sidecar; the only artifact that
// ever sees wall-clock time.
void sidecar_log(const std::string& dir, const std::string& message) {
  std::ofstream out(dir + "/run.log", std::ios::app);
  if (!out) return;
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&t));
  out << stamp << "Z " << message << "\n";
}

}  // namespace

bool log_enabled(int level) {
  static const int threshold = [] {
    const char* env = std::getenv("VRL_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "error") return 0;
    if (v == "warn") return 1;
    if (v == "info") return 2;
    if (v == "debug") return 3;
    return 1;
  }();
  return level <= threshold;
}

void log_line(int level, const std::string& message) {
  if (!log_enabled(level)) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[vrl:" << names[std::clamp(level, 0, 3)] << "] " << message << "\n";
}

EvalReport evaluate(const PolicyParams& params, std::span<const LabeledInstance> instances,
                    const RewardConfig& reward_cfg) {
  if (instances.empty()) throw Error(ErrorCode::invalid_argument, "empty evaluation set");

  EvalReport report;
  report.count = static_cast<int>(instances.size());
  double correct[2] = {0.0, 0.0};
  double total[2] = {0.0, 0.0};

  for (const LabeledInstance& inst : instances) {
    const Emission e = greedy_emission(params, inst);
    const std::string text = emit_text(e, params.shape);
    const RewardVector rv = score_completion(text, inst.label, inst.agent_gt, reward_cfg);
    report.format_rate += rv.format;
    report.json_rate += rv.json;
    report.mean_agentic += rv.agentic;
    total[inst.label] += 1.0;
    if (rv.accuracy == 1.0) correct[inst.label] += 1.0;
  }

  const double inv = 1.0 / static_cast<double>(instances.size());
  report.format_rate *= inv;
  report.json_rate *= inv;
  report.mean_agentic *= inv;
  report.accuracy_real = total[0] > 0.0 ? correct[0] / total[0] : 0.0;
  report.accuracy_fake = total[1] > 0.0 ? correct[1] / total[1] : 0.0;
  report.mean_accuracy = 0.5 * (report.accuracy_real + report.accuracy_fake);
  return report;
}

std::string eval_report_json(const EvalReport& r) {
  std::string out = "{";
  out += "\"count\":" + std::to_string(r.count);
  out += ",\"accuracy_real\":" + json_number(r.accuracy_real);
  out += ",\"accuracy_fake\":" + json_number(r.accuracy_fake);
  out += ",\"mean_accuracy\":" + json_number(r.mean_accuracy);
  out += ",\"format_rate\":" + json_number(r.format_rate);
  out += ",\"json_rate\":" + json_number(r.json_rate);
  out += ",\"mean_agentic_reward\":" + json_number(r.mean_agentic);
  out += "}";
  return out;
}

PreparedData prepare_data(const RunConfig& cfg) {
  PreparedData data;
  if (cfg.dataset.source == "synthetic") {
    const SyntheticWorld world(cfg.dataset.seed, cfg.dataset.d);
    data.train = world.make_dataset(cfg.dataset.n, 0);
    if (cfg.dataset.heldout_n > 0) data.heldout = world.make_dataset(cfg.dataset.heldout_n, 1);
    return data;
  }

  const bool ingested = cfg.agents.mode == "ingested";
  data.train = load_instances_jsonl(cfg.dataset.path, /*require_agent_gt=*/!ingested);
  if (!cfg.dataset.heldout_path.empty()) {
    data.heldout = load_instances_jsonl(cfg.dataset.heldout_path, !ingested);
  }

  if (ingested) {
    AgentSet agents(
        std::make_unique<StoredAgent>(AgentKind::semantic,
                                      ingest_agent_file(cfg.agents.semantic_path,
                                                        AgentKind::semantic)),
        std::make_unique<StoredAgent>(AgentKind::frequency,
                                      ingest_agent_file(cfg.agents.frequency_path,
                                                        AgentKind::frequency)),
        std::make_unique<StoredAgent>(AgentKind::dual_stream,
                                      ingest_agent_file(cfg.agents.dual_path,
                                                        AgentKind::dual_stream)));
    for (std::vector<LabeledInstance>* set : {&data.train, &data.heldout}) {
      for (LabeledInstance& inst : *set) inst.agent_gt = agents.opinions(inst);
    }
  }
  return data;
}

DatasetSplit split_dataset(std::span<const LabeledInstance> instances, double sft_fraction,
                           std::uint64_t seed) {
  if (!(sft_fraction >= 0.0 && sft_fraction <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "sft fraction must be in [0,1]");
  }
  std::vector<std::size_t> order(instances.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x5917u));
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    const std::size_t j = i + rng.below(order.size() - i);
    std::swap(order[i], order[j]);
  }

  const std::size_t sft_count =
      static_cast<std::size_t>(sft_fraction * static_cast<double>(instances.size()));
  DatasetSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < sft_count ? split.sft_set : split.rl_set).push_back(instances[order[i]]);
  }
  return split;
}

std::string metrics_to_csv(const MetricsLog& log) {
  std::string out =
      "iteration,mean_total_reward,mean_r_format,mean_r_json,mean_r_acc,mean_r_agentic,"
      "accuracy,format_rate,mean_kl\n";
  for (const MetricsRow& row : log) {
    out += std::to_string(row.iteration);
    for (double v : {row.mean_total_reward, row.mean_r_format, row.mean_r_json, row.mean_r_acc,
                     row.mean_r_agentic, row.accuracy, row.format_rate, row.mean_kl}) {
      out += ",";
      out += format_double(v);
    }
    out += "\n";
  }
  return out;
}

OutputLock::OutputLock(const std::string& dir) : path_(dir + "/.lock") {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create output directory: " + dir);

  // O_CREAT|O_EXCL semantics via noreplace is C++23; emulate with a check +
  // exclusive create race window, acceptable for a single-machine harness.
  if (fs::exists(path_)) {
    throw Error(ErrorCode::locked, "output directory is locked: " + dir +
                                       " (remove " + path_ + " if no run is active)");
  }
  std::ofstream lock(path_);
  if (!lock) throw Error(ErrorCode::io, "cannot create lock file: " + path_);
  lock << "pid " << ::getpid() << "\n";
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

TrainOutputs run_train_pipeline(const RunConfig& cfg) {
  validate_config(cfg);
  const std::string dir = cfg.output.dir;
  OutputLock lock(dir);
  sidecar_log(dir, "train started");

  PreparedData data = prepare_data(cfg);
  save_instances_jsonl(dir + "/train.jsonl", data.train);
  if (!data.heldout.empty()) save_instances_jsonl(dir + "/heldout.jsonl", data.heldout);

  const int dim = data.train.empty() ? cfg.dataset.d : static_cast<int>(data.train[0].features.size());
  PolicyShape shape;
  shape.feature_dim = dim;

  DatasetSplit split = split_dataset(data.train, cfg.sft.fraction, cfg.dataset.seed);
  log_line(2, "split: " + std::to_string(split.sft_set.size()) + " sft / " +
                  std::to_string(split.rl_set.size()) + " rl");

  // Stage 1: cold start (skipped when the SFT set is empty or epochs = 0).
  PolicyParams params = PolicyParams::zeros(shape);
  if (!split.sft_set.empty() && cfg.sft.epochs > 0) {
    const std::vector<SftExample> examples = make_sft_examples(split.sft_set, shape);
    const ColdStartResult fit =
        cold_start_fit(params, examples, cfg.sft.epochs, cfg.sft.learning_rate);
    params = fit.params;
    sidecar_log(dir, "cold start done");
    log_line(2, "cold start mean logp " + format_double(fit.initial_mean_logp) + " -> " +
                    format_double(fit.final_mean_logp));
  }

  const std::uint64_t hash = config_hash(cfg);
  TrainOutputs outputs;
  outputs.out_dir = dir;
  outputs.sft_checkpoint = dir + "/sft.ckpt";
  save_checkpoint(outputs.sft_checkpoint, params, hash);

  // Stage 2: GRPO against the post-cold-start reference.
  const PolicyParams reference = params;
  MetricsLog metrics;
  if (cfg.grpo.iterations > 0 && !split.rl_set.empty()) {
    try {
      TrainResult rl = run_training(split.rl_set, params, reference, cfg.grpo, cfg.rewards);
      params = std::move(rl.params);
      metrics = std::move(rl.metrics);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::training) {
        throw Error(ErrorCode::training, std::string("grpo stage: ") + e.what());
      }
      throw;
    }
    sidecar_log(dir, "grpo done");
  }

  outputs.final_checkpoint = dir + "/final.ckpt";
  save_checkpoint(outputs.final_checkpoint, params, hash);
  outputs.metrics_csv = dir + "/metrics.csv";
  write_text_file(outputs.metrics_csv, metrics_to_csv(metrics));
  save_config(cfg, dir + "/config.resolved.ini");

  if (!data.heldout.empty()) {
    outputs.heldout_eval = evaluate(params, data.heldout, cfg.rewards);
    outputs.has_heldout = true;
    write_text_file(dir + "/eval.json", eval_report_json(outputs.heldout_eval) + "\n");
  }
  sidecar_log(dir, "train finished");
  return outputs;
}

RunConfig apply_ablation_arm(const RunConfig& cfg, const std::string& arm) {
  RunConfig out = cfg;
  if (arm == "full") {
    // unchanged
  } else if (arm == "no_format") {
    out.rewards.weights.format = 0.0;
  } else if (arm == "no_json") {
    out.rewards.weights.json = 0.0;
  } else if (arm == "no_agentic") {
    out.rewards.weights.agentic = 0.0;
  } else if (arm == "zero") {
    out.sft.fraction = 0.0;  // RL from scratch, no cold start
  } else if (arm == "sft_only") {
    out.grpo.iterations = 0;
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown ablation arm: " + arm);
  }
  return out;
}

TrainOutputs run_ablation_arm(const RunConfig& cfg, const std::string& arm) {
  RunConfig arm_cfg = apply_ablation_arm(cfg, arm);
  arm_cfg.output.dir = cfg.output.dir + "/" + arm;
  const TrainOutputs outputs = run_train_pipeline(arm_cfg);

  // One comparable row per arm; all arms share the dataset seed.
  const std::string summary = cfg.output.dir + "/ablation.csv";
  const bool fresh = !fs::exists(summary);
  std::ofstream out(summary, std::ios::app);
  if (!out) throw Error(ErrorCode::io, "cannot write " + summary);
  if (fresh) {
    out << "arm,count,accuracy_real,accuracy_fake,mean_accuracy,format_rate,json_rate,"
           "mean_agentic_reward\n";
  }
  const EvalReport& r = outputs.heldout_eval;
  out << arm << "," << r.count << "," << format_double(r.accuracy_real) << ","
      << format_double(r.accuracy_fake) << "," << format_double(r.mean_accuracy) << ","
      << format_double(r.format_rate) << "," << format_double(r.json_rate) << ","
      << format_double(r.mean_agentic) << "\n";
  return outputs;
}

RewardCheckSummary run_reward_check(const std::string& completions_path,
                                    const std::string& labels_path, std::ostream& out,
                                    const RewardConfig& reward_cfg) {
  const std::vector<LabeledInstance> labels = load_instances_jsonl(labels_path);
  std::unordered_map<std::string, const LabeledInstance*> by_id;
  for (const LabeledInstance& inst : labels) by_id[inst.id] = &inst;

  std::ifstream in(completions_path);
  if (!in) throw Error(ErrorCode::io, "cannot open completions file: " + completions_path);

  constexpr std::size_t kMaxOffenders = 10;
  RewardCheckSummary summary;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("id") ||
        !doc["id"].is_string() || !doc.contains("completion") || !doc["completion"].is_string()) {
      ++summary.line_errors;
      if (summary.offenders.size() < kMaxOffenders) {
        summary.offenders.push_back("line " + std::to_string(line_no));
      }
      out << "{\"line\":" << line_no << ",\"error\":\"invalid completion record\"}\n";
      continue;
    }

    const std::string id = doc["id"].get<std::string>();
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      ++summary.line_errors;
      if (summary.offenders.size() < kMaxOffenders) summary.offenders.push_back(id);
      out << "{\"id\":" << nlohmann::json(id).dump() << ",\"error\":\"no matching label\"}\n";
      continue;
    }

    const LabeledInstance& inst = *it->second;
    const RewardVector rv =
        score_completion(doc["completion"].get<std::string>(), inst.label, inst.agent_gt,
                         reward_cfg);
    out << "{\"id\":" << nlohmann::json(id).dump() << ",\"r_format\":" << json_number(rv.format)
        << ",\"r_json\":" << json_number(rv.json) << ",\"r_acc\":" << json_number(rv.accuracy)
        << ",\"r_agentic\":" << json_number(rv.agentic) << ",\"total\":" << json_number(rv.total)
        << "}\n";

    ++summary.scored;
    summary.mean_format += rv.format;
    summary.mean_json += rv.json;
    summary.mean_accuracy += rv.accuracy;
    summary.mean_agentic += rv.agentic;
    summary.mean_total += rv.total;
  }

  if (summary.scored > 0) {
    const double inv = 1.0 / static_cast<double>(summary.scored);
    summary.mean_format *= inv;
    summary.mean_json *= inv;
    summary.mean_accuracy *= inv;
    summary.mean_agentic *= inv;
    summary.mean_total *= inv;
  }

  out << "{\"summary\":{\"scored\":" << summary.scored
      << ",\"line_errors\":" << summary.line_errors
      << ",\"mean_r_format\":" << json_number(summary.mean_format)
      << ",\"mean_r_json\":" << json_number(summary.mean_json)
      << ",\"mean_r_acc\":" << json_number(summary.mean_accuracy)
      << ",\"mean_r_agentic\":" << json_number(summary.mean_agentic)
      << ",\"mean_total\":" << json_number(summary.mean_total) << "}}\n";
  return summary;
}

}  // namespace vrl
