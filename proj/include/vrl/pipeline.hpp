#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vrl/agents.hpp"
#include "vrl/checkpoint.hpp"
#include "vrl/config.hpp"
#include "vrl/grpo.hpp"

namespace vrl {

// --- evaluation ---

struct EvalReport {
  int count = 0;
  double accuracy_real = 0.0;
  double accuracy_fake = 0.0;
  double mean_accuracy = 0.0;  // arithmetic mean of the two class accuracies
  double format_rate = 0.0;
  double json_rate = 0.0;
  double mean_agentic = 0.0;
};

// Greedy decoding (argmax per head, lowest index on ties), post-processing,
// comparison against labels.
EvalReport evaluate(const PolicyParams& params, std::span<const LabeledInstance> instances,
                    const RewardConfig& reward_cfg = {});
std::string eval_report_json(const EvalReport& report);

// --- dataset preparation and splits ---

struct PreparedData {
  std::vector<LabeledInstance> train;
  std::vector<LabeledInstance> heldout;
};

// Synthetic generation or file ingestion per the config, including filling
// agent opinions from ingested stores when agents.mode = ingested.
PreparedData prepare_data(const RunConfig& cfg);

struct DatasetSplit {
  std::vector<LabeledInstance> sft_set;
  std::vector<LabeledInstance> rl_set;
};

// Disjoint split after a seed-deterministic shuffle; the two parts cover the
// input exactly.
DatasetSplit split_dataset(std::span<const LabeledInstance> instances, double sft_fraction,
                           std::uint64_t seed);

// --- training pipeline ---

struct TrainOutputs {
  std::string out_dir;
  std::string final_checkpoint;
  std::string sft_checkpoint;
  std::string metrics_csv;
  EvalReport heldout_eval;  // meaningful when a held-out set was configured
  bool has_heldout = false;
};

// Cold start (unless sft.fraction == 0 or sft.epochs == 0) followed by GRPO.
// Writes dataset snapshots, both checkpoints, metrics.csv, the resolved
// config, and eval.json into cfg.output.dir. Deterministic per seed;
// timestamps only ever go to the run.log sidecar.
TrainOutputs run_train_pipeline(const RunConfig& cfg);

// Named weight/stage variants; writes the same artifact set per arm under
// <output.dir>/<arm> and appends a row to <output.dir>/ablation.csv.
// Arms: full, no_format, no_json, no_agentic, zero (no cold start), sft_only.
RunConfig apply_ablation_arm(const RunConfig& cfg, const std::string& arm);
TrainOutputs run_ablation_arm(const RunConfig& cfg, const std::string& arm);

// --- offline scoring ---

struct RewardCheckSummary {
  std::size_t scored = 0;
  std::size_t line_errors = 0;
  double mean_format = 0.0;
  double mean_json = 0.0;
  double mean_accuracy = 0.0;
  double mean_agentic = 0.0;
  double mean_total = 0.0;
  std::vector<std::string> offenders;  // first unmatched/invalid ids (capped)
};

// Scores a JSONL stream of {"id", "completion"} against a labels JSONL of
// instances. Emits one JSON result line per input line plus a final summary
// line; per-line failures are reported and skipped without aborting.
RewardCheckSummary run_reward_check(const std::string& completions_path,
                                    const std::string& labels_path, std::ostream& out,
                                    const RewardConfig& reward_cfg = {});

std::string metrics_to_csv(const MetricsLog& log);

// --- misc ---

// Holds <dir>/.lock for the lifetime of the object; refuses to start when
// another writer owns the directory.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

// Log level from VRL_LOG (error|warn|info|debug); default warn.
bool log_enabled(int level);  // 0 error, 1 warn, 2 info, 3 debug
void log_line(int level, const std::string& message);

}  // namespace vrl
