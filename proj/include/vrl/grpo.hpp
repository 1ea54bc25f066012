#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrl/policy.hpp"
#include "vrl/rewards.hpp"

namespace vrl {

struct GrpoConfig {
  int group_size = 8;           // G responses per instance
  double clip_epsilon = 0.2;    // probability-ratio clip half-width
  double kl_beta = 0.04;        // weight of the KL penalty against the reference
  double learning_rate = 1e-2;  // sized for the toy policy (1e-6 at full scale)
  int iterations = 1250;
  int batch_size = 256;
  std::uint64_t seed = 0;
  int threads = 1;
};

void validate_grpo_config(const GrpoConfig& cfg);  // throws Error(config)

// Group-normalized advantages: (r - mean) / population std. A group with
// (numerically) zero variance carries no signal; its advantages are all zero
// and the degenerate flag is set.
struct AdvantageResult {
  std::vector<double> advantages;
  bool degenerate = false;
};

AdvantageResult compute_advantages(std::span<const double> rewards);

// k3 estimator of KL(current || reference) for one sample:
// rho - ln(rho) - 1 with rho = exp(logp_ref - logp_cur). Non-negative,
// zero iff the log-probabilities agree.
double kl_k3(double logp_current, double logp_reference);

// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A) with
// ratio = exp(logp_cur - logp_old). Sequence-level: one ratio per response.
double clipped_surrogate(double logp_current, double logp_old, double advantage,
                         double clip_epsilon);

// Everything known about the G responses drawn for one instance.
struct RolloutGroup {
  std::string instance_id;
  std::vector<double> features;
  int label = 0;
  AgentOpinions agent_gt{};

  std::vector<Emission> emissions;
  std::vector<std::string> completions;
  std::vector<RewardVector> rewards;
  std::vector<double> reward_totals;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  std::vector<double> advantages;
  bool degenerate = false;

  int size() const { return static_cast<int>(emissions.size()); }
};

// Mean over the group of [surrogate_i - beta * kl_i] given current
// log-probabilities for its emissions.
double group_objective(const RolloutGroup& group, std::span<const double> logp_current,
                       const GrpoConfig& cfg);

// Batch mean of group objectives under `params` (log-probs recomputed).
double batch_objective(const PolicyParams& params, std::span<const RolloutGroup> groups,
                       const GrpoConfig& cfg);

// Exact gradient of batch_objective with respect to `params`. Old and
// reference log-probabilities are constants. Throws Error(training) on a
// non-finite gradient.
PolicyParams batch_objective_gradient(const PolicyParams& params,
                                      std::span<const RolloutGroup> groups,
                                      const GrpoConfig& cfg);

// One gradient-ascent step; the input parameters are not mutated.
PolicyParams grpo_step(const PolicyParams& params, std::span<const RolloutGroup> groups,
                       const GrpoConfig& cfg);

// Draws, renders and scores G responses for one instance under the sampling
// snapshot. The RNG stream is derived from (seed, iteration, instance id), so
// groups are independent of batch order and worker layout.
RolloutGroup sample_rollout_group(const PolicyParams& sampling_params,
                                  const PolicyParams& reference, const LabeledInstance& instance,
                                  const GrpoConfig& cfg, const RewardConfig& reward_cfg,
                                  std::uint64_t iteration);

struct MetricsRow {
  int iteration = 0;
  double mean_total_reward = 0.0;
  double mean_r_format = 0.0;
  double mean_r_json = 0.0;
  double mean_r_acc = 0.0;
  double mean_r_agentic = 0.0;
  double accuracy = 0.0;     // fraction of sampled responses with a correct verdict
  double format_rate = 0.0;  // fraction matching the think/answer envelope
  double mean_kl = 0.0;      // mean k3 KL of the sampling snapshot vs the reference
};

using MetricsLog = std::vector<MetricsRow>;

struct TrainResult {
  PolicyParams params;
  MetricsLog metrics;
};

// The GRPO loop: per iteration, sample a batch of instances, draw G responses
// per instance from the iteration snapshot, score them, normalize advantages
// within each group, and take one ascent step. Deterministic given the seed,
// including under cfg.threads > 1.
TrainResult run_training(std::span<const LabeledInstance> rl_set, const PolicyParams& init,
                         const PolicyParams& reference, const GrpoConfig& cfg,
                         const RewardConfig& reward_cfg);

}  // namespace vrl
