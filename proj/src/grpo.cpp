#include "vrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "vrl/error.hpp"

namespace vrl {

namespace {

constexpr double kDegenerateStd = 1e-12;

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// Contribution coefficient of one response to the objective gradient:
// d(objective_i)/d(logp_cur_i). The surrogate contributes A * ratio while the
// unclipped branch is active and nothing once the clipped branch saturates;
// the KL penalty contributes -beta * (1 - rho).
double logp_coefficient(double logp_cur, double logp_old, double logp_ref, double advantage,
                        const GrpoConfig& cfg) {
  const double ratio = std::exp(logp_cur - logp_old);
  const double unclipped = ratio * advantage;
  const double clipped = clip(ratio, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * advantage;
  double coeff = unclipped <= clipped ? ratio * advantage : 0.0;

  const double rho = std::exp(logp_ref - logp_cur);
  coeff -= cfg.kl_beta * (1.0 - rho);
  return coeff;
}

}  // namespace

void validate_grpo_config(const GrpoConfig& cfg) {
  if (cfg.group_size < 2) throw Error(ErrorCode::config, "grpo.group_size must be >= 2");
  if (!(cfg.clip_epsilon > 0.0 && cfg.clip_epsilon < 1.0)) {
    throw Error(ErrorCode::config, "grpo.clip_epsilon must be in (0,1)");
  }
  if (cfg.kl_beta < 0.0) throw Error(ErrorCode::config, "grpo.kl_beta must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw Error(ErrorCode::config, "grpo.learning_rate must be > 0");
  if (cfg.iterations < 0) throw Error(ErrorCode::config, "grpo.iterations must be >= 0");
  if (cfg.batch_size < 1) throw Error(ErrorCode::config, "grpo.batch_size must be >= 1");
  if (cfg.threads < 1) throw Error(ErrorCode::config, "grpo.threads must be >= 1");
}

AdvantageResult compute_advantages(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) throw Error(ErrorCode::invalid_argument, "advantage group needs at least 2 rewards");

  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);  // population std

  AdvantageResult out;
  out.advantages.resize(n, 0.0);
  if (std_dev < kDegenerateStd) {
    out.degenerate = true;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) out.advantages[i] = (rewards[i] - mean) / std_dev;
  return out;
}

double kl_k3(double logp_current, double logp_reference) {
  const double log_rho = logp_reference - logp_current;
  return std::exp(log_rho) - log_rho - 1.0;
}

double clipped_surrogate(double logp_current, double logp_old, double advantage,
                         double clip_epsilon) {
  const double ratio = std::exp(logp_current - logp_old);
  const double clipped = clip(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double group_objective(const RolloutGroup& group, std::span<const double> logp_current,
                       const GrpoConfig& cfg) {
  const int g = group.size();
  if (static_cast<int>(logp_current.size()) != g) {
    throw Error(ErrorCode::invalid_argument, "logp_current size does not match group");
  }
  double total = 0.0;
  for (int i = 0; i < g; ++i) {
    total += clipped_surrogate(logp_current[i], group.logp_old[i], group.advantages[i],
                               cfg.clip_epsilon) -
             cfg.kl_beta * kl_k3(logp_current[i], group.logp_ref[i]);
  }
  return total / g;
}

double batch_objective(const PolicyParams& params, std::span<const RolloutGroup> groups,
                       const GrpoConfig& cfg) {
  if (groups.empty()) throw Error(ErrorCode::invalid_argument, "empty rollout batch");
  double total = 0.0;
  std::vector<double> logp_cur;
  for (const RolloutGroup& group : groups) {
    logp_cur.resize(group.size());
    for (int i = 0; i < group.size(); ++i) {
      logp_cur[i] = log_prob(params, group.features, group.emissions[i]);
    }
    total += group_objective(group, logp_cur, cfg);
  }
  return total / static_cast<double>(groups.size());
}

PolicyParams batch_objective_gradient(const PolicyParams& params,
                                      std::span<const RolloutGroup> groups,
                                      const GrpoConfig& cfg) {
  if (groups.empty()) throw Error(ErrorCode::invalid_argument, "empty rollout batch");
  PolicyParams grad = PolicyParams::zeros(params.shape);
  const double batch_scale = 1.0 / static_cast<double>(groups.size());

  for (const RolloutGroup& group : groups) {
    const double scale = batch_scale / group.size();
    for (int i = 0; i < group.size(); ++i) {
      const double logp_cur = log_prob(params, group.features, group.emissions[i]);
      const double coeff = logp_coefficient(logp_cur, group.logp_old[i], group.logp_ref[i],
                                            group.advantages[i], cfg);
      accumulate_log_prob_grad(params, group.features, group.emissions[i], scale * coeff, grad);
    }
  }
  if (!grad.all_finite()) throw Error(ErrorCode::training, "non-finite gradient in grpo step");
  return grad;
}

PolicyParams grpo_step(const PolicyParams& params, std::span<const RolloutGroup> groups,
                       const GrpoConfig& cfg) {
  PolicyParams next = params;
  next.add_scaled(batch_objective_gradient(params, groups, cfg), cfg.learning_rate);
  return next;
}

RolloutGroup sample_rollout_group(const PolicyParams& sampling_params,
                                  const PolicyParams& reference, const LabeledInstance& instance,
                                  const GrpoConfig& cfg, const RewardConfig& reward_cfg,
                                  std::uint64_t iteration) {
  RolloutGroup group;
  group.instance_id = instance.id;
  group.features = instance.features;
  group.label = instance.label;
  group.agent_gt = instance.agent_gt;

  Rng rng(mix_seed(cfg.seed, fnv1a64(instance.id), iteration));
  group.emissions.reserve(cfg.group_size);
  for (int i = 0; i < cfg.group_size; ++i) {
    Emission e = sample_emission(sampling_params, instance, rng);
    group.completions.push_back(emit_text(e, sampling_params.shape));
    group.logp_old.push_back(e.logp);
    group.logp_ref.push_back(log_prob(reference, instance.features, e));
    const RewardVector rv = score_completion(group.completions.back(), instance.label,
                                             instance.agent_gt, reward_cfg);
    group.rewards.push_back(rv);
    group.reward_totals.push_back(rv.total);
    group.emissions.push_back(e);
  }

  AdvantageResult adv = compute_advantages(group.reward_totals);
  group.advantages = std::move(adv.advantages);
  group.degenerate = adv.degenerate;
  return group;
}

namespace {

// Batch instance selection: a partial Fisher-Yates pass over the index list,
// re-seeded per iteration so the schedule is independent of thread count.
std::vector<std::size_t> pick_batch(std::size_t n, int batch_size, std::uint64_t seed,
                                    std::uint64_t iteration) {
  std::vector<std::size_t> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  if (static_cast<std::size_t>(batch_size) >= n) return indices;

  Rng rng(mix_seed(seed, 0xBA7C4u, iteration));
  for (int i = 0; i < batch_size; ++i) {
    const std::size_t j = i + rng.below(n - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(batch_size);
  return indices;
}

void fill_groups_parallel(std::vector<RolloutGroup>& groups,
                          std::span<const LabeledInstance> rl_set,
                          std::span<const std::size_t> batch, const PolicyParams& snapshot,
                          const PolicyParams& reference, const GrpoConfig& cfg,
                          const RewardConfig& reward_cfg, std::uint64_t iteration) {
  const int workers = std::min<int>(cfg.threads, static_cast<int>(batch.size()));
  if (workers <= 1) {
    for (std::size_t g = 0; g < batch.size(); ++g) {
      groups[g] = sample_rollout_group(snapshot, reference, rl_set[batch[g]], cfg, reward_cfg,
                                       iteration);
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t g = w; g < batch.size(); g += workers) {
        groups[g] = sample_rollout_group(snapshot, reference, rl_set[batch[g]], cfg, reward_cfg,
                                         iteration);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

MetricsRow summarize(int iteration, std::span<const RolloutGroup> groups) {
  MetricsRow row;
  row.iteration = iteration;
  std::size_t count = 0;
  for (const RolloutGroup& group : groups) {
    for (int i = 0; i < group.size(); ++i) {
      const RewardVector& rv = group.rewards[i];
      row.mean_total_reward += rv.total;
      row.mean_r_format += rv.format;
      row.mean_r_json += rv.json;
      row.mean_r_acc += rv.accuracy;
      row.mean_r_agentic += rv.agentic;
      row.accuracy += rv.accuracy == 1.0 ? 1.0 : 0.0;
      row.format_rate += rv.format;
      row.mean_kl += kl_k3(group.logp_old[i], group.logp_ref[i]);
      ++count;
    }
  }
  const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
  row.mean_total_reward *= inv;
  row.mean_r_format *= inv;
  row.mean_r_json *= inv;
  row.mean_r_acc *= inv;
  row.mean_r_agentic *= inv;
  row.accuracy *= inv;
  row.format_rate *= inv;
  row.mean_kl *= inv;
  return row;
}

}  // namespace

TrainResult run_training(std::span<const LabeledInstance> rl_set, const PolicyParams& init,
                         const PolicyParams& reference, const GrpoConfig& cfg,
                         const RewardConfig& reward_cfg) {
  validate_grpo_config(cfg);
  if (rl_set.empty()) throw Error(ErrorCode::invalid_argument, "empty RL set");

  TrainResult result;
  result.params = init;
  result.metrics.reserve(cfg.iterations);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    const PolicyParams snapshot = result.params;  // theta_old for this iteration
    const std::vector<std::size_t> batch =
        pick_batch(rl_set.size(), cfg.batch_size, cfg.seed, static_cast<std::uint64_t>(iter));

    std::vector<RolloutGroup> groups(batch.size());
    fill_groups_parallel(groups, rl_set, batch, snapshot, reference, cfg, reward_cfg,
                         static_cast<std::uint64_t>(iter));

    result.metrics.push_back(summarize(iter, groups));

    try {
      result.params = grpo_step(snapshot, groups, cfg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::training) {
        throw Error(ErrorCode::training,
                    std::string(e.what()) + " (iteration " + std::to_string(iter) + ")");
      }
      throw;
    }
  }
  return result;
}

}  // namespace vrl
