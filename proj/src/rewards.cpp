#include "vrl/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace vrl {

double reward_format(std::string_view completion) {
  return extract_think_answer(completion).ok() ? 1.0 : 0.0;
}

double reward_json(std::string_view completion, FenceScope scope) {
  std::string_view haystack = completion;
  std::string answer;
  if (scope == FenceScope::answer) {
    auto blocks = extract_think_answer(completion);
    if (!blocks.ok()) return 0.0;
    answer = std::move(blocks.value.answer);
    haystack = answer;
  }
  auto fence = extract_json_fence(haystack);
  if (!fence.ok()) return 0.0;
  return nlohmann::json::parse(fence.value, nullptr, false).is_discarded() ? 0.0 : 1.0;
}

double reward_accuracy(std::string_view completion, int label) {
  auto parsed = post_process(completion);
  if (!parsed.ok()) return -1.0;
  return parsed.value.verdict == label ? 1.0 : 0.0;
}

double binary_cross_entropy(double predicted, double target, double eps) {
  const double p = std::log(std::max(predicted, eps));
  const double q = std::log(std::max(1.0 - predicted, eps));
  return -(target * p + (1.0 - target) * q);
}

double reward_agentic(std::string_view completion, int label, const AgentOpinions& gt,
                      double bce_eps) {
  auto parsed = post_process(completion);
  if (!parsed.ok()) return -1.0;
  if (parsed.value.verdict != label) return 0.0;

  const SpecialistProbs& pred = parsed.value.report.specialist;
  const double loss = (binary_cross_entropy(pred.semantic, gt.semantic, bce_eps) +
                       binary_cross_entropy(pred.frequency, gt.frequency, bce_eps) +
                       binary_cross_entropy(pred.dual, gt.dual, bce_eps)) /
                      3.0;
  return std::exp(-loss);
}

RewardVector score_completion(std::string_view completion, int label, const AgentOpinions& gt,
                              const RewardConfig& cfg) {
  RewardVector rv;
  rv.format = reward_format(completion);
  rv.json = reward_json(completion, cfg.fence_scope);
  rv.accuracy = reward_accuracy(completion, label);
  rv.agentic = reward_agentic(completion, label, gt, cfg.bce_epsilon);
  rv.total = cfg.weights.format * rv.format + cfg.weights.json * rv.json +
             cfg.weights.accuracy * rv.accuracy + cfg.weights.agentic * rv.agentic;
  return rv;
}

}  // namespace vrl
