#pragma once

#include <string_view>

#include "vrl/report.hpp"

namespace vrl {

// Ground-truth per-instance probabilities from the three expert
// perspectives, keyed prob_semantic / prob_frequency / prob_dual.
struct AgentOpinions {
  double semantic = 0.0;
  double frequency = 0.0;
  double dual = 0.0;
  bool operator==(const AgentOpinions&) const = default;
};

struct RewardWeights {
  double format = 1.0;
  double json = 1.0;
  double accuracy = 1.0;
  double agentic = 1.0;
};

// Where the ```json fence is searched for by the JSON reward: the whole
// completion (default) or only inside the answer block.
enum class FenceScope { completion, answer };

struct RewardConfig {
  RewardWeights weights;
  double bce_epsilon = 1e-7;
  FenceScope fence_scope = FenceScope::completion;
};

struct RewardVector {
  double format = 0.0;     // {0, 1}
  double json = 0.0;       // {0, 1}
  double accuracy = 0.0;   // {-1, 0, 1}
  double agentic = 0.0;    // -1 on parse failure, 0 on wrong verdict, else (0,1]
  double total = 0.0;
};

// 1.0 iff the completion matches the think/answer envelope.
double reward_format(std::string_view completion);

// 1.0 iff a non-empty ```json fence exists in scope and its contents parse
// as JSON. Only the first fence is considered; schema validity is not
// required here.
double reward_json(std::string_view completion, FenceScope scope = FenceScope::completion);

// -1.0 if post-processing fails at any stage, 1.0 if the parsed verdict
// matches the label (0 = REAL, 1 = AI-GENERATED), 0.0 otherwise.
double reward_accuracy(std::string_view completion, int label);

// -(t*ln(max(p,eps)) + (1-t)*ln(max(1-p,eps))); the clamp guards log(0)
// at hard predictions.
double binary_cross_entropy(double predicted, double target, double eps = 1e-7);

// -1.0 on parse failure, 0.0 on wrong verdict, else exp(-L) with L the mean
// of the three specialist BCE losses against the ground-truth opinions.
double reward_agentic(std::string_view completion, int label, const AgentOpinions& gt,
                      double bce_eps = 1e-7);

// All four components, computed independently, plus the weighted total.
RewardVector score_completion(std::string_view completion, int label, const AgentOpinions& gt,
                              const RewardConfig& cfg = {});

}  // namespace vrl
