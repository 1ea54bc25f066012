#pragma once

#include <string>
#include <vector>

#include "vrl/rewards.hpp"

namespace vrl {

// One sample: an "image" abstracted to a feature vector, its binary label
// (0 = real, 1 = AI-generated) and the ground-truth expert probabilities.
struct LabeledInstance {
  std::string id;
  std::vector<double> features;
  int label = 0;
  AgentOpinions agent_gt{};
};

// JSONL, one instance per line:
//   {"id": "...", "features": [...], "label": 0|1,
//    "agent_gt": {"prob_semantic": p, "prob_frequency": p, "prob_dual": p}}
// agent_gt may be omitted only when require_agent_gt is false (ingested-agent
// workflows fill it afterwards). Errors carry line numbers.
std::vector<LabeledInstance> load_instances_jsonl(const std::string& path,
                                                  bool require_agent_gt = true);
void save_instances_jsonl(const std::string& path, const std::vector<LabeledInstance>& instances);

// Deterministic decimal formatting that parses back to the same double.
std::string format_double(double v);

}  // namespace vrl
