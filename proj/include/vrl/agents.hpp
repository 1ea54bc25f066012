#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrl/dataset.hpp"

namespace vrl {

enum class AgentKind { semantic, frequency, dual_stream };

const char* agent_kind_name(AgentKind kind);

// Uniform interface over the per-perspective detectors. Implementations are
// deterministic: the same (agent, instance) always yields the same value.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual AgentKind kind() const = 0;
  // Probability in [0,1] that the instance is AI-generated.
  virtual double query(const LabeledInstance& instance) const = 0;
};

// Synthetic oracle: a tempered sigmoid of the hidden score w*.x shared with
// the dataset generator. Lower temperature means sharper opinions; the offset
// makes the three perspectives disagree near the boundary.
class SyntheticAgent : public Agent {
 public:
  SyntheticAgent(AgentKind kind, std::vector<double> direction, double temperature,
                 double offset);

  AgentKind kind() const override { return kind_; }
  double query(const LabeledInstance& instance) const override;
  double query_score(double score) const;

 private:
  AgentKind kind_;
  std::vector<double> direction_;
  double temperature_;
  double offset_;
};

// Probabilities ingested from a JSONL file of {"instance_id": ..., "prob": ...}
// records, for plugging in externally computed detector outputs.
class AgentStore {
 public:
  AgentStore() = default;

  std::size_t size() const { return probs_.size(); }
  bool contains(const std::string& instance_id) const { return probs_.count(instance_id) > 0; }
  double at(const std::string& instance_id) const;  // throws on missing record

  friend AgentStore ingest_agent_file(const std::string& path, AgentKind kind);

 private:
  std::unordered_map<std::string, double> probs_;
};

// Validates probability range and id uniqueness; errors carry line numbers.
AgentStore ingest_agent_file(const std::string& path, AgentKind kind);

class StoredAgent : public Agent {
 public:
  StoredAgent(AgentKind kind, AgentStore store) : kind_(kind), store_(std::move(store)) {}

  AgentKind kind() const override { return kind_; }
  double query(const LabeledInstance& instance) const override;

 private:
  AgentKind kind_;
  AgentStore store_;
};

// The three perspectives bundled in fixed key order:
// semantic -> prob_semantic, frequency -> prob_frequency, dual -> prob_dual.
class AgentSet {
 public:
  AgentSet(std::unique_ptr<Agent> semantic, std::unique_ptr<Agent> frequency,
           std::unique_ptr<Agent> dual);

  AgentOpinions opinions(const LabeledInstance& instance) const;

 private:
  std::unique_ptr<Agent> semantic_;
  std::unique_ptr<Agent> frequency_;
  std::unique_ptr<Agent> dual_;
};

struct SyntheticAgentParams {
  double temperature = 0.1;
  double offset = 0.0;
};

// Defaults calibrated so most opinions are confident (low entropy) while the
// three perspectives stay visibly distinct.
inline constexpr SyntheticAgentParams kDefaultSemanticParams{0.10, 0.0};
inline constexpr SyntheticAgentParams kDefaultFrequencyParams{0.07, 0.25};
inline constexpr SyntheticAgentParams kDefaultDualParams{0.13, -0.25};

// Hidden linear ground truth shared by labels and the synthetic agents:
// label = 1 iff w*.x > 0 for a unit direction w* derived from the seed.
class SyntheticWorld {
 public:
  SyntheticWorld(std::uint64_t seed, int dim);

  const std::vector<double>& direction() const { return direction_; }
  double score(std::span<const double> features) const;

  AgentSet make_agents() const;

  // Balanced dataset: exactly n/2 per class (n must be even), features drawn
  // from a standard spherical Gaussian, rebalanced by rejection. `stream`
  // selects independent draws (train vs held-out) from the same world.
  std::vector<LabeledInstance> make_dataset(int n, std::uint64_t stream = 0) const;

 private:
  std::uint64_t seed_;
  std::vector<double> direction_;
};

std::vector<LabeledInstance> make_synthetic_dataset(int n, int dim, std::uint64_t seed);

}  // namespace vrl
