#include "vrl/agents.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "vrl/error.hpp"
#include "vrl/rng.hpp"

namespace vrl {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

const char* agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::semantic: return "semantic";
    case AgentKind::frequency: return "frequency";
    case AgentKind::dual_stream: return "dual_stream";
  }
  return "unknown";
}

SyntheticAgent::SyntheticAgent(AgentKind kind, std::vector<double> direction, double temperature,
                               double offset)
    : kind_(kind), direction_(std::move(direction)), temperature_(temperature), offset_(offset) {
  if (temperature_ <= 0.0) throw Error(ErrorCode::invalid_argument, "temperature must be > 0");
}

double SyntheticAgent::query(const LabeledInstance& instance) const {
  if (instance.features.size() != direction_.size()) {
    throw Error(ErrorCode::invalid_argument,
                "feature dimension mismatch for agent " + std::string(agent_kind_name(kind_)));
  }
  return query_score(dot(direction_, instance.features));
}

double SyntheticAgent::query_score(double score) const {
  return sigmoid(score / temperature_ + offset_);
}

double AgentStore::at(const std::string& instance_id) const {
  auto it = probs_.find(instance_id);
  if (it == probs_.end()) {
    throw Error(ErrorCode::data, "missing agent record for instance " + instance_id);
  }
  return it->second;
}

AgentStore ingest_agent_file(const std::string& path, AgentKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open agent file: " + path);

  AgentStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where =
        path + ":" + std::to_string(line_no) + " (" + agent_kind_name(kind) + ")";

    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorCode::data, where + ": invalid JSON");
    }
    if (!doc.contains("instance_id") || !doc["instance_id"].is_string()) {
      throw Error(ErrorCode::data, where + ": missing string instance_id");
    }
    if (!doc.contains("prob") || !doc["prob"].is_number()) {
      throw Error(ErrorCode::data, where + ": missing numeric prob");
    }
    const std::string id = doc["instance_id"].get<std::string>();
    const double prob = doc["prob"].get<double>();
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw Error(ErrorCode::data, where + ": prob out of [0,1]");
    }
    if (!store.probs_.emplace(id, prob).second) {
      throw Error(ErrorCode::data, where + ": duplicate instance_id " + id);
    }
  }
  return store;
}

double StoredAgent::query(const LabeledInstance& instance) const {
  if (!store_.contains(instance.id)) {
    throw Error(ErrorCode::data, std::string("missing ") + agent_kind_name(kind_) +
                                     " agent record for instance " + instance.id);
  }
  return store_.at(instance.id);
}

AgentSet::AgentSet(std::unique_ptr<Agent> semantic, std::unique_ptr<Agent> frequency,
                   std::unique_ptr<Agent> dual)
    : semantic_(std::move(semantic)), frequency_(std::move(frequency)), dual_(std::move(dual)) {}

AgentOpinions AgentSet::opinions(const LabeledInstance& instance) const {
  AgentOpinions out;
  out.semantic = semantic_->query(instance);
  out.frequency = frequency_->query(instance);
  out.dual = dual_->query(instance);
  return out;
}

SyntheticWorld::SyntheticWorld(std::uint64_t seed, int dim) : seed_(seed) {
  if (dim < 1) throw Error(ErrorCode::invalid_argument, "feature dimension must be >= 1");
  Rng rng(mix_seed(seed, 0x77u));
  direction_.resize(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    double sq = 0.0;
    for (double& w : direction_) {
      w = rng.normal();
      sq += w * w;
    }
    norm = std::sqrt(sq);
  }
  for (double& w : direction_) w /= norm;
}

double SyntheticWorld::score(std::span<const double> features) const {
  return dot(direction_, features);
}

AgentSet SyntheticWorld::make_agents() const {
  return AgentSet(
      std::make_unique<SyntheticAgent>(AgentKind::semantic, direction_,
                                       kDefaultSemanticParams.temperature,
                                       kDefaultSemanticParams.offset),
      std::make_unique<SyntheticAgent>(AgentKind::frequency, direction_,
                                       kDefaultFrequencyParams.temperature,
                                       kDefaultFrequencyParams.offset),
      std::make_unique<SyntheticAgent>(AgentKind::dual_stream, direction_,
                                       kDefaultDualParams.temperature, kDefaultDualParams.offset));
}

std::vector<LabeledInstance> SyntheticWorld::make_dataset(int n, std::uint64_t stream) const {
  if (n <= 0 || n % 2 != 0) {
    throw Error(ErrorCode::invalid_argument, "dataset size must be positive and even");
  }
  const int per_class = n / 2;
  const AgentSet agents = make_agents();
  Rng rng(mix_seed(seed_, 0xD5u, stream));

  std::vector<LabeledInstance> out;
  out.reserve(n);
  int count[2] = {0, 0};
  std::size_t serial = 0;
  while (static_cast<int>(out.size()) < n) {
    LabeledInstance inst;
    inst.features.resize(direction_.size());
    for (double& f : inst.features) f = rng.normal();
    inst.label = score(inst.features) > 0.0 ? 1 : 0;
    if (count[inst.label] >= per_class) continue;  // rejection keeps classes balanced

    char id[32];
    std::snprintf(id, sizeof(id), "i%llu-%06zu", static_cast<unsigned long long>(stream),
                  serial++);
    inst.id = id;
    inst.agent_gt = agents.opinions(inst);
    ++count[inst.label];
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<LabeledInstance> make_synthetic_dataset(int n, int dim, std::uint64_t seed) {
  return SyntheticWorld(seed, dim).make_dataset(n);
}

}  // namespace vrl
