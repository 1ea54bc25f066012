#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "vrl/grpo.hpp"

namespace vrl {

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | file
  int n = 2000;
  int d = 8;
  std::uint64_t seed = 7;
  int heldout_n = 500;
  std::string path;          // instance JSONL when source = file
  std::string heldout_path;  // optional held-out instance JSONL
};

struct SftConfig {
  double fraction = 0.2;      // share of the training set used for cold start
  int epochs = 150;           // full-batch passes (58 iterations at full scale)
  double learning_rate = 0.5; // sized for the toy policy (5e-6 at full scale)
};

struct AgentsConfig {
  std::string mode = "synthetic";  // synthetic | ingested
  std::string semantic_path;
  std::string frequency_path;
  std::string dual_path;
};

struct OutputConfig {
  std::string dir = "runs/default";
};

struct RunConfig {
  DatasetConfig dataset;
  SftConfig sft;
  GrpoConfig grpo;
  RewardConfig rewards;
  AgentsConfig agents;
  OutputConfig output;
};

// INI-style sections with key = value lines; '#' starts a comment.
// parse_config applies values over the defaults and rejects unknown keys;
// serialize_config emits the canonical form, which round-trips losslessly.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);
void save_config(const RunConfig& cfg, const std::string& path);

// Field-path-qualified validation ("grpo.group_size must be >= 2", ...).
void validate_config(const RunConfig& cfg);

// Set/get one value by dotted key, e.g. "grpo.seed". Setters reject unknown
// keys and unparseable values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
std::optional<std::string> get_config_value(const RunConfig& cfg, std::string_view key);

// FNV-1a hash of the canonical serialization; embedded in checkpoints.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace vrl
