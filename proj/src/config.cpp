#include "vrl/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vrl/dataset.hpp"
#include "vrl/error.hpp"
#include "vrl/rng.hpp"

namespace vrl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::config,
              "invalid value for " + std::string(key) + ": '" + std::string(value) + "'");
}

// One settable field: string-in, string-out accessors over a RunConfig.
struct Field {
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

Field int_field(std::function<int&(RunConfig&)> ref) {
  return Field{
      [ref](RunConfig& cfg, std::string_view key, std::string_view value) {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
        ref(cfg) = v;
      },
      [ref](const RunConfig& cfg) { return std::to_string(ref(const_cast<RunConfig&>(cfg))); }};
}

Field u64_field(std::function<std::uint64_t&(RunConfig&)> ref) {
  return Field{
      [ref](RunConfig& cfg, std::string_view key, std::string_view value) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
        ref(cfg) = v;
      },
      [ref](const RunConfig& cfg) { return std::to_string(ref(const_cast<RunConfig&>(cfg))); }};
}

Field double_field(std::function<double&(RunConfig&)> ref) {
  return Field{
      [ref](RunConfig& cfg, std::string_view key, std::string_view value) {
        const std::string buf(value);
        char* end = nullptr;
        const double v = std::strtod(buf.c_str(), &end);
        if (end != buf.c_str() + buf.size() || buf.empty()) bad_value(key, value);
        ref(cfg) = v;
      },
      [ref](const RunConfig& cfg) { return format_double(ref(const_cast<RunConfig&>(cfg))); }};
}

Field string_field(std::function<std::string&(RunConfig&)> ref) {
  return Field{
      [ref](RunConfig& cfg, std::string_view, std::string_view value) {
        ref(cfg) = std::string(value);
      },
      [ref](const RunConfig& cfg) { return ref(const_cast<RunConfig&>(cfg)); }};
}

Field fence_scope_field() {
  return Field{
      [](RunConfig& cfg, std::string_view key, std::string_view value) {
        if (value == "completion") {
          cfg.rewards.fence_scope = FenceScope::completion;
        } else if (value == "answer") {
          cfg.rewards.fence_scope = FenceScope::answer;
        } else {
          bad_value(key, value);
        }
      },
      [](const RunConfig& cfg) {
        return std::string(cfg.rewards.fence_scope == FenceScope::completion ? "completion"
                                                                             : "answer");
      }};
}

// Ordered: serialization follows this layout.
const std::vector<std::pair<std::string, Field>>& field_table() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    auto add = [&t](const char* key, Field f) { t.emplace_back(key, std::move(f)); };

    add("dataset.source", string_field([](RunConfig& c) -> std::string& { return c.dataset.source; }));
    add("dataset.n", int_field([](RunConfig& c) -> int& { return c.dataset.n; }));
    add("dataset.d", int_field([](RunConfig& c) -> int& { return c.dataset.d; }));
    add("dataset.seed", u64_field([](RunConfig& c) -> std::uint64_t& { return c.dataset.seed; }));
    add("dataset.heldout_n",
        int_field([](RunConfig& c) -> int& { return c.dataset.heldout_n; }));
    add("dataset.path", string_field([](RunConfig& c) -> std::string& { return c.dataset.path; }));
    add("dataset.heldout_path",
        string_field([](RunConfig& c) -> std::string& { return c.dataset.heldout_path; }));

    add("sft.fraction", double_field([](RunConfig& c) -> double& { return c.sft.fraction; }));
    add("sft.epochs", int_field([](RunConfig& c) -> int& { return c.sft.epochs; }));
    add("sft.learning_rate",
        double_field([](RunConfig& c) -> double& { return c.sft.learning_rate; }));

    add("grpo.group_size", int_field([](RunConfig& c) -> int& { return c.grpo.group_size; }));
    add("grpo.clip_epsilon",
        double_field([](RunConfig& c) -> double& { return c.grpo.clip_epsilon; }));
    add("grpo.kl_beta", double_field([](RunConfig& c) -> double& { return c.grpo.kl_beta; }));
    add("grpo.learning_rate",
        double_field([](RunConfig& c) -> double& { return c.grpo.learning_rate; }));
    add("grpo.iterations",
        int_field([](RunConfig& c) -> int& { return c.grpo.iterations; }));
    add("grpo.batch_size",
        int_field([](RunConfig& c) -> int& { return c.grpo.batch_size; }));
    add("grpo.seed", u64_field([](RunConfig& c) -> std::uint64_t& { return c.grpo.seed; }));
    add("grpo.threads", int_field([](RunConfig& c) -> int& { return c.grpo.threads; }));

    add("rewards.w_format",
        double_field([](RunConfig& c) -> double& { return c.rewards.weights.format; }));
    add("rewards.w_json",
        double_field([](RunConfig& c) -> double& { return c.rewards.weights.json; }));
    add("rewards.w_acc",
        double_field([](RunConfig& c) -> double& { return c.rewards.weights.accuracy; }));
    add("rewards.w_agentic",
        double_field([](RunConfig& c) -> double& { return c.rewards.weights.agentic; }));
    add("rewards.bce_epsilon",
        double_field([](RunConfig& c) -> double& { return c.rewards.bce_epsilon; }));
    add("rewards.fence_scope", fence_scope_field());

    add("agents.mode", string_field([](RunConfig& c) -> std::string& { return c.agents.mode; }));
    add("agents.semantic_path",
        string_field([](RunConfig& c) -> std::string& { return c.agents.semantic_path; }));
    add("agents.frequency_path",
        string_field([](RunConfig& c) -> std::string& { return c.agents.frequency_path; }));
    add("agents.dual_path",
        string_field([](RunConfig& c) -> std::string& { return c.agents.dual_path; }));

    add("output.dir", string_field([](RunConfig& c) -> std::string& { return c.output.dir; }));
    return t;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& [name, field] : field_table()) {
    if (name == key) return &field;
  }
  return nullptr;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v = trim(line);
    if (v.empty() || v.front() == '#') continue;

    if (v.front() == '[') {
      if (v.back() != ']') {
        throw Error(ErrorCode::config, "line " + std::to_string(line_no) + ": malformed section");
      }
      section = std::string(trim(v.substr(1, v.size() - 2)));
      continue;
    }

    const auto eq = v.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key =
        (section.empty() ? "" : section + ".") + std::string(trim(v.substr(0, eq)));
    const std::string_view value = trim(v.substr(eq + 1));
    set_config_value(cfg, key, value);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& [key, field] : field_table()) {
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + field.get(cfg) + "\n";
  }
  return out;
}

void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write config file: " + path);
  out << serialize_config(cfg);
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const Field* field = find_field(key);
  if (!field) throw Error(ErrorCode::config, "unknown config key: " + std::string(key));
  field->set(cfg, key, value);
}

std::optional<std::string> get_config_value(const RunConfig& cfg, std::string_view key) {
  const Field* field = find_field(key);
  if (!field) return std::nullopt;
  return field->get(cfg);
}

void validate_config(const RunConfig& cfg) {
  if (cfg.dataset.source != "synthetic" && cfg.dataset.source != "file") {
    throw Error(ErrorCode::config, "dataset.source must be 'synthetic' or 'file'");
  }
  if (cfg.dataset.source == "synthetic") {
    if (cfg.dataset.n <= 0 || cfg.dataset.n % 2 != 0) {
      throw Error(ErrorCode::config, "dataset.n must be positive and even");
    }
    if (cfg.dataset.heldout_n < 0 || cfg.dataset.heldout_n % 2 != 0) {
      throw Error(ErrorCode::config, "dataset.heldout_n must be non-negative and even");
    }
    if (cfg.dataset.d < 1) throw Error(ErrorCode::config, "dataset.d must be >= 1");
  } else {
    if (cfg.dataset.path.empty()) {
      throw Error(ErrorCode::config, "dataset.path is required when dataset.source = file");
    }
  }
  if (!(cfg.sft.fraction >= 0.0 && cfg.sft.fraction <= 1.0)) {
    throw Error(ErrorCode::config, "sft.fraction must be in [0,1]");
  }
  if (cfg.sft.epochs < 0) throw Error(ErrorCode::config, "sft.epochs must be >= 0");
  if (!(cfg.sft.learning_rate > 0.0)) {
    throw Error(ErrorCode::config, "sft.learning_rate must be > 0");
  }
  validate_grpo_config(cfg.grpo);

  const RewardWeights& w = cfg.rewards.weights;
  if (w.format < 0.0 || w.json < 0.0 || w.accuracy < 0.0 || w.agentic < 0.0) {
    throw Error(ErrorCode::config, "rewards.w_* must be non-negative");
  }
  if (w.format + w.json + w.accuracy + w.agentic <= 0.0) {
    throw Error(ErrorCode::config, "at least one reward weight must be positive");
  }
  if (!(cfg.rewards.bce_epsilon > 0.0 && cfg.rewards.bce_epsilon < 0.5)) {
    throw Error(ErrorCode::config, "rewards.bce_epsilon must be in (0, 0.5)");
  }

  if (cfg.agents.mode != "synthetic" && cfg.agents.mode != "ingested") {
    throw Error(ErrorCode::config, "agents.mode must be 'synthetic' or 'ingested'");
  }
  if (cfg.agents.mode == "ingested") {
    if (cfg.agents.semantic_path.empty()) {
      throw Error(ErrorCode::config, "agents.semantic_path is required in ingested mode");
    }
    if (cfg.agents.frequency_path.empty()) {
      throw Error(ErrorCode::config, "agents.frequency_path is required in ingested mode");
    }
    if (cfg.agents.dual_path.empty()) {
      throw Error(ErrorCode::config, "agents.dual_path is required in ingested mode");
    }
  }
  if (cfg.output.dir.empty()) throw Error(ErrorCode::config, "output.dir must be set");
}

std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(serialize_config(cfg));
}

}  // namespace vrl
