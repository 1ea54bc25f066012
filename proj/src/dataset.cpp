#include "vrl/dataset.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "vrl/error.hpp"

namespace vrl {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  if (std::strtod(buf, nullptr) != v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
  }
  return buf;
}

namespace {

double read_prob(const nlohmann::json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw Error(ErrorCode::data, where + ": missing or non-numeric " + key);
  }
  const double p = obj[key].get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::data, where + ": " + key + " out of [0,1]");
  }
  return p;
}

}  // namespace

std::vector<LabeledInstance> load_instances_jsonl(const std::string& path, bool require_agent_gt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open dataset file: " + path);

  std::vector<LabeledInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);

    const nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorCode::data, where + ": invalid JSON");
    }

    LabeledInstance inst;
    if (!doc.contains("id") || !doc["id"].is_string()) {
      throw Error(ErrorCode::data, where + ": missing string id");
    }
    inst.id = doc["id"].get<std::string>();

    if (!doc.contains("features") || !doc["features"].is_array()) {
      throw Error(ErrorCode::data, where + ": missing features array");
    }
    for (const auto& f : doc["features"]) {
      if (!f.is_number()) throw Error(ErrorCode::data, where + ": non-numeric feature");
      inst.features.push_back(f.get<double>());
    }

    if (!doc.contains("label") || !doc["label"].is_number_integer()) {
      throw Error(ErrorCode::data, where + ": missing integer label");
    }
    inst.label = doc["label"].get<int>();
    if (inst.label != 0 && inst.label != 1) {
      throw Error(ErrorCode::data, where + ": label must be 0 or 1");
    }

    if (doc.contains("agent_gt")) {
      const nlohmann::json& gt = doc["agent_gt"];
      if (!gt.is_object()) throw Error(ErrorCode::data, where + ": agent_gt must be an object");
      inst.agent_gt.semantic = read_prob(gt, "prob_semantic", where);
      inst.agent_gt.frequency = read_prob(gt, "prob_frequency", where);
      inst.agent_gt.dual = read_prob(gt, "prob_dual", where);
    } else if (require_agent_gt) {
      throw Error(ErrorCode::data, where + ": missing agent_gt");
    }

    out.push_back(std::move(inst));
  }
  return out;
}

void save_instances_jsonl(const std::string& path, const std::vector<LabeledInstance>& instances) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write dataset file: " + path);

  for (const LabeledInstance& inst : instances) {
    std::ostringstream line;
    line << "{\"id\":" << nlohmann::json(inst.id).dump() << ",\"features\":[";
    for (std::size_t i = 0; i < inst.features.size(); ++i) {
      if (i) line << ",";
      line << format_double(inst.features[i]);
    }
    line << "],\"label\":" << inst.label << ",\"agent_gt\":{\"prob_semantic\":"
         << format_double(inst.agent_gt.semantic)
         << ",\"prob_frequency\":" << format_double(inst.agent_gt.frequency)
         << ",\"prob_dual\":" << format_double(inst.agent_gt.dual) << "}}";
    out << line.str() << "\n";
  }
  if (!out) throw Error(ErrorCode::io, "write failed: " + path);
}

}  // namespace vrl
