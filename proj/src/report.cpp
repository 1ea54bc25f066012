#include "vrl/report.hpp"

#include <array>
#include <cstdio>

#include "json.hpp"

namespace vrl {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kTags[] = {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose};

constexpr std::string_view kWhitespace = " \t\r\n\v\f";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWhitespace);
  return s.substr(first, last - first + 1);
}

// Position of the first occurrence of any tag token at or after `from`,
// along with which token it was.
struct TagHit {
  std::size_t pos = std::string_view::npos;
  std::string_view tag;
};

TagHit find_first_tag(std::string_view s, std::size_t from) {
  TagHit hit;
  for (std::string_view tag : kTags) {
    const auto p = s.find(tag, from);
    if (p != std::string_view::npos && p < hit.pos) {
      hit.pos = p;
      hit.tag = tag;
    }
  }
  return hit;
}

// JSON-escapes a string (via the JSON library) including the quotes.
std::string json_quote(std::string_view s) {
  return nlohmann::json(std::string(s)).dump();
}

std::string format_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", p);
  return buf;
}

}  // namespace

std::string_view verdict_label(Verdict v) {
  return v == Verdict::real ? kVerdictRealLabel : kVerdictAiLabel;
}

std::optional<Verdict> verdict_from_label(std::string_view label) {
  if (label == kVerdictRealLabel) return Verdict::real;
  if (label == kVerdictAiLabel) return Verdict::ai_generated;
  return std::nullopt;
}

const char* parse_status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::ok: return "ok";
    case ParseStatus::format_mismatch: return "format_mismatch";
    case ParseStatus::no_fence: return "no_fence";
    case ParseStatus::parse_error: return "parse_error";
    case ParseStatus::schema_error: return "schema_error";
  }
  return "unknown";
}

Parsed<ThinkAnswer> extract_think_answer(std::string_view completion) {
  using R = Parsed<ThinkAnswer>;
  const std::string_view s = trim(completion);

  if (s.substr(0, kThinkOpen.size()) != kThinkOpen) return R::failure(ParseStatus::format_mismatch);
  std::size_t pos = kThinkOpen.size();

  // The next tag token must be the matching close; anything else means a
  // stray or nested tag inside the think block.
  TagHit hit = find_first_tag(s, pos);
  if (hit.pos == std::string_view::npos || hit.tag != kThinkClose) {
    return R::failure(ParseStatus::format_mismatch);
  }
  std::string think(s.substr(pos, hit.pos - pos));
  pos = hit.pos + kThinkClose.size();

  // Only whitespace between the blocks.
  const auto answer_start = s.find_first_not_of(kWhitespace, pos);
  if (answer_start == std::string_view::npos ||
      s.substr(answer_start, kAnswerOpen.size()) != kAnswerOpen) {
    return R::failure(ParseStatus::format_mismatch);
  }
  pos = answer_start + kAnswerOpen.size();

  hit = find_first_tag(s, pos);
  if (hit.pos == std::string_view::npos || hit.tag != kAnswerClose) {
    return R::failure(ParseStatus::format_mismatch);
  }
  std::string answer(s.substr(pos, hit.pos - pos));
  pos = hit.pos + kAnswerClose.size();

  // Nothing may follow the answer block (the view is already trimmed).
  if (pos != s.size()) return R::failure(ParseStatus::format_mismatch);

  return R{ParseStatus::ok, ThinkAnswer{std::move(think), std::move(answer)}};
}

Parsed<std::string> extract_json_fence(std::string_view text) {
  using R = Parsed<std::string>;
  constexpr std::string_view kOpen = "```json";
  constexpr std::string_view kClose = "```";

  const auto open = text.find(kOpen);
  if (open == std::string_view::npos) return R::failure(ParseStatus::no_fence);
  const auto body_start = open + kOpen.size();
  const auto close = text.find(kClose, body_start);
  if (close == std::string_view::npos) return R::failure(ParseStatus::no_fence);

  const std::string_view body = trim(text.substr(body_start, close - body_start));
  if (body.empty()) return R::failure(ParseStatus::no_fence);
  return R{ParseStatus::ok, std::string(body)};
}

Parsed<PipelineReport> parse_report(std::string_view json_text) {
  using R = Parsed<PipelineReport>;
  const nlohmann::json doc = nlohmann::json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) return R::failure(ParseStatus::parse_error);
  if (!doc.is_object()) return R::failure(ParseStatus::schema_error);

  PipelineReport report;

  // Optional free-text steps; wrong type is a schema violation.
  const std::array<std::pair<const char*, std::string*>, 3> steps = {{
      {"initial_scan", &report.initial_scan},
      {"detailed_observation", &report.detailed_observation},
      {"technical_analysis", &report.technical_analysis},
  }};
  for (const auto& [key, out] : steps) {
    if (!doc.contains(key)) continue;
    if (!doc[key].is_string()) return R::failure(ParseStatus::schema_error);
    *out = doc[key].get<std::string>();
  }

  if (!doc.contains("specialist_analysis") || !doc["specialist_analysis"].is_object()) {
    return R::failure(ParseStatus::schema_error);
  }
  const nlohmann::json& spec = doc["specialist_analysis"];
  const std::array<std::pair<const char*, double*>, 3> probs = {{
      {"prob_semantic", &report.specialist.semantic},
      {"prob_frequency", &report.specialist.frequency},
      {"prob_dual", &report.specialist.dual},
  }};
  for (const auto& [key, out] : probs) {
    if (!spec.contains(key) || !spec[key].is_number()) return R::failure(ParseStatus::schema_error);
    const double p = spec[key].get<double>();
    if (!(p >= 0.0 && p <= 1.0)) return R::failure(ParseStatus::schema_error);
    *out = p;
  }

  if (!doc.contains("final_verdict") || !doc["final_verdict"].is_object()) {
    return R::failure(ParseStatus::schema_error);
  }
  const nlohmann::json& fv = doc["final_verdict"];
  if (!fv.contains("verdict") || !fv["verdict"].is_string()) {
    return R::failure(ParseStatus::schema_error);
  }
  const auto verdict = verdict_from_label(fv["verdict"].get<std::string>());
  if (!verdict) return R::failure(ParseStatus::schema_error);
  report.final_verdict.verdict = *verdict;
  if (fv.contains("reasoning")) {
    if (!fv["reasoning"].is_string()) return R::failure(ParseStatus::schema_error);
    report.final_verdict.reasoning = fv["reasoning"].get<std::string>();
  }

  return R{ParseStatus::ok, std::move(report)};
}

Parsed<ParsedVerdict> post_process(std::string_view completion) {
  using R = Parsed<ParsedVerdict>;
  auto blocks = extract_think_answer(completion);
  if (!blocks.ok()) return R::failure(blocks.status);

  auto fence = extract_json_fence(blocks.value.answer);
  if (!fence.ok()) return R::failure(fence.status);

  auto report = parse_report(fence.value);
  if (!report.ok()) return R::failure(report.status);

  ParsedVerdict out;
  out.verdict = static_cast<int>(report.value.final_verdict.verdict);
  out.report = std::move(report.value);
  out.think_text = std::move(blocks.value.think);
  return R{ParseStatus::ok, std::move(out)};
}

std::string render_report_json(const PipelineReport& report) {
  std::string out;
  out.reserve(512);
  out += "{\n";
  out += "  \"initial_scan\": " + json_quote(report.initial_scan) + ",\n";
  out += "  \"detailed_observation\": " + json_quote(report.detailed_observation) + ",\n";
  out += "  \"technical_analysis\": " + json_quote(report.technical_analysis) + ",\n";
  out += "  \"specialist_analysis\": {\n";
  out += "    \"prob_semantic\": " + format_prob(report.specialist.semantic) + ",\n";
  out += "    \"prob_frequency\": " + format_prob(report.specialist.frequency) + ",\n";
  out += "    \"prob_dual\": " + format_prob(report.specialist.dual) + "\n";
  out += "  },\n";
  out += "  \"final_verdict\": {\n";
  out += "    \"verdict\": " + json_quote(verdict_label(report.final_verdict.verdict)) + ",\n";
  out += "    \"reasoning\": " + json_quote(report.final_verdict.reasoning) + "\n";
  out += "  }\n";
  out += "}";
  return out;
}

std::string render_report(const PipelineReport& report, std::string_view think) {
  std::string out;
  out.reserve(640);
  out += kThinkOpen;
  out += think;
  out += kThinkClose;
  out += "\n";
  out += kAnswerOpen;
  out += "\n```json\n";
  out += render_report_json(report);
  out += "\n```\n";
  out += kAnswerClose;
  return out;
}

}  // namespace vrl
