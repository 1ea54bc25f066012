#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace vrl {

// Structured completions look like
//
//   <think>...reasoning...</think>
//   <answer>
//   ```json
//   { ...report... }
//   ```
//   </answer>
//
// and the report JSON carries five top-level keys, in canonical order:
//
//   initial_scan          free text (optional)
//   detailed_observation  free text (optional)
//   technical_analysis    free text (optional)
//   specialist_analysis   { prob_semantic, prob_frequency, prob_dual } in [0,1]
//   final_verdict         { verdict: "REAL" | "AI-GENERATED", reasoning }
//
// The three free-text step fields default to "" when absent. The specialist
// probabilities and final_verdict.verdict are required; verdict strings are
// matched case-sensitively.

inline constexpr std::string_view kVerdictRealLabel = "REAL";
inline constexpr std::string_view kVerdictAiLabel = "AI-GENERATED";

enum class Verdict : int { real = 0, ai_generated = 1 };

std::string_view verdict_label(Verdict v);
std::optional<Verdict> verdict_from_label(std::string_view label);

struct SpecialistProbs {
  double semantic = 0.0;
  double frequency = 0.0;
  double dual = 0.0;
  bool operator==(const SpecialistProbs&) const = default;
};

struct FinalVerdict {
  Verdict verdict = Verdict::real;
  std::string reasoning;
  bool operator==(const FinalVerdict&) const = default;
};

struct PipelineReport {
  std::string initial_scan;
  std::string detailed_observation;
  std::string technical_analysis;
  SpecialistProbs specialist;
  FinalVerdict final_verdict;
  bool operator==(const PipelineReport&) const = default;
};

enum class ParseStatus {
  ok,
  format_mismatch,  // think/answer envelope not matched
  no_fence,         // missing, unterminated, or empty ```json fence
  parse_error,      // fence contents are not valid JSON
  schema_error,     // valid JSON but required paths/values invalid
};

const char* parse_status_name(ParseStatus s);

template <typename T>
struct Parsed {
  ParseStatus status = ParseStatus::ok;
  T value{};

  bool ok() const { return status == ParseStatus::ok; }
  static Parsed failure(ParseStatus s) { return Parsed{s, T{}}; }
};

struct ThinkAnswer {
  std::string think;
  std::string answer;
};

// Accepts exactly one think block followed by exactly one answer block,
// with arbitrary whitespace around and between them and nothing else.
// Neither block's inner text may contain any of the four tag tokens.
// Inner text is returned verbatim (not trimmed).
Parsed<ThinkAnswer> extract_think_answer(std::string_view completion);

// Returns the trimmed contents of the first ```json ... ``` fence.
// no_fence when there is no fence, the fence is unterminated, or the
// contents trim to nothing.
Parsed<std::string> extract_json_fence(std::string_view text);

// Parses and validates report JSON against the canonical schema above.
Parsed<PipelineReport> parse_report(std::string_view json_text);

struct ParsedVerdict {
  int verdict = 0;  // REAL = 0, AI-GENERATED = 1
  PipelineReport report;
  std::string think_text;
};

// Full post-processing: think/answer envelope, then the ```json fence,
// then report validation. The failure status identifies the stage.
Parsed<ParsedVerdict> post_process(std::string_view completion);

// Canonical serialization of a report: fixed key order, 2-space indent,
// probabilities rendered with 4 decimal places. Structurally equal reports
// produce byte-identical text.
std::string render_report_json(const PipelineReport& report);

// Deterministic inverse of post_process: wraps the canonical JSON in the
// think/answer envelope. Round-trips exactly provided the free-text fields
// contain neither the tag tokens nor a ``` sequence, and the probabilities
// sit on the 1e-4 grid.
std::string render_report(const PipelineReport& report, std::string_view think);

}  // namespace vrl
