#include "vrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "vrl/error.hpp"

namespace vrl {

namespace {

// Softmax of W [x; 1] per row, computed stably.
std::vector<double> head_softmax(const Mat& w, std::span<const double> features) {
  std::vector<double> logits(w.rows, 0.0);
  for (int r = 0; r < w.rows; ++r) {
    double z = w.at(r, w.cols - 1);  // bias column
    for (int c = 0; c + 1 < w.cols; ++c) z += w.at(r, c) * features[c];
    logits[r] = z;
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double& z : logits) {
    z = std::exp(z - zmax);
    denom += z;
  }
  for (double& z : logits) z /= denom;
  return logits;
}

int argmax_lowest(std::span<const double> probs) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(probs.size()); ++i) {
    if (probs[i] > probs[best]) best = i;  // strict: ties keep the lowest index
  }
  return best;
}

void check_features(const PolicyParams& params, std::span<const double> features) {
  if (static_cast<int>(features.size()) != params.shape.feature_dim) {
    throw Error(ErrorCode::invalid_argument, "feature dimension mismatch");
  }
}

// (indicator - probability) * [features; 1] added into the gradient rows.
void head_grad(const Mat& w, std::span<const double> features, std::span<const double> probs,
               int chosen, double coeff, Mat& grad) {
  for (int r = 0; r < w.rows; ++r) {
    const double g = coeff * ((r == chosen ? 1.0 : 0.0) - probs[r]);
    for (int c = 0; c + 1 < w.cols; ++c) grad.at(r, c) += g * features[c];
    grad.at(r, w.cols - 1) += g;
  }
}

std::string fence_block(std::string_view body) {
  std::string out;
  out += "```json\n";
  out += body;
  out += "\n```";
  return out;
}

}  // namespace

PolicyParams PolicyParams::zeros(const PolicyShape& shape) {
  PolicyParams p;
  p.shape = shape;
  p.w_template = Mat(shape.num_templates, shape.cols());
  p.w_verdict = Mat(2, shape.cols());
  for (Mat& m : p.w_bins) m = Mat(shape.num_bins, shape.cols());
  return p;
}

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  auto axpy = [scale](Mat& dst, const Mat& src) {
    for (std::size_t i = 0; i < dst.a.size(); ++i) dst.a[i] += scale * src.a[i];
  };
  axpy(w_template, other.w_template);
  axpy(w_verdict, other.w_verdict);
  for (int k = 0; k < 3; ++k) axpy(w_bins[k], other.w_bins[k]);
}

void PolicyParams::fill(double value) {
  auto set = [value](Mat& m) { std::fill(m.a.begin(), m.a.end(), value); };
  set(w_template);
  set(w_verdict);
  for (Mat& m : w_bins) set(m);
}

bool PolicyParams::all_finite() const {
  auto finite = [](const Mat& m) {
    for (double v : m.a) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  };
  if (!finite(w_template) || !finite(w_verdict)) return false;
  for (const Mat& m : w_bins) {
    if (!finite(m)) return false;
  }
  return true;
}

double PolicyParams::max_abs_diff(const PolicyParams& other) const {
  double worst = 0.0;
  auto scan = [&worst](const Mat& a, const Mat& b) {
    for (std::size_t i = 0; i < a.a.size(); ++i) {
      worst = std::max(worst, std::abs(a.a[i] - b.a[i]));
    }
  };
  scan(w_template, other.w_template);
  scan(w_verdict, other.w_verdict);
  for (int k = 0; k < 3; ++k) scan(w_bins[k], other.w_bins[k]);
  return worst;
}

HeadDistributions heads(const PolicyParams& params, std::span<const double> features) {
  check_features(params, features);
  HeadDistributions h;
  h.template_probs = head_softmax(params.w_template, features);
  h.verdict_probs = head_softmax(params.w_verdict, features);
  for (int k = 0; k < 3; ++k) h.bin_probs[k] = head_softmax(params.w_bins[k], features);
  return h;
}

Emission sample_emission(const PolicyParams& params, const LabeledInstance& instance, Rng& rng) {
  const HeadDistributions h = heads(params, instance.features);
  Emission e;
  e.template_id = rng.categorical(h.template_probs);
  e.verdict = rng.categorical(h.verdict_probs);
  double logp = std::log(h.template_probs[e.template_id]) + std::log(h.verdict_probs[e.verdict]);
  for (int k = 0; k < 3; ++k) {
    e.bins[k] = rng.categorical(h.bin_probs[k]);
    logp += std::log(h.bin_probs[k][e.bins[k]]);
  }
  e.logp = logp;
  return e;
}

Emission greedy_emission(const PolicyParams& params, const LabeledInstance& instance) {
  const HeadDistributions h = heads(params, instance.features);
  Emission e;
  e.template_id = argmax_lowest(h.template_probs);
  e.verdict = argmax_lowest(h.verdict_probs);
  double logp = std::log(h.template_probs[e.template_id]) + std::log(h.verdict_probs[e.verdict]);
  for (int k = 0; k < 3; ++k) {
    e.bins[k] = argmax_lowest(h.bin_probs[k]);
    logp += std::log(h.bin_probs[k][e.bins[k]]);
  }
  e.logp = logp;
  return e;
}

double log_prob(const PolicyParams& params, std::span<const double> features,
                const Emission& emission) {
  const HeadDistributions h = heads(params, features);
  double logp = std::log(h.template_probs[emission.template_id]) +
                std::log(h.verdict_probs[emission.verdict]);
  for (int k = 0; k < 3; ++k) logp += std::log(h.bin_probs[k][emission.bins[k]]);
  return logp;
}

PolicyParams log_prob_grad(const PolicyParams& params, std::span<const double> features,
                           const Emission& emission) {
  PolicyParams grad = PolicyParams::zeros(params.shape);
  accumulate_log_prob_grad(params, features, emission, 1.0, grad);
  return grad;
}

void accumulate_log_prob_grad(const PolicyParams& params, std::span<const double> features,
                              const Emission& emission, double coeff, PolicyParams& grad) {
  const HeadDistributions h = heads(params, features);
  head_grad(params.w_template, features, h.template_probs, emission.template_id, coeff,
            grad.w_template);
  head_grad(params.w_verdict, features, h.verdict_probs, emission.verdict, coeff, grad.w_verdict);
  for (int k = 0; k < 3; ++k) {
    head_grad(params.w_bins[k], features, h.bin_probs[k], emission.bins[k], coeff, grad.w_bins[k]);
  }
}

double bin_probability(int bin, int num_bins) {
  return static_cast<double>(bin) / static_cast<double>(num_bins - 1);
}

int nearest_bin(double prob, int num_bins) {
  const int bin = static_cast<int>(std::lround(prob * (num_bins - 1)));
  return std::clamp(bin, 0, num_bins - 1);
}

std::string emission_think_text() {
  return "Scanning composition, texture consistency, lighting and frequency artifacts "
         "before consulting the specialists.";
}

PipelineReport emission_report(const Emission& emission, const PolicyShape& shape) {
  PipelineReport report;
  report.initial_scan = "First-pass impression of subject, composition and lighting recorded.";
  report.detailed_observation =
      "Edges, textures, shadows and reflections reviewed at close range.";
  report.technical_analysis =
      "Checked for generator artifacts in structure, surfaces and context.";
  report.specialist.semantic = bin_probability(emission.bins[0], shape.num_bins);
  report.specialist.frequency = bin_probability(emission.bins[1], shape.num_bins);
  report.specialist.dual = bin_probability(emission.bins[2], shape.num_bins);
  report.final_verdict.verdict = emission.verdict == 1 ? Verdict::ai_generated : Verdict::real;
  report.final_verdict.reasoning =
      "Verdict follows the specialist probabilities and the visual scan.";
  return report;
}

std::string emit_text(const Emission& emission, const PolicyShape& shape) {
  if (shape.num_templates != 4) {
    throw Error(ErrorCode::invalid_argument, "emission templates are defined for 4 templates");
  }
  const PipelineReport report = emission_report(emission, shape);

  switch (emission.template_id) {
    case 0:
      return render_report(report, emission_think_text());
    case 1: {
      // Answer block only: fails the think/answer envelope, fence still valid.
      std::string out = "<answer>\n";
      out += fence_block(render_report_json(report));
      out += "\n</answer>";
      return out;
    }
    case 2: {
      // Broken JSON inside the fence.
      std::string body = "{\"final_verdict\": {\"verdict\": \"";
      body += verdict_label(report.final_verdict.verdict);
      body += "\",";  // truncated object: never parses
      std::string out = "<think>";
      out += emission_think_text();
      out += "</think>\n<answer>\n";
      out += fence_block(body);
      out += "\n</answer>";
      return out;
    }
    case 3: {
      // Valid JSON, but the report schema is incomplete (no final_verdict).
      char body[160];
      std::snprintf(body, sizeof(body),
                    "{\"specialist_analysis\": {\"prob_semantic\": %.4f, "
                    "\"prob_frequency\": %.4f, \"prob_dual\": %.4f}}",
                    report.specialist.semantic, report.specialist.frequency,
                    report.specialist.dual);
      std::string out = "<think>";
      out += emission_think_text();
      out += "</think>\n<answer>\n";
      out += fence_block(body);
      out += "\n</answer>";
      return out;
    }
    default:
      throw Error(ErrorCode::invalid_argument, "template id out of range");
  }
}

Emission oracle_emission(const LabeledInstance& instance, const PolicyShape& shape) {
  Emission e;
  e.template_id = 0;
  e.verdict = instance.label;
  e.bins[0] = nearest_bin(instance.agent_gt.semantic, shape.num_bins);
  e.bins[1] = nearest_bin(instance.agent_gt.frequency, shape.num_bins);
  e.bins[2] = nearest_bin(instance.agent_gt.dual, shape.num_bins);
  e.logp = 0.0;  // targets carry no sampling probability
  return e;
}

std::vector<SftExample> make_sft_examples(std::span<const LabeledInstance> instances,
                                          const PolicyShape& shape) {
  std::vector<SftExample> out;
  out.reserve(instances.size());
  for (const LabeledInstance& inst : instances) {
    out.push_back(SftExample{inst, oracle_emission(inst, shape)});
  }
  return out;
}

ColdStartResult cold_start_fit(const PolicyParams& init, std::span<const SftExample> examples,
                               int epochs, double learning_rate) {
  if (examples.empty()) throw Error(ErrorCode::invalid_argument, "empty supervised set");
  if (epochs < 0) throw Error(ErrorCode::invalid_argument, "epochs must be >= 0");

  const double inv_n = 1.0 / static_cast<double>(examples.size());
  auto mean_logp = [&](const PolicyParams& p) {
    double total = 0.0;
    for (const SftExample& ex : examples) {
      total += log_prob(p, ex.instance.features, ex.target);
    }
    return total * inv_n;
  };

  ColdStartResult result;
  result.params = init;
  result.initial_mean_logp = mean_logp(init);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    PolicyParams grad = PolicyParams::zeros(init.shape);
    for (const SftExample& ex : examples) {
      accumulate_log_prob_grad(result.params, ex.instance.features, ex.target, inv_n, grad);
    }
    if (!grad.all_finite()) {
      throw Error(ErrorCode::training, "non-finite gradient in cold start epoch " +
                                           std::to_string(epoch));
    }
    result.params.add_scaled(grad, learning_rate);
  }

  result.final_mean_logp = mean_logp(result.params);
  if (epochs > 0 && learning_rate > 0.0 &&
      result.final_mean_logp <= result.initial_mean_logp) {
    throw Error(ErrorCode::training, "cold start failed to improve target likelihood");
  }
  return result;
}

}  // namespace vrl
