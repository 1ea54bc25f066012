#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vrl/dataset.hpp"
#include "vrl/report.hpp"
#include "vrl/rng.hpp"

namespace vrl {

// Small row-major matrix; all the heads are (classes x features+1) logit maps.
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const Mat&) const = default;
};

struct PolicyShape {
  int feature_dim = 8;
  int num_templates = 4;  // emission templates; template 0 is the compliant one
  int num_bins = 11;      // discretized probabilities {0.0, 0.1, ..., 1.0}

  int cols() const { return feature_dim + 1; }  // affine: [features; 1]
  bool operator==(const PolicyShape&) const = default;
};

// Independent softmax heads over affine scores of the feature vector:
// one template head, one verdict head, three specialist-probability bin heads.
struct PolicyParams {
  PolicyShape shape;
  Mat w_template;
  Mat w_verdict;
  std::array<Mat, 3> w_bins;

  static PolicyParams zeros(const PolicyShape& shape);

  void add_scaled(const PolicyParams& other, double scale);
  void fill(double value);
  bool all_finite() const;
  double max_abs_diff(const PolicyParams& other) const;
  bool operator==(const PolicyParams&) const = default;
};

struct HeadDistributions {
  std::vector<double> template_probs;
  std::vector<double> verdict_probs;
  std::array<std::vector<double>, 3> bin_probs;
};

HeadDistributions heads(const PolicyParams& params, std::span<const double> features);

// One sampled structured output: which emission template, which verdict,
// which probability bin per specialist, and the joint log-probability of
// those choices.
struct Emission {
  int template_id = 0;
  int verdict = 0;
  std::array<int, 3> bins = {0, 0, 0};
  double logp = 0.0;
  bool operator==(const Emission&) const = default;
};

Emission sample_emission(const PolicyParams& params, const LabeledInstance& instance, Rng& rng);
Emission greedy_emission(const PolicyParams& params, const LabeledInstance& instance);

double log_prob(const PolicyParams& params, std::span<const double> features,
                const Emission& emission);

// Exact score-function gradient: per head, (indicator - probability) outer
// [features; 1] for the sampled class row.
PolicyParams log_prob_grad(const PolicyParams& params, std::span<const double> features,
                           const Emission& emission);
void accumulate_log_prob_grad(const PolicyParams& params, std::span<const double> features,
                              const Emission& emission, double coeff, PolicyParams& grad);

// Bin index -> probability value (bin / (num_bins - 1)).
double bin_probability(int bin, int num_bins);
int nearest_bin(double prob, int num_bins);

// Renders an emission as completion text. Template 0 is fully compliant;
// template 1 drops the think block; template 2 breaks the fenced JSON;
// template 3 emits valid JSON without final_verdict. Requires 4 templates.
std::string emit_text(const Emission& emission, const PolicyShape& shape);

// The report text emitted by template 0 (shared with tests and evaluation).
PipelineReport emission_report(const Emission& emission, const PolicyShape& shape);
std::string emission_think_text();

// The supervised target for an instance: template 0, the correct verdict,
// and the bins nearest to the ground-truth opinions.
Emission oracle_emission(const LabeledInstance& instance, const PolicyShape& shape);

struct SftExample {
  LabeledInstance instance;
  Emission target;
};

std::vector<SftExample> make_sft_examples(std::span<const LabeledInstance> instances,
                                          const PolicyShape& shape);

struct ColdStartResult {
  PolicyParams params;
  double initial_mean_logp = 0.0;
  double final_mean_logp = 0.0;
};

// Full-batch gradient ascent on the mean target log-likelihood. Throws
// Error(training) if the likelihood fails to improve over the run.
ColdStartResult cold_start_fit(const PolicyParams& init, std::span<const SftExample> examples,
                               int epochs, double learning_rate);

}  // namespace vrl
