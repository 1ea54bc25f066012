#include <cmath>
#include <string>

#include "doctest.h"

#include "vrl/report.hpp"
#include "vrl/rewards.hpp"
#include "vrl/rng.hpp"

using namespace vrl;

namespace {

// Compliant completion with the given verdict and specialist probabilities.
std::string make_completion(Verdict verdict, double semantic, double frequency, double dual) {
  PipelineReport report;
  report.specialist = {semantic, frequency, dual};
  report.final_verdict.verdict = verdict;
  report.final_verdict.reasoning = "because";
  return render_report(report, "looking closely");
}

}  // namespace

TEST_SUITE("rewards") {
  TEST_CASE("reward_format follows the envelope matcher") {
    CHECK(reward_format("<think>a</think><answer>b</answer>") == 1.0);
    CHECK(reward_format("plain text") == 0.0);
    CHECK(reward_format("<think>a</think>") == 0.0);
  }

  TEST_CASE("reward_json needs a parseable first fence") {
    CHECK(reward_json("text ```json\n{\"x\":1}\n``` more") == 1.0);
    CHECK(reward_json("text ```json\n{broken\n``` more") == 0.0);
    CHECK(reward_json("no fence") == 0.0);
    CHECK(reward_json("```json\n```") == 0.0);
    // Parseability only; schema validity is not required.
    CHECK(reward_json("```json\n[1, 2, 3]\n```") == 1.0);
    // Only the first fence counts.
    CHECK(reward_json("```json\n{oops\n``` then ```json\n{\"ok\":1}\n```") == 0.0);
  }

  TEST_CASE("reward_json fence scope") {
    // Fence only in the think block: found in completion scope, not in answer scope.
    const std::string text =
        "<think>```json\n{\"x\":1}\n```</think><answer>nothing here</answer>";
    CHECK(reward_json(text, FenceScope::completion) == 1.0);
    CHECK(reward_json(text, FenceScope::answer) == 0.0);
    // Answer scope still works for a fenced answer.
    const std::string ok = make_completion(Verdict::real, 0.1, 0.2, 0.3);
    CHECK(reward_json(ok, FenceScope::answer) == 1.0);
  }

  TEST_CASE("reward_accuracy compares parsed verdicts against labels") {
    const std::string real = make_completion(Verdict::real, 0.1, 0.1, 0.1);
    const std::string fake = make_completion(Verdict::ai_generated, 0.9, 0.9, 0.9);
    CHECK(reward_accuracy(real, 0) == 1.0);
    CHECK(reward_accuracy(real, 1) == 0.0);
    CHECK(reward_accuracy(fake, 1) == 1.0);
    CHECK(reward_accuracy(fake, 0) == 0.0);
    CHECK(reward_accuracy("garbage", 0) == -1.0);
    CHECK(reward_accuracy("garbage", 1) == -1.0);
    CHECK(reward_accuracy("<think>t</think><answer>```json\n{bad\n```</answer>", 0) == -1.0);
  }

  TEST_CASE("binary_cross_entropy closed forms") {
    CHECK(binary_cross_entropy(1.0, 1.0) == 0.0);
    CHECK(binary_cross_entropy(0.5, 1.0) == doctest::Approx(0.6931471805599453).epsilon(1e-12));
    // Clamp keeps hard mispredictions finite: -(0.5 ln 1 + 0.5 ln 1e-7).
    CHECK(binary_cross_entropy(1.0, 0.5) == doctest::Approx(8.05904782547916).epsilon(1e-12));
    CHECK(binary_cross_entropy(0.0, 0.0) == 0.0);
  }

  TEST_CASE("binary_cross_entropy is minimized at the target") {
    Rng rng(42);
    for (int i = 0; i < 500; ++i) {
      const double t = rng.uniform01();
      const double q = rng.uniform01();
      CHECK(binary_cross_entropy(t, t) <= binary_cross_entropy(q, t) + 1e-12);
    }
  }

  TEST_CASE("reward_agentic closed forms") {
    const AgentOpinions ones{1.0, 1.0, 1.0};
    CHECK(reward_agentic(make_completion(Verdict::ai_generated, 1.0, 1.0, 1.0), 1, ones) == 1.0);
    // All three at 0.5 against hard ones: mean loss ln 2, reward exp(-ln 2).
    CHECK(reward_agentic(make_completion(Verdict::ai_generated, 0.5, 0.5, 0.5), 1, ones) ==
          doctest::Approx(0.5).epsilon(1e-12));
    // Mixed: losses -ln 0.6, -ln 0.7, -ln 0.9.
    const AgentOpinions mixed{1.0, 0.0, 1.0};
    CHECK(reward_agentic(make_completion(Verdict::real, 0.6, 0.3, 0.9), 0, mixed) ==
          doctest::Approx(0.7230426792525689).epsilon(1e-12));
    // Wrong verdict gates the reward to zero regardless of calibration.
    CHECK(reward_agentic(make_completion(Verdict::real, 1.0, 1.0, 1.0), 1, ones) == 0.0);
    CHECK(reward_agentic("garbage", 1, ones) == -1.0);
  }

  TEST_CASE("agentic reward is positive only when the verdict is right") {
    Rng rng(31);
    const AgentOpinions gt{0.8, 0.2, 0.6};
    for (int i = 0; i < 200; ++i) {
      const Verdict v = rng.below(2) ? Verdict::ai_generated : Verdict::real;
      const int label = static_cast<int>(rng.below(2));
      const std::string c =
          make_completion(v, rng.uniform01(), rng.uniform01(), rng.uniform01());
      const double r = reward_agentic(c, label, gt);
      if (r > 0.0) CHECK(reward_accuracy(c, label) == 1.0);
    }
  }

  TEST_CASE("agentic reward is maximized at the ground-truth opinions") {
    // Soft targets: maximum is exp(-mean entropy), below 1.
    const AgentOpinions gt{0.7, 0.7, 0.7};
    const double at_gt = reward_agentic(make_completion(Verdict::real, 0.7, 0.7, 0.7), 0, gt);
    CHECK(at_gt == doctest::Approx(0.5428814526898254).epsilon(1e-12));
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
      const double r = reward_agentic(
          make_completion(Verdict::real, rng.uniform01(), rng.uniform01(), rng.uniform01()), 0,
          gt);
      CHECK(r <= at_gt + 1e-12);
    }
  }

  TEST_CASE("moving a prediction toward its target never decreases the reward") {
    Rng rng(53);
    for (int i = 0; i < 300; ++i) {
      const AgentOpinions gt{rng.uniform01(), rng.uniform01(), rng.uniform01()};
      double p[3] = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
      const double before =
          reward_agentic(make_completion(Verdict::real, p[0], p[1], p[2]), 0, gt);
      const int k = static_cast<int>(rng.below(3));
      const double target = k == 0 ? gt.semantic : (k == 1 ? gt.frequency : gt.dual);
      p[k] += (target - p[k]) * rng.uniform01();  // strictly toward the target
      const double after =
          reward_agentic(make_completion(Verdict::real, p[0], p[1], p[2]), 0, gt);
      CHECK(after >= before - 1e-12);
    }
  }

  TEST_CASE("score_completion composes the four components") {
    const AgentOpinions ones{1.0, 1.0, 1.0};
    RewardConfig cfg;  // unit weights

    const RewardVector perfect =
        score_completion(make_completion(Verdict::ai_generated, 1.0, 1.0, 1.0), 1, ones, cfg);
    CHECK(perfect.format == 1.0);
    CHECK(perfect.json == 1.0);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.agentic == 1.0);
    CHECK(perfect.total == 4.0);

    const RewardVector empty = score_completion("", 0, ones, cfg);
    CHECK(empty.format == 0.0);
    CHECK(empty.json == 0.0);
    CHECK(empty.accuracy == -1.0);
    CHECK(empty.agentic == -1.0);
    CHECK(empty.total == -2.0);

    RewardConfig proj;
    proj.weights = {1.0, 0.0, 0.0, 0.0};
    const RewardVector fmt_only = score_completion("<think>a</think><answer>b</answer>", 0, ones,
                                                   proj);
    CHECK(fmt_only.total == fmt_only.format);
  }

  TEST_CASE("rewards are deterministic") {
    const AgentOpinions gt{0.3, 0.6, 0.9};
    const std::string c = make_completion(Verdict::ai_generated, 0.4, 0.7, 0.8);
    const RewardVector a = score_completion(c, 1, gt);
    const RewardVector b = score_completion(c, 1, gt);
    CHECK(a.format == b.format);
    CHECK(a.json == b.json);
    CHECK(a.accuracy == b.accuracy);
    CHECK(a.agentic == b.agentic);
    CHECK(a.total == b.total);
  }

  TEST_CASE("component ranges hold on arbitrary inputs") {
    Rng rng(71);
    const AgentOpinions gt{0.5, 0.5, 0.5};
    for (int i = 0; i < 400; ++i) {
      std::string junk;
      const std::size_t n = rng.below(100);
      for (std::size_t j = 0; j < n; ++j) junk += static_cast<char>(32 + rng.below(95));
      const RewardVector rv = score_completion(junk, static_cast<int>(rng.below(2)), gt);
      CHECK((rv.format == 0.0 || rv.format == 1.0));
      CHECK((rv.json == 0.0 || rv.json == 1.0));
      CHECK((rv.accuracy == -1.0 || rv.accuracy == 0.0 || rv.accuracy == 1.0));
      CHECK((rv.agentic == -1.0 || rv.agentic == 0.0 || (rv.agentic > 0.0 && rv.agentic <= 1.0)));
    }
  }
}
