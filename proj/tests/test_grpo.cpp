#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "vrl/agents.hpp"
#include "vrl/error.hpp"
#include "vrl/grpo.hpp"

using namespace vrl;

namespace {

// Scalar reference for the clipped surrogate, written branch by branch
// rather than with min/clamp composition.
double surrogate_reference(double logp_cur, double logp_old, double advantage, double eps) {
  const double ratio = std::exp(logp_cur - logp_old);
  double clipped = ratio;
  if (clipped < 1.0 - eps) clipped = 1.0 - eps;
  if (clipped > 1.0 + eps) clipped = 1.0 + eps;
  const double a = ratio * advantage;
  const double b = clipped * advantage;
  return a < b ? a : b;
}

PolicyParams random_params(const PolicyShape& shape, Rng& rng, double scale = 0.6) {
  PolicyParams p = PolicyParams::zeros(shape);
  for (Mat* m : {&p.w_template, &p.w_verdict, &p.w_bins[0], &p.w_bins[1], &p.w_bins[2]}) {
    for (double& v : m->a) v = scale * rng.normal();
  }
  return p;
}

// Rollout batches for objective/gradient tests: sampled groups whose old and
// reference log-probs are perturbed so ratios stray from 1 and both clip
// branches get exercised.
std::vector<RolloutGroup> random_batch(const PolicyParams& params,
                                       std::span<const LabeledInstance> instances,
                                       const GrpoConfig& cfg, Rng& rng, double perturbation) {
  std::vector<RolloutGroup> groups;
  RewardConfig reward_cfg;
  for (std::size_t g = 0; g < instances.size(); ++g) {
    RolloutGroup group =
        sample_rollout_group(params, params, instances[g], cfg, reward_cfg, rng.next_u64());
    for (int i = 0; i < group.size(); ++i) {
      group.logp_old[i] += perturbation * rng.normal();
      group.logp_ref[i] += perturbation * rng.normal();
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

// Any sample whose ratio sits within `margin` of a clip boundary makes
// central differences invalid there; such batches are resampled.
bool near_clip_kink(const PolicyParams& params, std::span<const RolloutGroup> groups,
                    const GrpoConfig& cfg, double margin) {
  for (const RolloutGroup& group : groups) {
    for (int i = 0; i < group.size(); ++i) {
      const double ratio =
          std::exp(log_prob(params, group.features, group.emissions[i]) - group.logp_old[i]);
      if (std::abs(ratio - (1.0 - cfg.clip_epsilon)) < margin ||
          std::abs(ratio - (1.0 + cfg.clip_epsilon)) < margin) {
        return true;
      }
    }
  }
  return false;
}

std::vector<double> flatten(const PolicyParams& p) {
  std::vector<double> out;
  for (const Mat* m : {&p.w_template, &p.w_verdict, &p.w_bins[0], &p.w_bins[1], &p.w_bins[2]}) {
    out.insert(out.end(), m->a.begin(), m->a.end());
  }
  return out;
}

void unflatten(std::span<const double> flat, PolicyParams& p) {
  std::size_t pos = 0;
  for (Mat* m : {&p.w_template, &p.w_verdict, &p.w_bins[0], &p.w_bins[1], &p.w_bins[2]}) {
    std::copy(flat.begin() + pos, flat.begin() + pos + m->a.size(), m->a.begin());
    pos += m->a.size();
  }
}

}  // namespace

TEST_SUITE("grpo") {
  TEST_CASE("compute_advantages normalizes by the population std") {
    const double rewards[] = {1.0, 0.0, 1.0, 0.0};
    const AdvantageResult r = compute_advantages(rewards);
    REQUIRE(r.advantages.size() == 4);
    CHECK_FALSE(r.degenerate);
    CHECK(r.advantages[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.advantages[1] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(r.advantages[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.advantages[3] == doctest::Approx(-1.0).epsilon(1e-12));
  }

  TEST_CASE("zero-variance groups yield zero advantages with the degenerate flag") {
    const double rewards[] = {2.5, 2.5, 2.5, 2.5};
    const AdvantageResult r = compute_advantages(rewards);
    CHECK(r.degenerate);
    for (double a : r.advantages) CHECK(a == 0.0);
  }

  TEST_CASE("advantage identities on random groups") {
    Rng rng(11);
    for (int trial = 0; trial < 2000; ++trial) {
      const int g = 2 + static_cast<int>(rng.below(15));
      std::vector<double> rewards(g);
      for (double& r : rewards) r = 4.0 * rng.normal();
      const AdvantageResult res = compute_advantages(rewards);
      if (res.degenerate) continue;

      double mean = 0.0, var = 0.0;
      for (double a : res.advantages) mean += a;
      mean /= g;
      for (double a : res.advantages) var += (a - mean) * (a - mean);
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(std::sqrt(var / g) - 1.0) < 1e-9);

      // Shift invariance and positive-scale invariance.
      std::vector<double> shifted(rewards), scaled(rewards);
      const double c = 3.7;
      for (double& r : shifted) r += c;
      for (double& r : scaled) r *= c;
      const AdvantageResult rs = compute_advantages(shifted);
      const AdvantageResult rc = compute_advantages(scaled);
      for (int i = 0; i < g; ++i) {
        CHECK(std::abs(rs.advantages[i] - res.advantages[i]) < 1e-9);
        CHECK(std::abs(rc.advantages[i] - res.advantages[i]) < 1e-9);
      }
    }
  }

  TEST_CASE("kl_k3 closed forms and non-negativity") {
    CHECK(kl_k3(-1.5, -1.5) == 0.0);
    // rho = 2: 2 - ln 2 - 1.
    CHECK(kl_k3(-2.0, -2.0 + std::log(2.0)) ==
          doctest::Approx(0.3068528194400546).epsilon(1e-12));
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
      const double cur = -6.0 * rng.uniform01();
      const double ref = -6.0 * rng.uniform01();
      const double k = kl_k3(cur, ref);
      CHECK(k >= 0.0);
      if (cur == ref) CHECK(k == 0.0);
    }
  }

  TEST_CASE("clipped_surrogate matches the spec examples") {
    // ratio 1.5, eps 0.2, A 1 -> min(1.5, 1.2).
    CHECK(clipped_surrogate(std::log(1.5), 0.0, 1.0, 0.2) ==
          doctest::Approx(1.2).epsilon(1e-12));
    // ratio 1 -> A.
    CHECK(clipped_surrogate(-0.3, -0.3, 0.42, 0.37) == doctest::Approx(0.42).epsilon(1e-12));
    // ratio 0.5, eps 0.2, A -1 -> min(-0.5, -0.8).
    CHECK(clipped_surrogate(std::log(0.5), 0.0, -1.0, 0.2) ==
          doctest::Approx(-0.8).epsilon(1e-12));
  }

  TEST_CASE("clipped_surrogate agrees with an independent scalar formula") {
    Rng rng(23);
    for (int i = 0; i < 10000; ++i) {
      const double logp_cur = -4.0 * rng.uniform01();
      const double logp_old = -4.0 * rng.uniform01();
      const double a = 3.0 * rng.normal();
      const double eps = 0.05 + 0.9 * rng.uniform01() * 0.9;
      CHECK(clipped_surrogate(logp_cur, logp_old, a, eps) ==
            doctest::Approx(surrogate_reference(logp_cur, logp_old, a, eps)).epsilon(1e-12));
    }
  }

  TEST_CASE("surrogate bound for positive advantages") {
    Rng rng(29);
    for (int i = 0; i < 2000; ++i) {
      const double eps = 0.2;
      const double a = rng.uniform01() * 2.0;
      const double s = clipped_surrogate(rng.normal(), rng.normal(), a, eps);
      CHECK(s <= (1.0 + eps) * a + 1e-12);
    }
  }

  TEST_CASE("group_objective at the on-policy on-reference point is mean advantage") {
    GrpoConfig cfg;
    RolloutGroup group;
    group.logp_old = {-1.0, -2.0, -3.0, -0.5};
    group.logp_ref = group.logp_old;
    group.advantages = {1.0, -1.0, 0.5, -0.5};  // centered
    group.emissions.resize(4);
    const std::vector<double> logp_cur = group.logp_old;
    CHECK(group_objective(group, logp_cur, cfg) == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("group_objective matches a hand-computed three-sample case") {
    GrpoConfig cfg;
    cfg.clip_epsilon = 0.2;
    cfg.kl_beta = 0.04;
    RolloutGroup group;
    group.logp_old = {-1.0, -2.0, -0.5};
    group.logp_ref = {-1.1, -2.0, -0.6};
    group.advantages = {0.5, -1.2, 0.7};
    group.emissions.resize(3);
    const std::vector<double> logp_cur = {-0.8, -2.5, -0.5};
    CHECK(group_objective(group, logp_cur, cfg) ==
          doctest::Approx(0.11074164120776257).epsilon(1e-12));

    // beta = 0 drops the KL term: objective equals the mean surrogate.
    cfg.kl_beta = 0.0;
    double mean_surr = 0.0;
    for (int i = 0; i < 3; ++i) {
      mean_surr += surrogate_reference(logp_cur[i], group.logp_old[i], group.advantages[i], 0.2);
    }
    CHECK(group_objective(group, logp_cur, cfg) ==
          doctest::Approx(mean_surr / 3.0).epsilon(1e-12));
  }

  TEST_CASE("analytic gradient matches central finite differences") {
    PolicyShape shape;
    shape.feature_dim = 3;
    shape.num_bins = 5;
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.clip_epsilon = 0.2;
    cfg.kl_beta = 0.04;
    cfg.seed = 1;

    const auto dataset = make_synthetic_dataset(6, shape.feature_dim, 99);
    Rng rng(404);
    const double h = 1e-5;
    int tested = 0;
    while (tested < 120) {
      const PolicyParams params = random_params(shape, rng);
      const std::vector<LabeledInstance> pick = {dataset[rng.below(dataset.size())],
                                                 dataset[rng.below(dataset.size())]};
      std::vector<RolloutGroup> groups = random_batch(params, pick, cfg, rng, 0.15);
      if (near_clip_kink(params, groups, cfg, 50 * h)) continue;  // FD invalid at kinks
      ++tested;

      const PolicyParams analytic = batch_objective_gradient(params, groups, cfg);
      const std::vector<double> g = flatten(analytic);
      std::vector<double> fd(g.size());
      PolicyParams probe = params;
      std::vector<double> flat = flatten(params);
      for (std::size_t j = 0; j < flat.size(); ++j) {
        const double keep = flat[j];
        flat[j] = keep + h;
        unflatten(flat, probe);
        const double up = batch_objective(probe, groups, cfg);
        flat[j] = keep - h;
        unflatten(flat, probe);
        const double down = batch_objective(probe, groups, cfg);
        flat[j] = keep;
        fd[j] = (up - down) / (2.0 * h);
      }
      unflatten(flat, probe);

      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        num += (g[j] - fd[j]) * (g[j] - fd[j]);
        den += fd[j] * fd[j];
      }
      const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
      CHECK(rel < 1e-5);
    }
  }

  TEST_CASE("grpo_step edge cases") {
    PolicyShape shape;
    shape.feature_dim = 3;
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.seed = 3;
    const auto dataset = make_synthetic_dataset(4, shape.feature_dim, 5);
    Rng rng(8);
    const PolicyParams params = random_params(shape, rng);
    std::vector<RolloutGroup> groups = random_batch(params, dataset, cfg, rng, 0.0);

    SUBCASE("zero advantages and zero beta leave parameters unchanged") {
      GrpoConfig off = cfg;
      off.kl_beta = 0.0;
      for (RolloutGroup& g : groups) std::fill(g.advantages.begin(), g.advantages.end(), 0.0);
      const PolicyParams next = grpo_step(params, groups, off);
      CHECK(next.max_abs_diff(params) == 0.0);
    }

    SUBCASE("zero learning rate leaves parameters unchanged") {
      GrpoConfig frozen = cfg;
      frozen.learning_rate = 0.0;
      const PolicyParams next = grpo_step(params, groups, frozen);
      CHECK(next.max_abs_diff(params) == 0.0);
    }

    SUBCASE("non-finite gradients abort the step") {
      for (RolloutGroup& g : groups) {
        std::fill(g.logp_old.begin(), g.logp_old.end(), -1.0e4);  // ratio overflows
        std::fill(g.advantages.begin(), g.advantages.end(), -1.0);
      }
      CHECK_THROWS_AS(grpo_step(params, groups, cfg), Error);
    }
  }

  TEST_CASE("objective is invariant under group and within-group permutations") {
    PolicyShape shape;
    shape.feature_dim = 4;
    GrpoConfig cfg;
    cfg.group_size = 5;
    cfg.seed = 21;
    const auto dataset = make_synthetic_dataset(6, shape.feature_dim, 77);
    Rng rng(91);
    const PolicyParams params = random_params(shape, rng);
    std::vector<RolloutGroup> groups = random_batch(params, dataset, cfg, rng, 0.1);

    const double base = batch_objective(params, groups, cfg);

    std::vector<RolloutGroup> swapped = groups;
    std::swap(swapped[0], swapped[swapped.size() - 1]);
    CHECK(batch_objective(params, swapped, cfg) == doctest::Approx(base).epsilon(1e-15));

    std::vector<RolloutGroup> shuffled = groups;
    RolloutGroup& g0 = shuffled[0];
    const auto permute = [](auto& v, int i, int j) { std::swap(v[i], v[j]); };
    permute(g0.emissions, 0, 3);
    permute(g0.completions, 0, 3);
    permute(g0.rewards, 0, 3);
    permute(g0.reward_totals, 0, 3);
    permute(g0.logp_old, 0, 3);
    permute(g0.logp_ref, 0, 3);
    permute(g0.advantages, 0, 3);
    CHECK(batch_objective(params, shuffled, cfg) == doctest::Approx(base).epsilon(1e-15));
  }

  TEST_CASE("run_training is deterministic and thread-count independent") {
    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.iterations = 6;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05;
    cfg.seed = 1234;
    const auto dataset = make_synthetic_dataset(24, 4, 9);
    PolicyShape shape;
    shape.feature_dim = 4;
    const PolicyParams init = PolicyParams::zeros(shape);
    RewardConfig reward_cfg;

    const TrainResult a = run_training(dataset, init, init, cfg, reward_cfg);
    const TrainResult b = run_training(dataset, init, init, cfg, reward_cfg);
    CHECK(a.params == b.params);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
      CHECK(a.metrics[i].mean_total_reward == b.metrics[i].mean_total_reward);
      CHECK(a.metrics[i].mean_kl == b.metrics[i].mean_kl);
    }

    GrpoConfig par = cfg;
    par.threads = 4;
    const TrainResult c = run_training(dataset, init, init, par, reward_cfg);
    CHECK(a.params == c.params);
    for (std::size_t i = 0; i < a.metrics.size(); ++i) {
      CHECK(a.metrics[i].mean_total_reward == c.metrics[i].mean_total_reward);
    }
  }

  TEST_CASE("a large KL weight anchors the policy to the reference") {
    const auto dataset = make_synthetic_dataset(32, 4, 13);
    PolicyShape shape;
    shape.feature_dim = 4;
    const PolicyParams init = PolicyParams::zeros(shape);
    RewardConfig reward_cfg;

    auto drift_for_beta = [&](double beta) {
      GrpoConfig cfg;
      cfg.group_size = 4;
      cfg.iterations = 40;
      cfg.batch_size = 8;
      cfg.learning_rate = 0.1;
      cfg.kl_beta = beta;
      cfg.seed = 5150;
      const TrainResult r = run_training(dataset, init, init, cfg, reward_cfg);
      return r.params.max_abs_diff(init);
    };

    const double drift_none = drift_for_beta(0.0);
    const double drift_mid = drift_for_beta(1.0);
    const double drift_hard = drift_for_beta(1e3);
    CHECK(drift_mid <= drift_none);
    CHECK(drift_hard <= drift_mid);
    CHECK(drift_hard < 0.05 * drift_none);
  }

  TEST_CASE("format-only rewards push the format rate up") {
    const auto dataset = make_synthetic_dataset(64, 4, 21);
    PolicyShape shape;
    shape.feature_dim = 4;
    const PolicyParams init = PolicyParams::zeros(shape);

    RewardConfig reward_cfg;
    reward_cfg.weights = {1.0, 0.0, 0.0, 0.0};
    GrpoConfig cfg;
    cfg.group_size = 8;
    cfg.iterations = 200;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.1;
    cfg.seed = 31337;

    const TrainResult r = run_training(dataset, init, init, cfg, reward_cfg);

    // Smoothed over 50-iteration windows, the trend must be non-decreasing.
    auto window_mean = [&](int from, int len) {
      double total = 0.0;
      for (int i = from; i < from + len; ++i) total += r.metrics[i].format_rate;
      return total / len;
    };
    const double w0 = window_mean(0, 50);
    const double w1 = window_mean(50, 50);
    const double w2 = window_mean(100, 50);
    const double w3 = window_mean(150, 50);
    CHECK(w1 >= w0 - 0.02);
    CHECK(w2 >= w1 - 0.02);
    CHECK(w3 >= w2 - 0.02);
    CHECK(w3 > w0);
    CHECK(r.metrics.back().format_rate > 0.9);
  }
}
