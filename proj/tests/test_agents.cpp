#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "uavsc/agents.hpp"
#include "uavsc/env.hpp"
#include "uavsc/rng.hpp"

using namespace uavsc;
using namespace uavsc::agents;

namespace {

env::EnvConfig small_config(int users, int channels) {
  env::EnvConfig cfg;
  cfg.channel.num_users = users;
  cfg.channel.num_channels = channels;
  return cfg;
}

PPOConfig small_ppo() {
  PPOConfig ppo;
  ppo.hidden_sizes = {16, 16};
  ppo.rollout_slots = 1 << 20;  // large: updates only when asked explicitly
  return ppo;
}

/// Gather `slots` transitions the same way the training loop does.
std::vector<Transition> collect(const HybridPolicy& policy, const env::EnvConfig& cfg,
                                int slots, std::uint64_t seed) {
  RandomStream env_rng(derive_seed(seed, 1));
  RandomStream act_rng(derive_seed(seed, 2));
  std::vector<Transition> buffer;
  env::MissionState state = env::reset(cfg, env_rng);
  while (static_cast<int>(buffer.size()) < slots) {
    auto d = policy.act(state, cfg, act_rng, false);
    auto out = env::step(state, d.action, cfg, env_rng);
    Transition tr;
    tr.obs_d = d.obs_d;
    tr.obs_c = d.obs_c;
    tr.action_index = d.action_index;
    tr.raw_c = d.raw_c;
    tr.log_prob_d = d.log_prob_d;
    tr.log_prob_c = d.log_prob_c;
    tr.value_d = d.value_d;
    tr.value_c = d.value_c;
    tr.reward_d = out.reward_discrete;
    tr.reward_c = out.reward_continuous;
    tr.done = out.done;
    if (out.done) {
      tr.next_value_d = 0.0;
      tr.next_value_c.assign(policy.num_continuous_agents(), 0.0);
    } else {
      const auto v = policy.values(out.next_state, cfg);
      tr.next_value_d = v[0];
      tr.next_value_c.assign(v.begin() + 1, v.end());
    }
    buffer.push_back(std::move(tr));
    state = out.done ? env::reset(cfg, env_rng) : out.next_state;
  }
  return buffer;
}

double max_rel_diff(const std::vector<double>& x, const std::vector<double>& y) {
  REQUIRE(x.size() == y.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x[i] - y[i]) /
                                std::max({1.0, std::abs(x[i]), std::abs(y[i])}));
  return worst;
}

}  // namespace

TEST_CASE("normalization maps raw endpoints to the physical action ranges") {
  env::EnvConfig cfg;  // P_max 5 W, V_max 10 m/s, t_slot 1 s
  CHECK(denorm_power(-1.0, cfg) == 0.0);
  CHECK(denorm_power(1.0, cfg) == 5.0);
  CHECK(denorm_power(0.0, cfg) == 2.5);
  CHECK(denorm_eta(-1.0) == doctest::Approx(semantic::kEtaMin));
  CHECK(denorm_eta(1.0) == doctest::Approx(1.0));
  CHECK(denorm_eta(0.0) == doctest::Approx((semantic::kEtaMin + 1.0) / 2.0));
  CHECK(denorm_delta(-1.0, cfg) == doctest::Approx(-10.0));
  CHECK(denorm_delta(1.0, cfg) == doctest::Approx(10.0));
  CHECK(denorm_delta(0.0, cfg) == 0.0);
}

TEST_CASE("denormalize and normalize are mutually inverse") {
  env::EnvConfig cfg = small_config(3, 2);
  RandomStream rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> raw(2 * 3 + 2);
    for (auto& r : raw) r = rng.uniform(-1.0, 1.0);
    const env::HybridAction a = denormalize(raw, cfg);
    for (double p : a.powers_w) {
      CHECK(p >= 0.0);
      CHECK(p <= cfg.max_power_w);
    }
    for (double e : a.etas) {
      CHECK(e >= semantic::kEtaMin);
      CHECK(e <= 1.0);
    }
    CHECK(std::abs(a.delta_x) <= cfg.slot_seconds * cfg.max_speed_mps);
    const auto round = normalize(a, cfg);
    for (std::size_t i = 0; i < raw.size(); ++i)
      CHECK(round[i] == doctest::Approx(raw[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(denormalize(std::vector<double>(5, 0.0), cfg),
                  std::invalid_argument);
}

TEST_CASE("gaussian log-density matches the closed form") {
  CHECK(gaussian_log_prob({0.0}, {0.0}, {1.0}) ==
        doctest::Approx(-0.91894).epsilon(1e-4));
  CHECK(gaussian_log_prob({0.0}, {0.0}, {1.0}) ==
        doctest::Approx(-0.9189385332046727).epsilon(1e-14));
  CHECK(gaussian_log_prob({1.0}, {0.0}, {1.0}) ==
        doctest::Approx(-1.4189385332046727).epsilon(1e-14));
  const double two_dim = gaussian_log_prob({0.3, -0.2}, {0.1, 0.1}, {0.5, 2.0});
  const double split = gaussian_log_prob({0.3}, {0.1}, {0.5}) +
                       gaussian_log_prob({-0.2}, {0.1}, {2.0});
  CHECK(two_dim == doctest::Approx(split).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_log_prob({0.0}, {0.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_log_prob({0.0}, {0.0}, {-1.0}), std::invalid_argument);
}

TEST_CASE("the temporal-difference target and advantage arithmetic") {
  SUBCASE("one-step bootstrap") {
    const auto td = td_advantage({0.5}, {1.0}, {1.0}, {0}, 0.99);
    CHECK(td.targets[0] == doctest::Approx(1.49));
    CHECK(td.raw_advantages[0] == doctest::Approx(0.49));
  }
  SUBCASE("terminal steps do not bootstrap") {
    const auto td = td_advantage({0.5, 2.0}, {1.0, 1.0}, {9.0, 9.0}, {1, 1}, 0.99);
    CHECK(td.targets[0] == doctest::Approx(0.5));
    CHECK(td.targets[1] == doctest::Approx(2.0));
  }
  SUBCASE("zero discount reduces targets to the rewards") {
    const auto td = td_advantage({0.5, -1.0, 3.0}, {0.0, 0.0, 0.0},
                                 {5.0, 5.0, 5.0}, {0, 0, 0}, 0.0);
    CHECK(td.targets[0] == 0.5);
    CHECK(td.targets[1] == -1.0);
    CHECK(td.targets[2] == 3.0);
  }
  SUBCASE("advantages are normalized per batch") {
    const auto td = td_advantage({1.0, 2.0, 3.0, 4.0}, {0.0, 0.0, 0.0, 0.0},
                                 {0.0, 0.0, 0.0, 0.0}, {1, 1, 1, 1}, 0.99);
    double mean = 0.0, var = 0.0;
    for (double a : td.advantages) mean += a;
    mean /= 4.0;
    for (double a : td.advantages) var += (a - mean) * (a - mean);
    var /= 4.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("critic loss is a plain order-free mean squared error") {
  CHECK(critic_loss({1.0}, {1.49}) == doctest::Approx(0.2401).epsilon(1e-12));
  CHECK(critic_loss({0.7, -0.3}, {0.7, -0.3}) == 0.0);
  CHECK(critic_loss({1.0, 2.0, 3.0}, {0.0, 1.0, 5.0}) ==
        doctest::Approx(critic_loss({3.0, 1.0, 2.0}, {5.0, 0.0, 1.0})));
}

TEST_CASE("clipped surrogate loss covers both clip directions") {
  const double lp_old = 0.0;
  SUBCASE("clip binds above for a positive advantage") {
    CHECK(clipped_actor_loss({std::log(1.5)}, {lp_old}, {1.0}, 0.2) ==
          doctest::Approx(-1.2).epsilon(1e-12));
  }
  SUBCASE("on-policy ratio recovers the negative advantage") {
    CHECK(clipped_actor_loss({0.0}, {lp_old}, {0.7}, 0.2) ==
          doctest::Approx(-0.7).epsilon(1e-12));
    CHECK(clipped_actor_loss({0.0}, {lp_old}, {-0.7}, 0.05) ==
          doctest::Approx(0.7).epsilon(1e-12));
  }
  SUBCASE("clip binds below for a negative advantage") {
    CHECK(clipped_actor_loss({std::log(0.5)}, {lp_old}, {-1.0}, 0.2) ==
          doctest::Approx(0.8).epsilon(1e-12));
  }
  SUBCASE("batch averaging") {
    CHECK(clipped_actor_loss({std::log(1.5), 0.0}, {0.0, 0.0}, {1.0, 1.0}, 0.2) ==
          doctest::Approx((-1.2 - 1.0) / 2.0).epsilon(1e-12));
  }
}

TEST_CASE("the categorical head spans exactly the joint assignment space") {
  const auto cfg = small_config(2, 3);
  PPOConfig ppo = small_ppo();
  RandomStream rng(21);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, rng);
  CHECK(policy.discrete_actions() == 16);
  CHECK(policy.nets("discrete").actor.spec().heads[0].size == 16);
}

TEST_CASE("the action-space cap rejects oversized joint spaces") {
  const auto cfg = small_config(2, 3);  // 16 joint assignments
  PPOConfig ppo = small_ppo();
  ppo.action_space_cap = 15;
  RandomStream rng(22);
  CHECK_THROWS_WITH_AS(HybridPolicy(cfg, Algo::hybrid, ppo, rng),
                       doctest::Contains("action_space_cap"), std::invalid_argument);
  ppo.action_space_cap = 16;  // exactly at the cap is allowed
  RandomStream rng2(22);
  CHECK_NOTHROW(HybridPolicy(cfg, Algo::hybrid, ppo, rng2));
}

TEST_CASE("a zero-weight categorical head samples uniformly") {
  const auto cfg = small_config(2, 3);
  PPOConfig ppo = small_ppo();
  ppo.hidden_sizes = {8};
  RandomStream init(23);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, init);
  auto& params = policy.nets("discrete").actor.params();
  std::fill(params.begin(), params.end(), 0.0);

  RandomStream env_rng(24);
  const env::MissionState state = env::reset(cfg, env_rng);
  RandomStream act_rng(25);
  std::map<long long, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto d = policy.act(state, cfg, act_rng, false);
    counts[d.action_index]++;
  }
  REQUIRE(counts.size() == 16);
  for (const auto& [index, count] : counts) {
    CHECK(index >= 0);
    CHECK(index < 16);
    CHECK(std::abs(static_cast<double>(count) / draws - 1.0 / 16.0) < 0.01);
  }
}

TEST_CASE("mean mode with a zero-weight continuous actor hits the midpoints") {
  const auto cfg = small_config(2, 3);
  PPOConfig ppo = small_ppo();
  RandomStream init(26);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, init);
  auto& params = policy.nets("continuous").actor.params();
  std::fill(params.begin(), params.end(), 0.0);

  RandomStream env_rng(27);
  const env::MissionState state = env::reset(cfg, env_rng);
  RandomStream unused(0);
  const auto d = policy.act(state, cfg, unused, true);
  for (double p : d.action.powers_w) CHECK(p == doctest::Approx(2.5));
  for (double e : d.action.etas)
    CHECK(e == doctest::Approx((semantic::kEtaMin + 1.0) / 2.0));
  CHECK(d.action.delta_x == 0.0);
  CHECK(d.action.delta_y == 0.0);
}

TEST_CASE("sampled actions are always legal") {
  const auto cfg = small_config(2, 2);
  PPOConfig ppo = small_ppo();
  ppo.hidden_sizes = {8};
  RandomStream init(28);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, init);
  RandomStream env_rng(29);
  const env::MissionState state = env::reset(cfg, env_rng);
  RandomStream act_rng(30);
  long long violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto d = policy.act(state, cfg, act_rng, false);
    for (const auto& agent_raw : d.raw_c)
      for (double r : agent_raw)
        if (r < -1.0 || r > 1.0) ++violations;
    for (int c : d.action.assignment.choice)
      if (c < 0 || c > 2) ++violations;
    for (double p : d.action.powers_w)
      if (p < 0.0 || p > cfg.max_power_w) ++violations;
    for (double e : d.action.etas)
      if (e < semantic::kEtaMin || e > 1.0) ++violations;
    if (std::abs(d.action.delta_x) > cfg.slot_seconds * cfg.max_speed_mps)
      ++violations;
    if (std::abs(d.action.delta_y) > cfg.slot_seconds * cfg.max_speed_mps)
      ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("stored log-probs are reproducible from the stored actions") {
  const auto cfg = small_config(3, 2);
  PPOConfig ppo = small_ppo();
  RandomStream init(31);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, init);
  RandomStream env_rng(32);
  env::MissionState state = env::reset(cfg, env_rng);
  RandomStream act_rng(33);
  for (int i = 0; i < 200; ++i) {
    const auto d = policy.act(state, cfg, act_rng, false);

    const auto trace = policy.nets("discrete").actor.forward(d.obs_d);
    const double pa =
        std::max(trace.head_out[0][static_cast<std::size_t>(d.action_index)], 1e-12);
    CHECK(std::abs(std::log(pa) - d.log_prob_d) < 1e-10);

    const auto ct = policy.nets("continuous").actor.forward(d.obs_c);
    const double lp = gaussian_log_prob(d.raw_c[0], ct.head_out[0], ct.head_out[1]);
    CHECK(std::abs(lp - d.log_prob_c[0]) < 1e-10);
  }
}

TEST_CASE("an unbounded clip ratio reduces the update to the vanilla surrogate") {
  const auto cfg = small_config(2, 2);
  PPOConfig ppo = small_ppo();
  ppo.clip_ratio = 1e15;  // never binds: |log ratio| is clamped to 30
  ppo.epochs_per_update = 1;
  ppo.minibatch_size = 1 << 20;  // one batch containing everything
  ppo.entropy_coef_discrete = 0.0;
  ppo.entropy_coef_continuous = 0.0;
  ppo.max_grad_norm = 1e18;  // never rescales

  RandomStream init_a(derive_seed(99, 0));
  RandomStream init_b(derive_seed(99, 0));
  HybridPolicy updated(cfg, Algo::hybrid, ppo, init_a);
  HybridPolicy manual(cfg, Algo::hybrid, ppo, init_b);

  const auto buffer = collect(updated, cfg, 16, 4242);
  const double batch = static_cast<double>(buffer.size());

  // Vanilla surrogate on the discrete actor of the identical twin.
  {
    std::vector<double> rewards, values, next_values;
    std::vector<unsigned char> dones;
    for (const auto& tr : buffer) {
      rewards.push_back(tr.reward_d);
      values.push_back(tr.value_d);
      next_values.push_back(tr.next_value_d);
      dones.push_back(tr.done ? 1 : 0);
    }
    const auto td = td_advantage(rewards, values, next_values, dones, ppo.discount);
    nn::MLP& actor = manual.nets("discrete").actor;
    std::vector<double> grad(actor.param_count(), 0.0);
    for (std::size_t t = 0; t < buffer.size(); ++t) {
      const auto trace = actor.forward(buffer[t].obs_d);
      const auto& p = trace.head_out[0];
      const auto a = static_cast<std::size_t>(buffer[t].action_index);
      const double pa = std::max(p[a], 1e-12);
      const double rho = std::exp(
          std::clamp(std::log(pa) - buffer[t].log_prob_d, -30.0, 30.0));
      std::vector<double> up(p.size(), 0.0);
      up[a] = -td.advantages[t] * rho / pa / batch;
      actor.backward(trace, {up}, grad);
    }
    nn::AdamConfig adam;
    adam.learning_rate = ppo.learning_rate;
    nn::Adam opt(actor.param_count(), adam);
    opt.step(actor.params(), grad);
  }

  // Vanilla surrogate on the continuous actor.
  {
    std::vector<double> rewards, values, next_values;
    std::vector<unsigned char> dones;
    for (const auto& tr : buffer) {
      rewards.push_back(tr.reward_c);
      values.push_back(tr.value_c[0]);
      next_values.push_back(tr.next_value_c[0]);
      dones.push_back(tr.done ? 1 : 0);
    }
    const auto td = td_advantage(rewards, values, next_values, dones, ppo.discount);
    nn::MLP& actor = manual.nets("continuous").actor;
    std::vector<double> grad(actor.param_count(), 0.0);
    for (std::size_t t = 0; t < buffer.size(); ++t) {
      const auto trace = actor.forward(buffer[t].obs_c);
      const auto& mu = trace.head_out[0];
      const auto& sigma = trace.head_out[1];
      const auto& x = buffer[t].raw_c[0];
      const double lp = gaussian_log_prob(x, mu, sigma);
      const double rho =
          std::exp(std::clamp(lp - buffer[t].log_prob_c[0], -30.0, 30.0));
      const double g_lp = -td.advantages[t] * rho;
      std::vector<double> up_mu(x.size()), up_sigma(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double z = (x[k] - mu[k]) / sigma[k];
        up_mu[k] = g_lp * z / sigma[k] / batch;
        up_sigma[k] = g_lp * (z * z - 1.0) / sigma[k] / batch;
      }
      actor.backward(trace, {up_mu, up_sigma}, grad);
    }
    nn::AdamConfig adam;
    adam.learning_rate = ppo.learning_rate;
    nn::Adam opt(actor.param_count(), adam);
    opt.step(actor.params(), grad);
  }

  RandomStream update_rng(derive_seed(5, 3));
  updated.update(buffer, ppo, update_rng);

  CHECK(max_rel_diff(updated.nets("discrete").actor.params(),
                     manual.nets("discrete").actor.params()) < 1e-8);
  CHECK(max_rel_diff(updated.nets("continuous").actor.params(),
                     manual.nets("continuous").actor.params()) < 1e-8);
}

TEST_CASE("zero advantages leave the actors untouched") {
  const auto cfg = small_config(2, 2);
  PPOConfig ppo = small_ppo();
  ppo.entropy_coef_discrete = 0.0;
  ppo.entropy_coef_continuous = 0.0;
  RandomStream init(34);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, init);
  auto buffer = collect(policy, cfg, 12, 35);
  // Per-sample TD errors of exactly zero stay zero through normalization;
  // a merely constant nonzero error would pick up accumulation rounding in
  // the batch mean and leak a tiny advantage into the actors.
  for (auto& tr : buffer) {
    tr.reward_d = 0.3;
    tr.reward_c = 0.1;
    tr.value_d = 0.3;
    tr.next_value_d = 0.0;
    tr.value_c = {0.1};
    tr.next_value_c = {0.0};
    tr.done = false;
  }
  const auto actor_d_before = policy.nets("discrete").actor.params();
  const auto actor_c_before = policy.nets("continuous").actor.params();
  const auto critic_d_before = policy.nets("discrete").critic.params();

  RandomStream rng(36);
  const UpdateStats stats = policy.update(buffer, ppo, rng);

  CHECK(policy.nets("discrete").actor.params() == actor_d_before);
  CHECK(policy.nets("continuous").actor.params() == actor_c_before);
  CHECK(policy.nets("discrete").critic.params() != critic_d_before);
  for (const auto& agent : stats.agents) {
    CHECK(std::isfinite(agent.actor_loss));
    CHECK(std::isfinite(agent.critic_loss));
    CHECK(std::isfinite(agent.entropy));
    CHECK(std::isfinite(agent.approx_kl));
  }
}

TEST_CASE("the discrete agent solves a two-armed bandit") {
  const auto cfg = small_config(1, 1);  // 2 joint assignments: off or on
  PPOConfig ppo = small_ppo();
  ppo.hidden_sizes = {16};
  ppo.learning_rate = 3e-3;
  ppo.entropy_coef_discrete = 0.0;
  RandomStream init(37);
  HybridPolicy policy(cfg, Algo::hybrid, ppo, init);

  RandomStream env_rng(38);
  const env::MissionState state = env::reset(cfg, env_rng);
  const auto obs_d = env::observe_discrete(state, cfg);
  RandomStream act_rng(39);
  RandomStream update_rng(40);

  double p_good = 0.0;
  for (int update = 0; update < 2000; ++update) {
    std::vector<Transition> buffer;
    for (int i = 0; i < 32; ++i) {
      auto d = policy.act(state, cfg, act_rng, false);
      Transition tr;
      tr.obs_d = d.obs_d;
      tr.obs_c = d.obs_c;
      tr.action_index = d.action_index;
      tr.raw_c = d.raw_c;
      tr.log_prob_d = d.log_prob_d;
      tr.log_prob_c = d.log_prob_c;
      tr.value_d = d.value_d;
      tr.value_c = d.value_c;
      tr.reward_d = d.action_index == 1 ? 1.0 : 0.0;  // arm 1 pays, arm 0 does not
      tr.reward_c = tr.reward_d;
      tr.done = true;
      tr.next_value_d = 0.0;
      tr.next_value_c.assign(policy.num_continuous_agents(), 0.0);
      buffer.push_back(std::move(tr));
    }
    policy.update(buffer, ppo, update_rng);
    p_good = policy.nets("discrete").actor.forward(obs_d).head_out[0][1];
    if (p_good > 0.95) break;
  }
  CHECK(p_good > 0.95);
}

TEST_CASE("equal power pins every transmit power to the maximum") {
  const auto cfg = small_config(3, 2);
  PPOConfig ppo = small_ppo();
  RandomStream init(41);
  HybridPolicy policy(cfg, Algo::equal_power, ppo, init);
  CHECK(policy.num_continuous_agents() == 1);
  CHECK(policy.continuous_spec(0).dim() == 3 + 2);  // N etas + trajectory
  CHECK(policy.roles() == std::vector<std::string>{"discrete", "scale_trajectory"});

  RandomStream env_rng(42);
  env::MissionState state = env::reset(cfg, env_rng);
  RandomStream act_rng(43);
  for (int i = 0; i < 50; ++i) {
    const auto d = policy.act(state, cfg, act_rng, false);
    for (double p : d.action.powers_w) CHECK(p == 5.0);
  }
}

TEST_CASE("the triple layout owns power in a third, structurally separate agent") {
  const auto cfg = small_config(3, 2);
  PPOConfig ppo = small_ppo();
  RandomStream init(44);
  HybridPolicy policy(cfg, Algo::triple, ppo, init);
  CHECK(policy.roles() ==
        std::vector<std::string>{"discrete", "scale_trajectory", "power"});
  CHECK(policy.num_continuous_agents() == 2);
  CHECK(policy.continuous_spec(0).dim() == 5);
  CHECK(policy.continuous_spec(1).dim() == 3);
  CHECK(&policy.nets("power") != &policy.nets("scale_trajectory"));
  CHECK(policy.nets("power").actor.spec().heads[0].size == 3);
  CHECK(policy.nets("scale_trajectory").actor.spec().heads[0].size == 5);
}

TEST_CASE("pinned sub-agents emit the raw maximum and consume no randomness") {
  const auto cfg = small_config(2, 2);
  PPOConfig ppo = small_ppo();
  RandomStream init(45);
  HybridPolicy policy(cfg, Algo::triple, ppo, init);
  policy.set_pinned(1, true);

  RandomStream env_rng(46);
  const env::MissionState state = env::reset(cfg, env_rng);
  RandomStream act_rng(47);
  const auto d = policy.act(state, cfg, act_rng, false);
  REQUIRE(d.raw_c.size() == 2);
  for (double r : d.raw_c[1]) CHECK(r == 1.0);
  CHECK(d.log_prob_c[1] == 0.0);
  CHECK(d.value_c[1] == 0.0);
  for (double p : d.action.powers_w) CHECK(p == 5.0);

  const auto v = policy.values(state, cfg);
  REQUIRE(v.size() == 3);
  CHECK(v[2] == 0.0);
}

TEST_CASE("triple with a pinned power agent reproduces equal power exactly") {
  auto cfg = small_config(2, 2);
  cfg.data_size_bits = 2e7;  // short missions keep the comparison fast
  PPOConfig ppo = small_ppo();
  ppo.rollout_slots = 16;
  ppo.minibatch_size = 8;
  ppo.epochs_per_update = 2;

  Trainer ep(cfg, Algo::equal_power, ppo, 4321);
  Trainer tp(cfg, Algo::triple, ppo, 4321);
  tp.policy().set_pinned(1, true);

  const auto ep_records = ep.train(6);
  const auto tp_records = tp.train(6);
  REQUIRE(ep_records.size() == tp_records.size());
  for (std::size_t i = 0; i < ep_records.size(); ++i) {
    CHECK(ep_records[i].mission_time_s == tp_records[i].mission_time_s);
    CHECK(ep_records[i].total_reward_d == tp_records[i].total_reward_d);
    CHECK(ep_records[i].total_reward_c == tp_records[i].total_reward_c);
    CHECK(ep_records[i].mean_eta == tp_records[i].mean_eta);
    CHECK(ep_records[i].completed == tp_records[i].completed);
  }
}

TEST_CASE("training runs are deterministic in the seed") {
  auto cfg = small_config(2, 2);
  cfg.data_size_bits = 2e7;
  PPOConfig ppo = small_ppo();
  ppo.rollout_slots = 16;

  Trainer a(cfg, Algo::hybrid, ppo, 777);
  Trainer b(cfg, Algo::hybrid, ppo, 777);
  const auto ra = a.train(5);
  const auto rb = b.train(5);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].mission_time_s == rb[i].mission_time_s);
    CHECK(ra[i].total_reward_d == rb[i].total_reward_d);
    CHECK(ra[i].total_reward_c == rb[i].total_reward_c);
    CHECK(ra[i].mean_eta == rb[i].mean_eta);
  }

  Trainer c(cfg, Algo::hybrid, ppo, 778);
  const auto rc = c.train(5);
  bool any_different = false;
  for (std::size_t i = 0; i < rc.size(); ++i)
    if (rc[i].total_reward_d != ra[i].total_reward_d) any_different = true;
  CHECK(any_different);
}

TEST_CASE("per-agent checkpoints restore the exact policy") {
  const auto cfg = small_config(2, 2);
  PPOConfig ppo = small_ppo();
  RandomStream init_a(48);
  HybridPolicy original(cfg, Algo::hybrid, ppo, init_a);
  { // nudge away from init so the restore is meaningful
    auto buffer = collect(original, cfg, 16, 49);
    RandomStream rng(50);
    original.update(buffer, ppo, rng);
  }

  RandomStream init_b(51);  // different seed: different params before restore
  HybridPolicy restored(cfg, Algo::hybrid, ppo, init_b);
  for (const auto& role : original.roles()) {
    const auto j = nlohmann::json::parse(original.agent_to_json(role).dump());
    restored.agent_from_json(role, j);
    CHECK(restored.nets(role).actor.params() == original.nets(role).actor.params());
    CHECK(restored.nets(role).critic.params() == original.nets(role).critic.params());
  }

  RandomStream env_rng(52);
  const env::MissionState state = env::reset(cfg, env_rng);
  RandomStream r1(53), r2(53);
  const auto da = original.act(state, cfg, r1, true);
  const auto db = restored.act(state, cfg, r2, true);
  CHECK(da.action_index == db.action_index);
  CHECK(da.raw_c[0] == db.raw_c[0]);
}

TEST_CASE("checkpoints guard against mismatched layouts") {
  PPOConfig ppo = small_ppo();
  RandomStream init_a(54);
  HybridPolicy small(small_config(2, 2), Algo::hybrid, ppo, init_a);
  RandomStream init_b(55);
  HybridPolicy large(small_config(3, 2), Algo::hybrid, ppo, init_b);
  const auto j = small.agent_to_json("discrete");
  CHECK_THROWS_AS(large.agent_from_json("discrete", j), std::invalid_argument);
  CHECK_THROWS_AS(large.agent_from_json("continuous", j), std::invalid_argument);
  CHECK_THROWS_AS(large.nets("bogus"), std::invalid_argument);
}

TEST_CASE("the manifest describes every sub-agent") {
  PPOConfig ppo = small_ppo();
  RandomStream init(56);
  HybridPolicy policy(small_config(2, 3), Algo::triple, ppo, init);
  const auto m = policy.manifest();
  CHECK(m.at("algorithm") == "triple");
  CHECK(m.at("num_users") == 2);
  CHECK(m.at("num_channels") == 3);
  CHECK(m.at("discrete_actions") == 16);
  REQUIRE(m.at("agents").size() == 3);
  CHECK(m.at("agents")[0].at("role") == "discrete");
  CHECK(m.at("agents")[2].at("role") == "power");
}

TEST_CASE("baseline policies emit legal, deterministic actions") {
  const auto cfg = small_config(5, 3);
  RandomStream env_rng(57);
  const env::MissionState state = env::reset(cfg, env_rng);

  SUBCASE("random actions stay within every bound") {
    auto fn = random_action();
    RandomStream rng(58);
    for (int i = 0; i < 1000; ++i) {
      const auto a = fn(state, cfg, rng);
      for (int c : a.assignment.choice) {
        CHECK(c >= 0);
        CHECK(c <= 3);
      }
      for (double p : a.powers_w) {
        CHECK(p >= 0.0);
        CHECK(p <= 5.0);
      }
      for (double e : a.etas) {
        CHECK(e >= semantic::kEtaMin);
        CHECK(e <= 1.0);
      }
      CHECK(std::abs(a.delta_x) <= 10.0);
      CHECK(std::abs(a.delta_y) <= 10.0);
    }
  }
  SUBCASE("round robin spreads users over channels and stays put") {
    auto fn = scripted_round_robin_action(0.15, 0.5);
    RandomStream rng(59);
    const auto a = fn(state, cfg, rng);
    CHECK(a.assignment.choice == std::vector<int>{1, 2, 3, 1, 2});
    for (double p : a.powers_w) CHECK(p == 0.15);
    for (double e : a.etas) CHECK(e == 0.5);
    CHECK(a.delta_x == 0.0);
    CHECK(a.delta_y == 0.0);
  }
}

TEST_CASE("training hyperparameter validation names the offending field") {
  PPOConfig ppo;
  ppo.discount = 1.0;
  CHECK_THROWS_WITH_AS(ppo.validate(), doctest::Contains("discount"),
                       std::invalid_argument);
  ppo = PPOConfig{};
  ppo.clip_ratio = 0.0;
  CHECK_THROWS_WITH_AS(ppo.validate(), doctest::Contains("clip_ratio"),
                       std::invalid_argument);
  ppo = PPOConfig{};
  ppo.minibatch_size = 0;
  CHECK_THROWS_WITH_AS(ppo.validate(), doctest::Contains("minibatch_size"),
                       std::invalid_argument);
  ppo = PPOConfig{};
  ppo.hidden_sizes = {};
  CHECK_THROWS_WITH_AS(ppo.validate(), doctest::Contains("hidden_sizes"),
                       std::invalid_argument);
}

TEST_CASE("algorithm names round-trip") {
  CHECK(algo_from_name(algo_name(Algo::hybrid)) == Algo::hybrid);
  CHECK(algo_from_name(algo_name(Algo::equal_power)) == Algo::equal_power);
  CHECK(algo_from_name(algo_name(Algo::triple)) == Algo::triple);
  CHECK_THROWS_AS(algo_from_name("nope"), std::invalid_argument);
}
