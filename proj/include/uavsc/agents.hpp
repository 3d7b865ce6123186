#ifndef UAVSC_AGENTS_HPP
#define UAVSC_AGENTS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavsc/env.hpp"
#include "uavsc/nn.hpp"
#include "uavsc/rng.hpp"

namespace uavsc::agents {

/// The trainable algorithms: the hybrid dual-agent scheme and the two
/// benchmarks (equal power, and a third agent dedicated to power control).
enum class Algo { hybrid, equal_power, triple };

std::string algo_name(Algo algo);
Algo algo_from_name(const std::string& name);

struct PPOConfig {
  double discount = 0.99;
  double clip_ratio = 0.2;
  int epochs_per_update = 4;
  int minibatch_size = 64;
  int rollout_slots = 2048;
  double entropy_coef_discrete = 0.01;  ///< keeps the big categorical head alive
  double entropy_coef_continuous = 0.0;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double learning_rate = 3e-4;
  std::vector<int> hidden_sizes{64, 64};
  long long action_space_cap = 65536;  ///< refuse (M+1)^N beyond this

  void validate() const;
};

/// One slot of experience as seen by every sub-agent. Continuous quantities
/// are kept per continuous sub-agent so the same record serves the hybrid
/// (one agent) and triple (two agents) layouts.
struct Transition {
  std::vector<double> obs_d;
  std::vector<double> obs_c;
  long long action_index = 0;
  std::vector<std::vector<double>> raw_c;  ///< clamped raw samples in [-1,1]
  double log_prob_d = 0.0;
  std::vector<double> log_prob_c;
  double reward_d = 0.0;
  double reward_c = 0.0;
  double value_d = 0.0;
  std::vector<double> value_c;
  double next_value_d = 0.0;  ///< V(s'), zero on terminal steps
  std::vector<double> next_value_c;
  bool done = false;
};

struct AgentStats {
  std::string role;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
};

struct UpdateStats {
  std::vector<AgentStats> agents;
};

/// What a continuous sub-agent controls. Raw layout within one agent is
/// [etas..., powers..., dx, dy] for the parts it owns.
struct ContinuousSpec {
  std::string role;
  int eta_count = 0;
  int power_count = 0;
  bool trajectory = false;
  bool pinned = false;  ///< emit raw +1 on every dim, consume no randomness

  int dim() const { return eta_count + power_count + (trajectory ? 2 : 0); }
};

struct SubAgentNets {
  nn::MLP actor;
  nn::MLP critic;
  nn::Adam actor_opt;
  nn::Adam critic_opt;
};

/// Affine [-1,1] maps between raw network space and physical action space.
double denorm_power(double raw, const env::EnvConfig& config);
double denorm_eta(double raw);
double denorm_delta(double raw, const env::EnvConfig& config);
double norm_power(double value, const env::EnvConfig& config);
double norm_eta(double value);
double norm_delta(double value, const env::EnvConfig& config);

/// Full-vector forms over the layout [etas(N), powers(N), dx, dy].
env::HybridAction denormalize(const std::vector<double>& raw,
                              const env::EnvConfig& config);
std::vector<double> normalize(const env::HybridAction& action,
                              const env::EnvConfig& config);

/// Sum over dimensions of the diagonal Gaussian log-density.
double gaussian_log_prob(const std::vector<double>& x, const std::vector<double>& mu,
                         const std::vector<double>& sigma);

struct TdResult {
  std::vector<double> targets;
  std::vector<double> raw_advantages;  ///< target - value, before normalization
  std::vector<double> advantages;      ///< zero mean, unit variance per batch
};

/// One-step TD targets and batch-normalized advantages.
TdResult td_advantage(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      const std::vector<double>& next_values,
                      const std::vector<unsigned char>& dones, double discount);

/// Mean squared error against fixed targets.
double critic_loss(const std::vector<double>& values,
                   const std::vector<double>& targets);

/// Mean over the batch of -min(rho*A, clip(rho, 1-eps, 1+eps)*A). The
/// entropy bonus is applied separately inside update().
double clipped_actor_loss(const std::vector<double>& log_prob_new,
                          const std::vector<double>& log_prob_old,
                          const std::vector<double>& advantages, double clip_ratio);

/// The dual (or triple) PPO policy: one categorical sub-agent over joint
/// channel assignments plus one or two Gaussian sub-agents for the
/// continuous action parts, each with its own critic and optimizer.
class HybridPolicy {
 public:
  HybridPolicy(const env::EnvConfig& config, Algo algo, const PPOConfig& ppo,
               RandomStream& init_rng);

  Algo algo() const { return algo_; }
  long long discrete_actions() const { return discrete_actions_; }
  int num_continuous_agents() const { return static_cast<int>(continuous_.size()); }
  const ContinuousSpec& continuous_spec(int i) const { return specs_[i]; }
  void set_pinned(int i, bool pinned) { specs_[i].pinned = pinned; }

  std::vector<std::string> roles() const;
  SubAgentNets& nets(const std::string& role);
  const SubAgentNets& nets(const std::string& role) const;

  struct ActOutput {
    env::HybridAction action;
    std::vector<double> obs_d;
    std::vector<double> obs_c;
    long long action_index = 0;
    std::vector<std::vector<double>> raw_c;
    double log_prob_d = 0.0;
    std::vector<double> log_prob_c;
    double value_d = 0.0;
    std::vector<double> value_c;
  };

  /// Sample (or take the mode of) the joint hybrid action. mean_mode draws
  /// nothing from rng: argmax index, clamped mu, pinned slots untouched.
  ActOutput act(const env::MissionState& state, const env::EnvConfig& config,
                RandomStream& rng, bool mean_mode) const;

  /// Critic values [discrete, continuous...] of a state; pinned agents
  /// report zero.
  std::vector<double> values(const env::MissionState& state,
                             const env::EnvConfig& config) const;

  /// One PPO update per sub-agent from a rollout buffer, each on its own
  /// reward channel.
  UpdateStats update(const std::vector<Transition>& buffer, const PPOConfig& ppo,
                     RandomStream& rng);

  nlohmann::json manifest() const;
  nlohmann::json agent_to_json(const std::string& role) const;
  void agent_from_json(const std::string& role, const nlohmann::json& j);

 private:
  struct ContinuousRuntime {
    SubAgentNets nets;
    int mu_head = 0, sigma_head = 0;
  };

  void update_discrete(const std::vector<Transition>& buffer, const PPOConfig& ppo,
                       RandomStream& rng, AgentStats& stats);
  void update_continuous(int agent, const std::vector<Transition>& buffer,
                         const PPOConfig& ppo, RandomStream& rng, AgentStats& stats);

  Algo algo_;
  int num_users_ = 0;
  int num_channels_ = 0;
  long long discrete_actions_ = 0;
  SubAgentNets discrete_;
  std::vector<ContinuousSpec> specs_;
  std::vector<ContinuousRuntime> continuous_;
};

/// Episode-level training metrics, one row per episode.
struct EpisodeRecord {
  int episode = 0;
  double mission_time_s = 0.0;
  bool completed = false;
  double total_reward_d = 0.0;
  double total_reward_c = 0.0;
  double mean_eta = 0.0;  ///< time-average of the per-slot active-user mean
  double total_energy_j = 0.0;
  double total_quality = 0.0;
};

/// Rollout-collect / update training loop around one environment instance.
class Trainer {
 public:
  using EpisodeHook = std::function<void(const EpisodeRecord&)>;
  using UpdateHook = std::function<void(long long, const UpdateStats&)>;

  Trainer(const env::EnvConfig& config, Algo algo, const PPOConfig& ppo,
          std::uint64_t seed);

  HybridPolicy& policy() { return policy_; }
  const HybridPolicy& policy() const { return policy_; }
  const env::EnvConfig& config() const { return config_; }

  std::vector<EpisodeRecord> train(int episodes, const EpisodeHook& on_episode = {},
                                   const UpdateHook& on_update = {});

 private:
  env::EnvConfig config_;
  PPOConfig ppo_;
  RandomStream env_rng_;
  RandomStream policy_rng_;
  RandomStream update_rng_;
  HybridPolicy policy_;
  std::vector<Transition> buffer_;
  long long updates_done_ = 0;
  int episodes_done_ = 0;
};

struct TrainResult {
  std::vector<EpisodeRecord> episodes;
};

TrainResult run_hybrid(const env::EnvConfig& config, const PPOConfig& ppo,
                       std::uint64_t seed, int episodes);
TrainResult run_equal_power(const env::EnvConfig& config, const PPOConfig& ppo,
                            std::uint64_t seed, int episodes);
TrainResult run_triple_ppo(const env::EnvConfig& config, const PPOConfig& ppo,
                           std::uint64_t seed, int episodes);

/// A policy as a plain function, for evaluation and baselines.
using PolicyFn = std::function<env::HybridAction(
    const env::MissionState&, const env::EnvConfig&, RandomStream&)>;

PolicyFn mean_policy(const HybridPolicy& policy);
PolicyFn random_action();
/// Deterministic baseline: user n on channel (n mod M) + 1, fixed power and
/// scale, no movement.
PolicyFn scripted_round_robin_action(double power_w, double eta);

}  // namespace uavsc::agents

#endif  // UAVSC_AGENTS_HPP
