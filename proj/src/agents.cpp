#include "uavsc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace uavsc::agents {

namespace {

constexpr double kLogRatioClamp = 30.0;  ///< keeps exp(log ratio) finite
constexpr double kProbFloor = 1e-12;
constexpr double kSigmaFloor = 1e-3;
constexpr double kPolicyGain = 0.01;  ///< near-uniform initial policies
constexpr double kHalfLog2Pi = 0.9189385332046727;

void clip_grad_norm(std::vector<double>& grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.integer(i);
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

SubAgentNets make_nets(int obs_dim, std::vector<nn::HeadSpec> actor_heads,
                       const PPOConfig& ppo, RandomStream& rng) {
  nn::MLPSpec actor_spec;
  actor_spec.input_size = obs_dim;
  actor_spec.hidden_sizes = ppo.hidden_sizes;
  actor_spec.heads = std::move(actor_heads);

  nn::MLPSpec critic_spec;
  critic_spec.input_size = obs_dim;
  critic_spec.hidden_sizes = ppo.hidden_sizes;
  critic_spec.heads = {{"value", 1, nn::HeadKind::linear, 1.0, 0.0}};

  nn::MLP actor(actor_spec);
  nn::MLP critic(critic_spec);
  actor.init(rng);
  critic.init(rng);

  nn::AdamConfig adam;
  adam.learning_rate = ppo.learning_rate;
  const std::size_t na = actor.param_count();
  const std::size_t nc = critic.param_count();
  return SubAgentNets{std::move(actor), std::move(critic), nn::Adam(na, adam),
                      nn::Adam(nc, adam)};
}

bool specs_match(const nn::MLPSpec& a, const nn::MLPSpec& b) {
  if (a.input_size != b.input_size || a.hidden_sizes != b.hidden_sizes ||
      a.heads.size() != b.heads.size())
    return false;
  for (std::size_t i = 0; i < a.heads.size(); ++i) {
    if (a.heads[i].name != b.heads[i].name || a.heads[i].size != b.heads[i].size ||
        a.heads[i].kind != b.heads[i].kind)
      return false;
  }
  return true;
}

}  // namespace

std::string algo_name(Algo algo) {
  switch (algo) {
    case Algo::hybrid: return "hybrid";
    case Algo::equal_power: return "equal_power";
    case Algo::triple: return "triple";
  }
  throw std::logic_error("algo_name: unknown algorithm");
}

Algo algo_from_name(const std::string& name) {
  if (name == "hybrid") return Algo::hybrid;
  if (name == "equal_power") return Algo::equal_power;
  if (name == "triple") return Algo::triple;
  throw std::invalid_argument("algorithm must be hybrid, equal_power or triple, got '" +
                              name + "'");
}

void PPOConfig::validate() const {
  if (!(discount > 0.0) || !(discount < 1.0))
    throw std::invalid_argument("ppo.discount: must be in (0, 1)");
  if (!(clip_ratio > 0.0)) throw std::invalid_argument("ppo.clip_ratio: must be > 0");
  if (epochs_per_update < 1)
    throw std::invalid_argument("ppo.epochs_per_update: must be >= 1");
  if (minibatch_size < 1)
    throw std::invalid_argument("ppo.minibatch_size: must be >= 1");
  if (rollout_slots < 1) throw std::invalid_argument("ppo.rollout_slots: must be >= 1");
  if (entropy_coef_discrete < 0.0)
    throw std::invalid_argument("ppo.entropy_coef_discrete: must be >= 0");
  if (entropy_coef_continuous < 0.0)
    throw std::invalid_argument("ppo.entropy_coef_continuous: must be >= 0");
  if (!(value_coef > 0.0)) throw std::invalid_argument("ppo.value_coef: must be > 0");
  if (!(max_grad_norm > 0.0))
    throw std::invalid_argument("ppo.max_grad_norm: must be > 0");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("ppo.learning_rate: must be > 0");
  for (int h : hidden_sizes)
    if (h < 1) throw std::invalid_argument("ppo.hidden_sizes: entries must be >= 1");
  if (hidden_sizes.empty())
    throw std::invalid_argument("ppo.hidden_sizes: at least one layer");
  if (action_space_cap < 1)
    throw std::invalid_argument("ppo.action_space_cap: must be >= 1");
}

double denorm_power(double raw, const env::EnvConfig& config) {
  return (raw + 1.0) * 0.5 * config.max_power_w;
}

double denorm_eta(double raw) {
  return semantic::kEtaMin + (raw + 1.0) * 0.5 * (1.0 - semantic::kEtaMin);
}

double denorm_delta(double raw, const env::EnvConfig& config) {
  return raw * config.slot_seconds * config.max_speed_mps;
}

double norm_power(double value, const env::EnvConfig& config) {
  return 2.0 * value / config.max_power_w - 1.0;
}

double norm_eta(double value) {
  return 2.0 * (value - semantic::kEtaMin) / (1.0 - semantic::kEtaMin) - 1.0;
}

double norm_delta(double value, const env::EnvConfig& config) {
  return value / (config.slot_seconds * config.max_speed_mps);
}

env::HybridAction denormalize(const std::vector<double>& raw,
                              const env::EnvConfig& config) {
  const int n = config.channel.num_users;
  if (static_cast<int>(raw.size()) != 2 * n + 2)
    throw std::invalid_argument("denormalize: raw vector must have length 2N+2");
  env::HybridAction action;
  action.assignment.choice.assign(n, 0);
  action.etas.resize(n);
  action.powers_w.resize(n);
  for (int i = 0; i < n; ++i) action.etas[i] = denorm_eta(raw[i]);
  for (int i = 0; i < n; ++i) action.powers_w[i] = denorm_power(raw[n + i], config);
  action.delta_x = denorm_delta(raw[2 * n], config);
  action.delta_y = denorm_delta(raw[2 * n + 1], config);
  return action;
}

std::vector<double> normalize(const env::HybridAction& action,
                              const env::EnvConfig& config) {
  const int n = config.channel.num_users;
  if (static_cast<int>(action.etas.size()) != n ||
      static_cast<int>(action.powers_w.size()) != n)
    throw std::invalid_argument("normalize: action size mismatch");
  std::vector<double> raw(2 * n + 2);
  for (int i = 0; i < n; ++i) raw[i] = norm_eta(action.etas[i]);
  for (int i = 0; i < n; ++i) raw[n + i] = norm_power(action.powers_w[i], config);
  raw[2 * n] = norm_delta(action.delta_x, config);
  raw[2 * n + 1] = norm_delta(action.delta_y, config);
  return raw;
}

double gaussian_log_prob(const std::vector<double>& x, const std::vector<double>& mu,
                         const std::vector<double>& sigma) {
  if (x.size() != mu.size() || x.size() != sigma.size())
    throw std::invalid_argument("gaussian_log_prob: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(sigma[i] > 0.0))
      throw std::invalid_argument("gaussian_log_prob: sigma must be > 0");
    const double z = (x[i] - mu[i]) / sigma[i];
    total += -0.5 * z * z - std::log(sigma[i]) - kHalfLog2Pi;
  }
  return total;
}

TdResult td_advantage(const std::vector<double>& rewards,
                      const std::vector<double>& values,
                      const std::vector<double>& next_values,
                      const std::vector<unsigned char>& dones, double discount) {
  const std::size_t n = rewards.size();
  if (values.size() != n || next_values.size() != n || dones.size() != n)
    throw std::invalid_argument("td_advantage: size mismatch");
  if (n == 0) throw std::invalid_argument("td_advantage: empty batch");

  TdResult out;
  out.targets.resize(n);
  out.raw_advantages.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double mask = dones[t] ? 0.0 : 1.0;
    out.targets[t] = rewards[t] + discount * next_values[t] * mask;
    out.raw_advantages[t] = out.targets[t] - values[t];
  }

  double mean = 0.0;
  for (double a : out.raw_advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : out.raw_advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);

  out.advantages.resize(n);
  for (std::size_t t = 0; t < n; ++t)
    out.advantages[t] = (out.raw_advantages[t] - mean) * scale;
  return out;
}

double critic_loss(const std::vector<double>& values,
                   const std::vector<double>& targets) {
  if (values.size() != targets.size() || values.empty())
    throw std::invalid_argument("critic_loss: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - targets[i];
    total += d * d;
  }
  return total / static_cast<double>(values.size());
}

double clipped_actor_loss(const std::vector<double>& log_prob_new,
                          const std::vector<double>& log_prob_old,
                          const std::vector<double>& advantages, double clip_ratio) {
  const std::size_t n = log_prob_new.size();
  if (log_prob_old.size() != n || advantages.size() != n || n == 0)
    throw std::invalid_argument("clipped_actor_loss: size mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double diff =
        std::clamp(log_prob_new[i] - log_prob_old[i], -kLogRatioClamp, kLogRatioClamp);
    const double rho = std::exp(diff);
    const double surr1 = rho * advantages[i];
    const double surr2 =
        std::clamp(rho, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantages[i];
    total += -std::min(surr1, surr2);
  }
  return total / static_cast<double>(n);
}

HybridPolicy::HybridPolicy(const env::EnvConfig& config, Algo algo,
                           const PPOConfig& ppo, RandomStream& init_rng)
    : algo_(algo),
      num_users_(config.channel.num_users),
      num_channels_(config.channel.num_channels),
      discrete_actions_([&] {
        config.validate();
        ppo.validate();
        const long long count =
            env::discrete_action_count(config.channel.num_users,
                                       config.channel.num_channels);
        if (count > ppo.action_space_cap)
          throw std::invalid_argument(
              "joint channel-assignment space (" + std::to_string(count) +
              ") exceeds action_space_cap (" + std::to_string(ppo.action_space_cap) +
              ")");
        return count;
      }()),
      discrete_(make_nets(
          config.channel.num_users * (1 + config.channel.num_channels),
          {{"policy", static_cast<int>(env::discrete_action_count(
                          config.channel.num_users, config.channel.num_channels)),
            nn::HeadKind::softmax, kPolicyGain, 0.0}},
          ppo, init_rng)) {
  const int n = num_users_;
  switch (algo_) {
    case Algo::hybrid:
      specs_.push_back({"continuous", n, n, true, false});
      break;
    case Algo::equal_power:
      specs_.push_back({"scale_trajectory", n, 0, true, false});
      break;
    case Algo::triple:
      specs_.push_back({"scale_trajectory", n, 0, true, false});
      specs_.push_back({"power", 0, n, false, false});
      break;
  }
  const int obs_c_dim = n * (1 + num_channels_) + 2;
  for (const auto& spec : specs_) {
    ContinuousRuntime rt{
        make_nets(obs_c_dim,
                  {{"mu", spec.dim(), nn::HeadKind::linear, kPolicyGain, 0.0},
                   {"sigma", spec.dim(), nn::HeadKind::softplus, kPolicyGain,
                    kSigmaFloor}},
                  ppo, init_rng),
        0, 1};
    continuous_.push_back(std::move(rt));
  }
}

std::vector<std::string> HybridPolicy::roles() const {
  std::vector<std::string> out{"discrete"};
  for (const auto& spec : specs_) out.push_back(spec.role);
  return out;
}

SubAgentNets& HybridPolicy::nets(const std::string& role) {
  if (role == "discrete") return discrete_;
  for (std::size_t i = 0; i < specs_.size(); ++i)
    if (specs_[i].role == role) return continuous_[i].nets;
  throw std::invalid_argument("no sub-agent with role '" + role + "'");
}

const SubAgentNets& HybridPolicy::nets(const std::string& role) const {
  return const_cast<HybridPolicy*>(this)->nets(role);
}

HybridPolicy::ActOutput HybridPolicy::act(const env::MissionState& state,
                                          const env::EnvConfig& config,
                                          RandomStream& rng, bool mean_mode) const {
  ActOutput out;
  out.obs_d = env::observe_discrete(state, config);
  out.obs_c = env::observe_continuous(state, config);

  // discrete sub-agent: categorical over joint assignments
  const auto actor_trace = discrete_.actor.forward(out.obs_d);
  const auto& probs = actor_trace.head_out[0];
  long long index = 0;
  if (mean_mode) {
    index = static_cast<long long>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
  } else {
    const double u = rng.uniform();
    double cumulative = 0.0;
    index = static_cast<long long>(probs.size()) - 1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      cumulative += probs[k];
      if (u < cumulative) {
        index = static_cast<long long>(k);
        break;
      }
    }
  }
  out.action_index = index;
  out.log_prob_d = std::log(std::max(probs[index], kProbFloor));
  out.value_d = discrete_.critic.forward(out.obs_d).head_out[0][0];
  out.action.assignment = env::decode_discrete(index, num_users_, num_channels_);

  // defaults for parts no sub-agent owns (equal-power has no power agent)
  out.action.etas.assign(num_users_, 1.0);
  out.action.powers_w.assign(num_users_, config.max_power_w);
  out.action.delta_x = 0.0;
  out.action.delta_y = 0.0;

  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const ContinuousSpec& spec = specs_[i];
    const int dim = spec.dim();
    std::vector<double> raw(dim, 1.0);
    double log_prob = 0.0;
    double value = 0.0;
    if (!spec.pinned) {
      const auto trace = continuous_[i].nets.actor.forward(out.obs_c);
      const auto& mu = trace.head_out[continuous_[i].mu_head];
      const auto& sigma = trace.head_out[continuous_[i].sigma_head];
      for (int k = 0; k < dim; ++k) {
        const double draw = mean_mode ? mu[k] : mu[k] + sigma[k] * rng.normal();
        raw[k] = std::clamp(draw, -1.0, 1.0);
      }
      log_prob = gaussian_log_prob(raw, mu, sigma);
      value = continuous_[i].nets.critic.forward(out.obs_c).head_out[0][0];
    }

    int at = 0;
    for (int k = 0; k < spec.eta_count; ++k) out.action.etas[k] = denorm_eta(raw[at++]);
    for (int k = 0; k < spec.power_count; ++k)
      out.action.powers_w[k] = denorm_power(raw[at++], config);
    if (spec.trajectory) {
      out.action.delta_x = denorm_delta(raw[at++], config);
      out.action.delta_y = denorm_delta(raw[at++], config);
    }

    out.raw_c.push_back(std::move(raw));
    out.log_prob_c.push_back(log_prob);
    out.value_c.push_back(value);
  }
  return out;
}

std::vector<double> HybridPolicy::values(const env::MissionState& state,
                                         const env::EnvConfig& config) const {
  const auto obs_d = env::observe_discrete(state, config);
  const auto obs_c = env::observe_continuous(state, config);
  std::vector<double> out;
  out.push_back(discrete_.critic.forward(obs_d).head_out[0][0]);
  for (std::size_t i = 0; i < specs_.size(); ++i)
    out.push_back(specs_[i].pinned
                      ? 0.0
                      : continuous_[i].nets.critic.forward(obs_c).head_out[0][0]);
  return out;
}

void HybridPolicy::update_discrete(const std::vector<Transition>& buffer,
                                   const PPOConfig& ppo, RandomStream& rng,
                                   AgentStats& stats) {
  const std::size_t n = buffer.size();
  std::vector<double> rewards(n), values(n), next_values(n);
  std::vector<unsigned char> dones(n);
  for (std::size_t t = 0; t < n; ++t) {
    rewards[t] = buffer[t].reward_d;
    values[t] = buffer[t].value_d;
    next_values[t] = buffer[t].next_value_d;
    dones[t] = buffer[t].done ? 1 : 0;
  }
  const TdResult td = td_advantage(rewards, values, next_values, dones, ppo.discount);

  nn::MLP& actor = discrete_.actor;
  nn::MLP& critic = discrete_.critic;
  std::vector<double> actor_grad(actor.param_count());
  std::vector<double> critic_grad(critic.param_count());
  const double c_ent = ppo.entropy_coef_discrete;

  double sum_actor = 0.0, sum_critic = 0.0, sum_ent = 0.0, sum_kl = 0.0;
  std::size_t count = 0;

  for (int epoch = 0; epoch < ppo.epochs_per_update; ++epoch) {
    const auto perm = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(ppo.minibatch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(ppo.minibatch_size));
      const double batch = static_cast<double>(end - start);
      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);

      for (std::size_t pos = start; pos < end; ++pos) {
        const Transition& tr = buffer[perm[pos]];
        const double advantage = td.advantages[perm[pos]];
        const double target = td.targets[perm[pos]];

        const auto trace = actor.forward(tr.obs_d);
        const auto& p = trace.head_out[0];
        const auto a = static_cast<std::size_t>(tr.action_index);
        const double pa = std::max(p[a], kProbFloor);
        const double log_prob = std::log(pa);
        const double diff =
            std::clamp(log_prob - tr.log_prob_d, -kLogRatioClamp, kLogRatioClamp);
        const double rho = std::exp(diff);
        const double surr1 = rho * advantage;
        const double surr2 =
            std::clamp(rho, 1.0 - ppo.clip_ratio, 1.0 + ppo.clip_ratio) * advantage;
        sum_actor += -std::min(surr1, surr2);

        double entropy = 0.0;
        for (double pk : p)
          if (pk > 0.0) entropy -= pk * std::log(std::max(pk, kProbFloor));

        std::vector<double> up(p.size(), 0.0);
        if (surr1 <= surr2) up[a] += -advantage * rho / pa;
        if (c_ent != 0.0)
          for (std::size_t k = 0; k < p.size(); ++k)
            up[k] += c_ent * (std::log(std::max(p[k], kProbFloor)) + 1.0);
        for (double& u : up) u /= batch;
        actor.backward(trace, {up}, actor_grad);

        const auto critic_trace = critic.forward(tr.obs_d);
        const double v = critic_trace.head_out[0][0];
        sum_critic += (v - target) * (v - target);
        critic.backward(critic_trace,
                        {{ppo.value_coef * 2.0 * (v - target) / batch}}, critic_grad);

        sum_ent += entropy;
        sum_kl += tr.log_prob_d - log_prob;
        ++count;
      }

      clip_grad_norm(actor_grad, ppo.max_grad_norm);
      clip_grad_norm(critic_grad, ppo.max_grad_norm);
      discrete_.actor_opt.step(actor.params(), actor_grad);
      discrete_.critic_opt.step(critic.params(), critic_grad);
    }
  }

  stats.role = "discrete";
  stats.actor_loss = sum_actor / static_cast<double>(count);
  stats.critic_loss = sum_critic / static_cast<double>(count);
  stats.entropy = sum_ent / static_cast<double>(count);
  stats.approx_kl = sum_kl / static_cast<double>(count);
}

void HybridPolicy::update_continuous(int agent, const std::vector<Transition>& buffer,
                                     const PPOConfig& ppo, RandomStream& rng,
                                     AgentStats& stats) {
  const std::size_t n = buffer.size();
  std::vector<double> rewards(n), values(n), next_values(n);
  std::vector<unsigned char> dones(n);
  for (std::size_t t = 0; t < n; ++t) {
    rewards[t] = buffer[t].reward_c;
    values[t] = buffer[t].value_c[agent];
    next_values[t] = buffer[t].next_value_c[agent];
    dones[t] = buffer[t].done ? 1 : 0;
  }
  const TdResult td = td_advantage(rewards, values, next_values, dones, ppo.discount);

  ContinuousRuntime& rt = continuous_[agent];
  nn::MLP& actor = rt.nets.actor;
  nn::MLP& critic = rt.nets.critic;
  std::vector<double> actor_grad(actor.param_count());
  std::vector<double> critic_grad(critic.param_count());
  const double c_ent = ppo.entropy_coef_continuous;
  const int dim = specs_[agent].dim();
  constexpr double kHalfLog2PiE = kHalfLog2Pi + 0.5;

  double sum_actor = 0.0, sum_critic = 0.0, sum_ent = 0.0, sum_kl = 0.0;
  std::size_t count = 0;

  for (int epoch = 0; epoch < ppo.epochs_per_update; ++epoch) {
    const auto perm = shuffled_indices(n, rng);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(ppo.minibatch_size)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(ppo.minibatch_size));
      const double batch = static_cast<double>(end - start);
      std::fill(actor_grad.begin(), actor_grad.end(), 0.0);
      std::fill(critic_grad.begin(), critic_grad.end(), 0.0);

      for (std::size_t pos = start; pos < end; ++pos) {
        const Transition& tr = buffer[perm[pos]];
        const double advantage = td.advantages[perm[pos]];
        const double target = td.targets[perm[pos]];
        const auto& x = tr.raw_c[agent];

        const auto trace = actor.forward(tr.obs_c);
        const auto& mu = trace.head_out[rt.mu_head];
        const auto& sigma = trace.head_out[rt.sigma_head];

        const double log_prob = gaussian_log_prob(x, mu, sigma);
        const double diff = std::clamp(log_prob - tr.log_prob_c[agent],
                                       -kLogRatioClamp, kLogRatioClamp);
        const double rho = std::exp(diff);
        const double surr1 = rho * advantage;
        const double surr2 =
            std::clamp(rho, 1.0 - ppo.clip_ratio, 1.0 + ppo.clip_ratio) * advantage;
        sum_actor += -std::min(surr1, surr2);

        const double g_lp = (surr1 <= surr2) ? -advantage * rho : 0.0;
        std::vector<double> up_mu(dim, 0.0), up_sigma(dim, 0.0);
        double entropy = 0.0;
        for (int k = 0; k < dim; ++k) {
          const double z = (x[k] - mu[k]) / sigma[k];
          up_mu[k] = g_lp * z / sigma[k];
          up_sigma[k] = g_lp * (z * z - 1.0) / sigma[k];
          entropy += kHalfLog2PiE + std::log(sigma[k]);
          if (c_ent != 0.0) up_sigma[k] += -c_ent / sigma[k];
        }
        for (double& u : up_mu) u /= batch;
        for (double& u : up_sigma) u /= batch;
        actor.backward(trace, {up_mu, up_sigma}, actor_grad);

        const auto critic_trace = critic.forward(tr.obs_c);
        const double v = critic_trace.head_out[0][0];
        sum_critic += (v - target) * (v - target);
        critic.backward(critic_trace,
                        {{ppo.value_coef * 2.0 * (v - target) / batch}}, critic_grad);

        sum_ent += entropy;
        sum_kl += tr.log_prob_c[agent] - log_prob;
        ++count;
      }

      clip_grad_norm(actor_grad, ppo.max_grad_norm);
      clip_grad_norm(critic_grad, ppo.max_grad_norm);
      rt.nets.actor_opt.step(actor.params(), actor_grad);
      rt.nets.critic_opt.step(critic.params(), critic_grad);
    }
  }

  stats.role = specs_[agent].role;
  stats.actor_loss = sum_actor / static_cast<double>(count);
  stats.critic_loss = sum_critic / static_cast<double>(count);
  stats.entropy = sum_ent / static_cast<double>(count);
  stats.approx_kl = sum_kl / static_cast<double>(count);
}

UpdateStats HybridPolicy::update(const std::vector<Transition>& buffer,
                                 const PPOConfig& ppo, RandomStream& rng) {
  if (buffer.empty()) throw std::invalid_argument("update: empty buffer");
  ppo.validate();
  UpdateStats stats;
  stats.agents.emplace_back();
  update_discrete(buffer, ppo, rng, stats.agents.back());
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    stats.agents.emplace_back();
    stats.agents.back().role = specs_[i].role;
    if (!specs_[i].pinned)
      update_continuous(static_cast<int>(i), buffer, ppo, rng, stats.agents.back());
  }
  return stats;
}

nlohmann::json HybridPolicy::manifest() const {
  nlohmann::json agents = nlohmann::json::array();
  agents.push_back({{"role", "discrete"},
                    {"kind", "discrete"},
                    {"action_dim", discrete_actions_}});
  for (const auto& spec : specs_) {
    agents.push_back({{"role", spec.role},
                      {"kind", "continuous"},
                      {"action_dim", spec.dim()},
                      {"pinned", spec.pinned}});
  }
  return {{"algorithm", algo_name(algo_)},
          {"num_users", num_users_},
          {"num_channels", num_channels_},
          {"discrete_actions", discrete_actions_},
          {"agents", agents}};
}

nlohmann::json HybridPolicy::agent_to_json(const std::string& role) const {
  const SubAgentNets& sub = nets(role);
  return {{"role", role},
          {"actor", sub.actor.to_json()},
          {"critic", sub.critic.to_json()},
          {"actor_opt", sub.actor_opt.to_json()},
          {"critic_opt", sub.critic_opt.to_json()}};
}

void HybridPolicy::agent_from_json(const std::string& role, const nlohmann::json& j) {
  if (j.at("role").get<std::string>() != role)
    throw std::invalid_argument("checkpoint role '" +
                                j.at("role").get<std::string>() +
                                "' does not match requested '" + role + "'");
  SubAgentNets& sub = nets(role);
  nn::MLP actor = nn::MLP::from_json(j.at("actor"));
  nn::MLP critic = nn::MLP::from_json(j.at("critic"));
  if (!specs_match(actor.spec(), sub.actor.spec()) ||
      !specs_match(critic.spec(), sub.critic.spec()))
    throw std::invalid_argument("checkpoint for role '" + role +
                                "' does not match this configuration");
  nn::Adam actor_opt = nn::Adam::from_json(j.at("actor_opt"));
  nn::Adam critic_opt = nn::Adam::from_json(j.at("critic_opt"));
  sub.actor = std::move(actor);
  sub.critic = std::move(critic);
  sub.actor_opt = std::move(actor_opt);
  sub.critic_opt = std::move(critic_opt);
}

Trainer::Trainer(const env::EnvConfig& config, Algo algo, const PPOConfig& ppo,
                 std::uint64_t seed)
    : config_(config),
      ppo_(ppo),
      env_rng_(derive_seed(seed, 1)),
      policy_rng_(derive_seed(seed, 2)),
      update_rng_(derive_seed(seed, 3)),
      policy_([&] {
        RandomStream init_rng(derive_seed(seed, 0));
        return HybridPolicy(config, algo, ppo, init_rng);
      }()) {}

std::vector<EpisodeRecord> Trainer::train(int episodes, const EpisodeHook& on_episode,
                                          const UpdateHook& on_update) {
  std::vector<EpisodeRecord> records;
  records.reserve(static_cast<std::size_t>(std::max(episodes, 0)));
  for (int e = 0; e < episodes; ++e) {
    env::MissionState state = env::reset(config_, env_rng_);
    EpisodeRecord rec;
    rec.episode = ++episodes_done_;
    double eta_sum = 0.0;
    int eta_slots = 0;
    bool done = false;
    bool failed = false;

    while (!done) {
      auto decision = policy_.act(state, config_, policy_rng_, false);
      auto outcome = env::step(state, decision.action, config_, env_rng_);

      Transition tr;
      tr.obs_d = std::move(decision.obs_d);
      tr.obs_c = std::move(decision.obs_c);
      tr.action_index = decision.action_index;
      tr.raw_c = std::move(decision.raw_c);
      tr.log_prob_d = decision.log_prob_d;
      tr.log_prob_c = std::move(decision.log_prob_c);
      tr.value_d = decision.value_d;
      tr.value_c = std::move(decision.value_c);
      tr.reward_d = outcome.reward_discrete;
      tr.reward_c = outcome.reward_continuous;
      tr.done = outcome.done;
      if (outcome.done) {
        tr.next_value_d = 0.0;
        tr.next_value_c.assign(policy_.num_continuous_agents(), 0.0);
      } else {
        const auto v = policy_.values(outcome.next_state, config_);
        tr.next_value_d = v[0];
        tr.next_value_c.assign(v.begin() + 1, v.end());
      }
      buffer_.push_back(std::move(tr));

      rec.total_reward_d += outcome.reward_discrete;
      rec.total_reward_c += outcome.reward_continuous;
      rec.total_energy_j += outcome.diagnostics.energy_sum_j;
      rec.total_quality += outcome.diagnostics.quality_sum;
      if (outcome.diagnostics.active_users > 0) {
        eta_sum += outcome.diagnostics.mean_eta;
        ++eta_slots;
      }

      done = outcome.done;
      failed = outcome.failed;
      state = std::move(outcome.next_state);

      if (static_cast<int>(buffer_.size()) >= ppo_.rollout_slots) {
        const UpdateStats stats = policy_.update(buffer_, ppo_, update_rng_);
        buffer_.clear();
        ++updates_done_;
        if (on_update) on_update(updates_done_, stats);
      }
    }

    rec.mission_time_s = state.slot * config_.slot_seconds;
    rec.completed = !failed;
    rec.mean_eta = eta_slots > 0 ? eta_sum / eta_slots : 0.0;
    records.push_back(rec);
    if (on_episode) on_episode(rec);
  }
  return records;
}

namespace {

TrainResult run_algo(const env::EnvConfig& config, const PPOConfig& ppo,
                     std::uint64_t seed, int episodes, Algo algo) {
  Trainer trainer(config, algo, ppo, seed);
  TrainResult result;
  result.episodes = trainer.train(episodes);
  return result;
}

}  // namespace

TrainResult run_hybrid(const env::EnvConfig& config, const PPOConfig& ppo,
                       std::uint64_t seed, int episodes) {
  return run_algo(config, ppo, seed, episodes, Algo::hybrid);
}

TrainResult run_equal_power(const env::EnvConfig& config, const PPOConfig& ppo,
                            std::uint64_t seed, int episodes) {
  return run_algo(config, ppo, seed, episodes, Algo::equal_power);
}

TrainResult run_triple_ppo(const env::EnvConfig& config, const PPOConfig& ppo,
                           std::uint64_t seed, int episodes) {
  return run_algo(config, ppo, seed, episodes, Algo::triple);
}

PolicyFn mean_policy(const HybridPolicy& policy) {
  return [&policy](const env::MissionState& state, const env::EnvConfig& config,
                   RandomStream& rng) {
    return policy.act(state, config, rng, true).action;
  };
}

PolicyFn random_action() {
  return [](const env::MissionState& state, const env::EnvConfig& config,
            RandomStream& rng) {
    (void)state;
    const int n = config.channel.num_users;
    const long long count =
        env::discrete_action_count(n, config.channel.num_channels);
    const long long index =
        static_cast<long long>(rng.integer(static_cast<std::uint64_t>(count)));
    std::vector<double> raw(2 * n + 2);
    for (double& r : raw) r = rng.uniform(-1.0, 1.0);
    env::HybridAction action = denormalize(raw, config);
    action.assignment =
        env::decode_discrete(index, n, config.channel.num_channels);
    return action;
  };
}

PolicyFn scripted_round_robin_action(double power_w, double eta) {
  return [power_w, eta](const env::MissionState& state, const env::EnvConfig& config,
                        RandomStream& rng) {
    (void)state;
    (void)rng;
    const int n = config.channel.num_users;
    const int m = config.channel.num_channels;
    env::HybridAction action;
    action.assignment.choice.resize(n);
    for (int i = 0; i < n; ++i) action.assignment.choice[i] = i % m + 1;
    action.powers_w.assign(n, power_w);
    action.etas.assign(n, eta);
    action.delta_x = 0.0;
    action.delta_y = 0.0;
    return action;
  };
}

}  // namespace uavsc::agents
