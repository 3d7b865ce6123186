#include "uavsc/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavsc::env {

void EnvConfig::validate() const {
  if (!(area_size_m > 0.0)) throw std::invalid_argument("env.area_size_m: must be > 0");
  if (!(uav_height_m > 0.0)) throw std::invalid_argument("env.uav_height_m: must be > 0");
  if (!(slot_seconds > 0.0)) throw std::invalid_argument("env.slot_seconds: must be > 0");
  if (!(max_speed_mps > 0.0)) throw std::invalid_argument("env.max_speed_mps: must be > 0");
  if (!(max_power_w > 0.0)) throw std::invalid_argument("env.max_power_w: must be > 0");
  if (!(data_size_bits > 0.0))
    throw std::invalid_argument("env.data_size_bits: must be > 0");
  if (!(max_mission_seconds > 0.0))
    throw std::invalid_argument("env.max_mission_seconds: must be > 0");
  if (time_penalty > 0.0) throw std::invalid_argument("env.time_penalty: must be <= 0");
  if (fail_penalty > 0.0) throw std::invalid_argument("env.fail_penalty: must be <= 0");
  if (bounds_penalty > 0.0)
    throw std::invalid_argument("env.bounds_penalty: must be <= 0");
  channel.validate();
  quality.validate();
  energy.validate();
  weights.validate();
  if (placement.mode == UserPlacement::Mode::fixed) {
    if (static_cast<int>(placement.positions.size()) != channel.num_users)
      throw std::invalid_argument(
          "env.user_placement.positions: size must equal channel.num_users");
    for (const auto& p : placement.positions) {
      if (p.x < 0.0 || p.x > area_size_m || p.y < 0.0 || p.y > area_size_m)
        throw std::invalid_argument(
            "env.user_placement.positions: outside the mission area");
    }
  }
  if (max_slots() < 1)
    throw std::invalid_argument("env.max_mission_seconds: shorter than one slot");
}

MissionState reset(const EnvConfig& config, RandomStream& rng) {
  const int n = config.channel.num_users;
  MissionState state;
  state.remaining_bits.assign(n, config.data_size_bits);
  state.uav_x = config.area_size_m / 2.0;
  state.uav_y = config.area_size_m / 2.0;
  state.slot = 0;

  if (config.placement.mode == UserPlacement::Mode::fixed) {
    state.users = config.placement.positions;
    for (auto& p : state.users) p.z = 0.0;
  } else {
    state.users.resize(n);
    for (int i = 0; i < n; ++i) {
      state.users[i].x = rng.uniform(0.0, config.area_size_m);
      state.users[i].y = rng.uniform(0.0, config.area_size_m);
      state.users[i].z = 0.0;
    }
  }

  const channel::Position3D uav{state.uav_x, state.uav_y, config.uav_height_m};
  state.realization = channel::realize_channel(state.users, uav, config.channel, rng);
  return state;
}

std::pair<double, double> reward_components(const std::vector<double>& etas,
                                            const std::vector<int>& utility_users,
                                            bool failed, bool out_of_bounds,
                                            const EnvConfig& config) {
  const double norm = config.resolved_energy_norm();
  const double lambda = config.weights.lambda;
  double quality_sum = 0.0;
  double energy_sum = 0.0;
  for (int n : utility_users) {
    quality_sum += semantic::quality(etas[n], config.quality);
    energy_sum += semantic::energy(etas[n], config.energy) / norm;
  }
  const double utility_term = lambda * quality_sum - (1.0 - lambda) * energy_sum;
  double reward_d = config.time_penalty + utility_term;
  if (failed) reward_d += config.fail_penalty;
  double reward_c = reward_d;
  if (out_of_bounds) reward_c += config.bounds_penalty;
  return {reward_d, reward_c};
}

StepOutcome step(const MissionState& state, const HybridAction& action,
                 const EnvConfig& config, RandomStream& rng) {
  const int n_users = config.channel.num_users;
  if (static_cast<int>(state.remaining_bits.size()) != n_users)
    throw std::invalid_argument("step: state size mismatch");
  if (static_cast<int>(action.assignment.choice.size()) != n_users ||
      static_cast<int>(action.powers_w.size()) != n_users ||
      static_cast<int>(action.etas.size()) != n_users)
    throw std::invalid_argument("step: action size mismatch");

  StepOutcome out;
  out.diagnostics.rates_bps.assign(n_users, 0.0);
  out.diagnostics.delivered_bits.assign(n_users, 0.0);

  // Absorbing terminal: stepping a finished mission is a no-op.
  if (state.all_delivered()) {
    out.next_state = state;
    out.done = true;
    return out;
  }

  out.next_state = state;
  MissionState& next = out.next_state;

  const double L = config.area_size_m;
  const double raw_x = state.uav_x + action.delta_x;
  const double raw_y = state.uav_y + action.delta_y;
  const bool out_of_bounds = raw_x < 0.0 || raw_x > L || raw_y < 0.0 || raw_y > L;
  next.uav_x = std::clamp(raw_x, 0.0, L);
  next.uav_y = std::clamp(raw_y, 0.0, L);
  out.diagnostics.out_of_bounds = out_of_bounds;

  const channel::Position3D uav{next.uav_x, next.uav_y, config.uav_height_m};
  next.realization = channel::realize_channel(next.users, uav, config.channel, rng);

  // Only users with data left transmit; finished users leave the channel.
  std::vector<int> active;
  channel::ChannelAssignment effective;
  effective.choice.assign(n_users, 0);
  for (int n = 0; n < n_users; ++n) {
    if (state.remaining_bits[n] > 0.0) {
      active.push_back(n);
      effective.choice[n] = action.assignment.choice[n];
    }
  }

  const std::vector<double> rates =
      channel::all_rates(next.realization, effective, action.powers_w, config.channel);

  std::vector<int> completed_now;
  for (int n : active) {
    const double delivered =
        std::min(state.remaining_bits[n], rates[n] * config.slot_seconds);
    next.remaining_bits[n] = state.remaining_bits[n] - delivered;
    out.diagnostics.rates_bps[n] = rates[n];
    out.diagnostics.delivered_bits[n] = delivered;
    if (next.remaining_bits[n] <= 0.0) {
      next.remaining_bits[n] = 0.0;
      completed_now.push_back(n);
    }
  }

  next.slot = state.slot + 1;
  if (next.all_delivered()) {
    out.done = true;
  } else if (next.slot > config.max_slots()) {
    out.done = true;
    out.failed = true;
  }

  const std::vector<int>& utility_users =
      config.utility_on_completion ? completed_now : active;
  const auto [reward_d, reward_c] =
      reward_components(action.etas, utility_users, out.failed, out_of_bounds, config);
  out.reward_discrete = reward_d;
  out.reward_continuous = reward_c;

  const double norm = config.resolved_energy_norm();
  double eta_sum = 0.0;
  for (int n : utility_users) {
    out.diagnostics.quality_sum += semantic::quality(action.etas[n], config.quality);
    out.diagnostics.energy_sum_j += semantic::energy(action.etas[n], config.energy);
  }
  for (int n : active) eta_sum += action.etas[n];
  out.diagnostics.utility = config.weights.lambda * out.diagnostics.quality_sum -
                            (1.0 - config.weights.lambda) *
                                (out.diagnostics.energy_sum_j / norm);
  out.diagnostics.active_users = static_cast<int>(active.size());
  out.diagnostics.mean_eta = active.empty() ? 0.0 : eta_sum / active.size();
  return out;
}

long long discrete_action_count(int num_users, int num_channels) {
  if (num_users < 1 || num_channels < 1)
    throw std::invalid_argument("discrete_action_count: bad dimensions");
  const long long base = num_channels + 1;
  long long count = 1;
  for (int n = 0; n < num_users; ++n) {
    if (count > (1LL << 62) / base)
      throw std::overflow_error("discrete_action_count: (M+1)^N overflows");
    count *= base;
  }
  return count;
}

long long encode_discrete(const channel::ChannelAssignment& assignment,
                          int num_channels) {
  const long long base = num_channels + 1;
  long long index = 0;
  long long weight = 1;
  for (std::size_t n = 0; n < assignment.choice.size(); ++n) {
    const int c = assignment.choice[n];
    if (c < 0 || c > num_channels)
      throw std::invalid_argument("encode_discrete: channel choice out of range");
    index += c * weight;
    if (n + 1 < assignment.choice.size()) {
      if (weight > (1LL << 62) / base)
        throw std::overflow_error("encode_discrete: index overflows");
      weight *= base;
    }
  }
  return index;
}

channel::ChannelAssignment decode_discrete(long long index, int num_users,
                                           int num_channels) {
  const long long count = discrete_action_count(num_users, num_channels);
  if (index < 0 || index >= count)
    throw std::out_of_range("decode_discrete: index out of range");
  const long long base = num_channels + 1;
  channel::ChannelAssignment assignment;
  assignment.choice.resize(num_users);
  for (int n = 0; n < num_users; ++n) {
    assignment.choice[n] = static_cast<int>(index % base);
    index /= base;
  }
  return assignment;
}

std::vector<double> observe_discrete(const MissionState& state,
                                     const EnvConfig& config) {
  const int n_users = config.channel.num_users;
  const int n_channels = config.channel.num_channels;
  std::vector<double> features;
  features.reserve(static_cast<std::size_t>(n_users) * (1 + n_channels));
  for (int n = 0; n < n_users; ++n)
    features.push_back(state.remaining_bits[n] / config.data_size_bits);
  // log compression keeps the CNR dynamic range network-friendly
  for (int n = 0; n < n_users; ++n)
    for (int m = 0; m < n_channels; ++m)
      features.push_back(std::log10(1.0 + state.realization.cnrs(n, m)) / 10.0);
  return features;
}

std::vector<double> observe_continuous(const MissionState& state,
                                       const EnvConfig& config) {
  std::vector<double> features = observe_discrete(state, config);
  features.push_back(state.uav_x / config.area_size_m);
  features.push_back(state.uav_y / config.area_size_m);
  return features;
}

}  // namespace uavsc::env
