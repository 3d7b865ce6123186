#ifndef UAVSC_ENV_HPP
#define UAVSC_ENV_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "uavsc/channel.hpp"
#include "uavsc/rng.hpp"
#include "uavsc/semantic.hpp"

namespace uavsc::env {

struct UserPlacement {
  enum class Mode { uniform_random, fixed };
  Mode mode = Mode::uniform_random;
  std::vector<channel::Position3D> positions;  ///< used when mode == fixed
};

/// Everything the mission environment needs: geometry, timing, penalties and
/// the nested radio/semantic parameter blocks.
struct EnvConfig {
  double area_size_m = 200.0;
  double uav_height_m = 100.0;
  double slot_seconds = 1.0;
  double max_speed_mps = 10.0;
  double max_power_w = 5.0;
  double data_size_bits = 1e8;         ///< per-user upload demand U
  double max_mission_seconds = 100.0;  ///< T_max; failure past this horizon
  double time_penalty = -1.0;          ///< per-slot reward component
  double fail_penalty = -100.0;        ///< added once when the horizon is exceeded
  double bounds_penalty = -100.0;      ///< continuous-agent penalty for leaving the area
  /// When true, the utility reward is granted once per user in the slot its
  /// upload completes instead of every slot the user is active.
  bool utility_on_completion = false;
  channel::ChannelParams channel;
  semantic::QualityParams quality;
  semantic::EnergyParams energy;
  semantic::UtilityWeights weights;
  UserPlacement placement;

  int max_slots() const {
    return static_cast<int>(max_mission_seconds / slot_seconds + 1e-9);
  }
  double resolved_energy_norm() const {
    return weights.energy_norm_j > 0.0 ? weights.energy_norm_j
                                       : semantic::default_energy_norm(energy);
  }
  void validate() const;
};

struct MissionState {
  std::vector<double> remaining_bits;           ///< U_res per user
  double uav_x = 0.0, uav_y = 0.0;              ///< horizontal UAV position
  std::vector<channel::Position3D> users;       ///< drawn at reset
  channel::ChannelRealization realization;      ///< fading at the current position
  int slot = 0;

  bool all_delivered() const {
    for (double r : remaining_bits)
      if (r > 0.0) return false;
    return true;
  }
};

/// Joint action of both agents for one slot.
struct HybridAction {
  channel::ChannelAssignment assignment;
  std::vector<double> powers_w;  ///< per user, in [0, max_power_w]
  std::vector<double> etas;      ///< per user, in [kEtaMin, 1]
  double delta_x = 0.0, delta_y = 0.0;
};

struct StepDiagnostics {
  std::vector<double> rates_bps;
  std::vector<double> delivered_bits;
  double quality_sum = 0.0;   ///< sum of Q(eta) over the users in the utility set
  double energy_sum_j = 0.0;  ///< sum of E(eta) over the same users, joules
  double utility = 0.0;       ///< weighted utility term of the reward
  double mean_eta = 0.0;      ///< mean eta over active users this slot
  int active_users = 0;
  bool out_of_bounds = false;
};

struct StepOutcome {
  MissionState next_state;
  double reward_discrete = 0.0;
  double reward_continuous = 0.0;
  bool done = false;
  bool failed = false;
  StepDiagnostics diagnostics;
};

/// Fresh episode: full demand everywhere, UAV at the area center, slot 0,
/// users placed per config, fading drawn at the initial position.
MissionState reset(const EnvConfig& config, RandomStream& rng);

/// One slot: move (clamped to the area), redraw fading, transmit with the
/// active users, update remaining data, assemble both rewards.
StepOutcome step(const MissionState& state, const HybridAction& action,
                 const EnvConfig& config, RandomStream& rng);

/// Reward assembly shared by step: time penalty each slot, utility over the
/// given user set, failure penalty, and the continuous agent's extra
/// out-of-bounds penalty.
std::pair<double, double> reward_components(const std::vector<double>& etas,
                                            const std::vector<int>& utility_users,
                                            bool failed, bool out_of_bounds,
                                            const EnvConfig& config);

/// Base-(M+1) positional encoding of a channel assignment; bijective onto
/// [0, (M+1)^N). Entry n contributes choice[n] * (M+1)^n.
long long encode_discrete(const channel::ChannelAssignment& assignment,
                          int num_channels);

/// Inverse of encode_discrete. Rejects out-of-range indices.
channel::ChannelAssignment decode_discrete(long long index, int num_users,
                                           int num_channels);

/// Number of joint assignments (M+1)^N, guarded against overflow.
long long discrete_action_count(int num_users, int num_channels);

/// Discrete-agent features: per-user normalized remaining data followed by
/// the CNR matrix row-major as log10(1 + cnr) / 10. Length N + N*M.
std::vector<double> observe_discrete(const MissionState& state, const EnvConfig& config);

/// Continuous-agent features: observe_discrete plus the normalized UAV
/// position. Length N + N*M + 2.
std::vector<double> observe_continuous(const MissionState& state,
                                       const EnvConfig& config);

}  // namespace uavsc::env

#endif  // UAVSC_ENV_HPP
