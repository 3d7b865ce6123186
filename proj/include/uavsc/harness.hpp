#ifndef UAVSC_HARNESS_HPP
#define UAVSC_HARNESS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uavsc/agents.hpp"
#include "uavsc/config.hpp"

namespace uavsc::harness {

/// Aggregate evaluation statistics over eval episodes.
struct EvalSummary {
  int episodes = 0;
  double mean_mission_time_s = 0.0;
  double std_mission_time_s = 0.0;
  double completion_rate = 0.0;
  double mean_eta = 0.0;
  double mean_energy_j = 0.0;
  double mean_quality = 0.0;
  double mean_reward_d = 0.0;
  double mean_reward_c = 0.0;
};

struct TrainOutcome {
  std::vector<agents::EpisodeRecord> episodes;
  std::filesystem::path metrics_csv;
  std::filesystem::path final_checkpoint;
};

/// Train per config: per-episode metrics CSV (row-flushed), checkpoints
/// every checkpoint_interval episodes plus a final one, resolved config
/// saved next to them. Deterministic per seed.
TrainOutcome train(const config::RunConfig& config);

/// Write/read a policy as manifest.json plus one agent_<role>.json each.
void save_checkpoint(const agents::HybridPolicy& policy,
                     const std::filesystem::path& dir);
agents::HybridPolicy load_checkpoint(const config::RunConfig& config,
                                     const std::filesystem::path& dir);

/// Roll out a policy function for some episodes; per-episode seeds are
/// derived from seed unless freeze_seed repeats the first episode's draw.
/// If trace_csv is set, the first episode is logged slot by slot.
EvalSummary evaluate_policy(const env::EnvConfig& config,
                            const agents::PolicyFn& policy, int episodes,
                            std::uint64_t seed, bool freeze_seed = false,
                            const std::optional<std::filesystem::path>& trace_csv =
                                std::nullopt);

/// Mean-mode evaluation of a stored checkpoint.
EvalSummary evaluate(const config::RunConfig& config,
                     const std::filesystem::path& checkpoint_dir,
                     bool freeze_seed = false,
                     const std::optional<std::filesystem::path>& trace_csv =
                         std::nullopt);

enum class SweepAxis { num_users, lambda, data_size };

std::string sweep_axis_name(SweepAxis axis);
SweepAxis sweep_axis_from_name(const std::string& name);

struct SweepRow {
  SweepAxis axis;
  double value = 0.0;
  agents::Algo algo;
  EvalSummary summary;
  double eta_star = 0.0;  ///< grid-argmax scale for the point's lambda
};

/// One train+evaluate per axis value (seed offset = base seed + index),
/// appended to a tidy CSV. scripted replaces training with the fixed
/// round-robin policy at full power and the analytic optimal scale.
std::vector<SweepRow> sweep(const config::RunConfig& base, SweepAxis axis,
                            const std::vector<double>& values,
                            const std::filesystem::path& out_csv, bool scripted);

/// Train and evaluate all three algorithms on one scenario and seed.
std::vector<std::pair<agents::Algo, EvalSummary>> compare(
    const config::RunConfig& base, const std::filesystem::path& out_csv);

}  // namespace uavsc::harness

#endif  // UAVSC_HARNESS_HPP
