#ifndef UAVSC_CONFIG_HPP
#define UAVSC_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "uavsc/agents.hpp"
#include "uavsc/env.hpp"

namespace uavsc::config {

/// One experiment: environment, learner, algorithm and run bookkeeping.
/// Field defaults reproduce the reference scenario (5 users, 3 channels,
/// 5 MHz, 5 W, 200 m area) so an empty JSON document is a valid config.
struct RunConfig {
  env::EnvConfig env;
  agents::PPOConfig ppo;
  agents::Algo algo = agents::Algo::hybrid;
  int episodes = 5000;
  std::uint64_t seed = 1;
  int eval_episodes = 20;
  int checkpoint_interval = 500;
  std::string output_dir = "runs/default";

  void validate() const;
};

/// Short CLI/config names for the algorithms (ep = equal power).
std::string algo_cli_name(agents::Algo algo);
agents::Algo algo_from_cli_name(const std::string& name);

/// Parse and validate a config document; unspecified fields keep their
/// defaults, unknown keys are rejected by path, parse errors carry the line.
RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text, const std::string& origin);

nlohmann::json to_json(const RunConfig& config);
void save_config(const RunConfig& config, const std::filesystem::path& path);

}  // namespace uavsc::config

#endif  // UAVSC_CONFIG_HPP
