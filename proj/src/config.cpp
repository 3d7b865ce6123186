#include "uavsc/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uavsc::config {

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config field " + path + ": " + what);
}

double get_double(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

int get_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) field_error(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t get_uint64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !v.is_number_integer())
    field_error(path, "expected an integer");
  if (v.is_number_integer() && v.get<long long>() < 0)
    field_error(path, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) field_error(path, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) field_error(path, "expected a string");
  return v.get<std::string>();
}

void apply_quality(const json& j, semantic::QualityParams& q) {
  if (!j.is_object()) field_error("env.quality", "expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "env.quality." + key;
    if (key == "omega1") q.omega1 = get_double(value, path);
    else if (key == "omega2") q.omega2 = get_double(value, path);
    else if (key == "omega3") q.omega3 = get_double(value, path);
    else if (key == "omega4") q.omega4 = get_double(value, path);
    else field_error(path, "unknown key");
  }
}

void apply_energy(const json& j, semantic::EnergyParams& e) {
  if (!j.is_object()) field_error("env.energy", "expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "env.energy." + key;
    if (key == "latent_size") e.latent_size = get_double(value, path);
    else if (key == "eps_encoder") e.eps_encoder = get_double(value, path);
    else if (key == "eps_decoder") e.eps_decoder = get_double(value, path);
    else if (key == "freq_encoder_hz") e.freq_encoder_hz = get_double(value, path);
    else if (key == "freq_decoder_hz") e.freq_decoder_hz = get_double(value, path);
    else if (key == "work_encoder_cycles")
      e.work_encoder_cycles = get_double(value, path);
    else if (key == "work_decoder_cycles")
      e.work_decoder_cycles = get_double(value, path);
    else field_error(path, "unknown key");
  }
}

void apply_placement(const json& v, env::UserPlacement& placement) {
  const std::string path = "env.user_placement";
  if (v.is_string()) {
    const std::string mode = v.get<std::string>();
    if (mode != "uniform_random")
      field_error(path, "expected \"uniform_random\" or an array of [x, y] pairs");
    placement.mode = env::UserPlacement::Mode::uniform_random;
    placement.positions.clear();
    return;
  }
  if (!v.is_array())
    field_error(path, "expected \"uniform_random\" or an array of [x, y] pairs");
  placement.mode = env::UserPlacement::Mode::fixed;
  placement.positions.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json& p = v[i];
    const std::string ppath = path + "[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != 2)
      field_error(ppath, "expected an [x, y] pair");
    channel::Position3D pos;
    pos.x = get_double(p[0], ppath + "[0]");
    pos.y = get_double(p[1], ppath + "[1]");
    pos.z = 0.0;
    placement.positions.push_back(pos);
  }
}

void apply_env(const json& j, env::EnvConfig& e) {
  if (!j.is_object()) field_error("env", "expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "env." + key;
    if (key == "area_size_m") e.area_size_m = get_double(value, path);
    else if (key == "uav_height_m") e.uav_height_m = get_double(value, path);
    else if (key == "slot_seconds") e.slot_seconds = get_double(value, path);
    else if (key == "max_speed_mps") e.max_speed_mps = get_double(value, path);
    else if (key == "max_power_w") e.max_power_w = get_double(value, path);
    else if (key == "data_size_bits") e.data_size_bits = get_double(value, path);
    else if (key == "max_mission_seconds")
      e.max_mission_seconds = get_double(value, path);
    else if (key == "time_penalty") e.time_penalty = get_double(value, path);
    else if (key == "fail_penalty") e.fail_penalty = get_double(value, path);
    else if (key == "bounds_penalty") e.bounds_penalty = get_double(value, path);
    else if (key == "utility_on_completion")
      e.utility_on_completion = get_bool(value, path);
    else if (key == "num_users") e.channel.num_users = get_int(value, path);
    else if (key == "num_channels") e.channel.num_channels = get_int(value, path);
    else if (key == "bandwidth_hz") e.channel.bandwidth_hz = get_double(value, path);
    else if (key == "noise_power_w")
      e.channel.noise_power_w = get_double(value, path);
    else if (key == "noise_is_psd") e.channel.noise_is_psd = get_bool(value, path);
    else if (key == "beta0") e.channel.beta0 = get_double(value, path);
    else if (key == "alpha") e.channel.alpha = get_double(value, path);
    else if (key == "rician_k") e.channel.rician_k = get_double(value, path);
    else if (key == "lambda") e.weights.lambda = get_double(value, path);
    else if (key == "energy_norm_j") e.weights.energy_norm_j = get_double(value, path);
    else if (key == "quality") apply_quality(value, e.quality);
    else if (key == "energy") apply_energy(value, e.energy);
    else if (key == "user_placement") apply_placement(value, e.placement);
    else field_error(path, "unknown key");
  }
}

void apply_ppo(const json& j, agents::PPOConfig& p) {
  if (!j.is_object()) field_error("ppo", "expected an object");
  for (const auto& [key, value] : j.items()) {
    const std::string path = "ppo." + key;
    if (key == "discount") p.discount = get_double(value, path);
    else if (key == "clip_ratio") p.clip_ratio = get_double(value, path);
    else if (key == "epochs_per_update") p.epochs_per_update = get_int(value, path);
    else if (key == "minibatch_size") p.minibatch_size = get_int(value, path);
    else if (key == "rollout_slots") p.rollout_slots = get_int(value, path);
    else if (key == "entropy_coef_discrete")
      p.entropy_coef_discrete = get_double(value, path);
    else if (key == "entropy_coef_continuous")
      p.entropy_coef_continuous = get_double(value, path);
    else if (key == "value_coef") p.value_coef = get_double(value, path);
    else if (key == "max_grad_norm") p.max_grad_norm = get_double(value, path);
    else if (key == "learning_rate") p.learning_rate = get_double(value, path);
    else if (key == "action_space_cap") {
      if (!value.is_number_integer()) field_error(path, "expected an integer");
      p.action_space_cap = value.get<long long>();
    } else if (key == "hidden_sizes") {
      if (!value.is_array()) field_error(path, "expected an array of integers");
      p.hidden_sizes.clear();
      for (std::size_t i = 0; i < value.size(); ++i)
        p.hidden_sizes.push_back(
            get_int(value[i], path + "[" + std::to_string(i) + "]"));
    } else {
      field_error(path, "unknown key");
    }
  }
}

void apply_root(const json& j, RunConfig& c) {
  if (!j.is_object()) field_error("<root>", "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "env") apply_env(value, c.env);
    else if (key == "ppo") apply_ppo(value, c.ppo);
    else if (key == "algo") c.algo = algo_from_cli_name(get_string(value, "algo"));
    else if (key == "episodes") c.episodes = get_int(value, "episodes");
    else if (key == "seed") c.seed = get_uint64(value, "seed");
    else if (key == "eval_episodes") c.eval_episodes = get_int(value, "eval_episodes");
    else if (key == "checkpoint_interval")
      c.checkpoint_interval = get_int(value, "checkpoint_interval");
    else if (key == "output_dir") c.output_dir = get_string(value, "output_dir");
    else field_error(key, "unknown key");
  }
}

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

void RunConfig::validate() const {
  env.validate();
  ppo.validate();
  if (episodes < 1) throw std::invalid_argument("config field episodes: must be >= 1");
  if (eval_episodes < 1)
    throw std::invalid_argument("config field eval_episodes: must be >= 1");
  if (checkpoint_interval < 1)
    throw std::invalid_argument("config field checkpoint_interval: must be >= 1");
  if (output_dir.empty())
    throw std::invalid_argument("config field output_dir: must be nonempty");
}

std::string algo_cli_name(agents::Algo algo) {
  switch (algo) {
    case agents::Algo::hybrid: return "hybrid";
    case agents::Algo::equal_power: return "ep";
    case agents::Algo::triple: return "triple";
  }
  throw std::logic_error("algo_cli_name: unknown algorithm");
}

agents::Algo algo_from_cli_name(const std::string& name) {
  if (name == "hybrid") return agents::Algo::hybrid;
  if (name == "ep" || name == "equal_power") return agents::Algo::equal_power;
  if (name == "triple") return agents::Algo::triple;
  throw std::invalid_argument("config field algo: must be hybrid, ep or triple, got '" +
                              name + "'");
}

RunConfig config_from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": parse error at line " +
                                std::to_string(line_of_byte(text, e.byte)) + ": " +
                                e.what());
  }
  RunConfig config;
  apply_root(j, config);
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str(), path.string());
}

nlohmann::json to_json(const RunConfig& c) {
  json placement;
  if (c.env.placement.mode == env::UserPlacement::Mode::uniform_random) {
    placement = "uniform_random";
  } else {
    placement = json::array();
    for (const auto& p : c.env.placement.positions)
      placement.push_back(json::array({p.x, p.y}));
  }
  return {
      {"algo", algo_cli_name(c.algo)},
      {"episodes", c.episodes},
      {"seed", c.seed},
      {"eval_episodes", c.eval_episodes},
      {"checkpoint_interval", c.checkpoint_interval},
      {"output_dir", c.output_dir},
      {"env",
       {{"area_size_m", c.env.area_size_m},
        {"uav_height_m", c.env.uav_height_m},
        {"slot_seconds", c.env.slot_seconds},
        {"max_speed_mps", c.env.max_speed_mps},
        {"max_power_w", c.env.max_power_w},
        {"data_size_bits", c.env.data_size_bits},
        {"max_mission_seconds", c.env.max_mission_seconds},
        {"time_penalty", c.env.time_penalty},
        {"fail_penalty", c.env.fail_penalty},
        {"bounds_penalty", c.env.bounds_penalty},
        {"utility_on_completion", c.env.utility_on_completion},
        {"num_users", c.env.channel.num_users},
        {"num_channels", c.env.channel.num_channels},
        {"bandwidth_hz", c.env.channel.bandwidth_hz},
        {"noise_power_w", c.env.channel.noise_power_w},
        {"noise_is_psd", c.env.channel.noise_is_psd},
        {"beta0", c.env.channel.beta0},
        {"alpha", c.env.channel.alpha},
        {"rician_k", c.env.channel.rician_k},
        {"lambda", c.env.weights.lambda},
        {"energy_norm_j", c.env.weights.energy_norm_j},
        {"quality",
         {{"omega1", c.env.quality.omega1},
          {"omega2", c.env.quality.omega2},
          {"omega3", c.env.quality.omega3},
          {"omega4", c.env.quality.omega4}}},
        {"energy",
         {{"latent_size", c.env.energy.latent_size},
          {"eps_encoder", c.env.energy.eps_encoder},
          {"eps_decoder", c.env.energy.eps_decoder},
          {"freq_encoder_hz", c.env.energy.freq_encoder_hz},
          {"freq_decoder_hz", c.env.energy.freq_decoder_hz},
          {"work_encoder_cycles", c.env.energy.work_encoder_cycles},
          {"work_decoder_cycles", c.env.energy.work_decoder_cycles}}},
        {"user_placement", placement}}},
      {"ppo",
       {{"discount", c.ppo.discount},
        {"clip_ratio", c.ppo.clip_ratio},
        {"epochs_per_update", c.ppo.epochs_per_update},
        {"minibatch_size", c.ppo.minibatch_size},
        {"rollout_slots", c.ppo.rollout_slots},
        {"entropy_coef_discrete", c.ppo.entropy_coef_discrete},
        {"entropy_coef_continuous", c.ppo.entropy_coef_continuous},
        {"value_coef", c.ppo.value_coef},
        {"max_grad_norm", c.ppo.max_grad_norm},
        {"learning_rate", c.ppo.learning_rate},
        {"hidden_sizes", c.ppo.hidden_sizes},
        {"action_space_cap", c.ppo.action_space_cap}}}};
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file " + path.string());
  out << to_json(config).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed on config file " + path.string());
}

}  // namespace uavsc::config
