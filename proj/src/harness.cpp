#include "uavsc/harness.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "uavsc/csv.hpp"
#include "uavsc/semantic.hpp"

namespace uavsc::harness {

namespace {

using csv::format_double;

constexpr std::uint64_t kEvalSeedTag = 1000;  ///< clear of the trainer's 0-3 tags

const std::vector<std::string> kMetricsHeader = {
    "episode",    "mission_time_s", "completed",      "total_reward_d",
    "total_reward_c", "mean_eta",   "total_energy_j", "total_quality"};

std::vector<std::string> metrics_row(const agents::EpisodeRecord& rec) {
  return {std::to_string(rec.episode),
          format_double(rec.mission_time_s),
          rec.completed ? "1" : "0",
          format_double(rec.total_reward_d),
          format_double(rec.total_reward_c),
          format_double(rec.mean_eta),
          format_double(rec.total_energy_j),
          format_double(rec.total_quality)};
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed on " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  return j;
}

}  // namespace

TrainOutcome train(const config::RunConfig& config) {
  config.validate();
  const std::filesystem::path out_dir(config.output_dir);
  std::filesystem::create_directories(out_dir);
  config::save_config(config, out_dir / "config.json");

  csv::CsvWriter metrics(out_dir / "metrics.csv", kMetricsHeader);
  agents::Trainer trainer(config.env, config.algo, config.ppo, config.seed);

  TrainOutcome outcome;
  outcome.metrics_csv = metrics.path();
  const auto on_episode = [&](const agents::EpisodeRecord& rec) {
    metrics.row(metrics_row(rec));
    if (rec.episode % config.checkpoint_interval == 0 &&
        rec.episode < config.episodes) {
      save_checkpoint(trainer.policy(),
                      out_dir / ("checkpoint_ep" + std::to_string(rec.episode)));
    }
  };
  outcome.episodes = trainer.train(config.episodes, on_episode);

  outcome.final_checkpoint = out_dir / "checkpoint_final";
  save_checkpoint(trainer.policy(), outcome.final_checkpoint);
  return outcome;
}

void save_checkpoint(const agents::HybridPolicy& policy,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(policy.manifest(), dir / "manifest.json");
  for (const auto& role : policy.roles())
    write_json_file(policy.agent_to_json(role), dir / ("agent_" + role + ".json"));
}

agents::HybridPolicy load_checkpoint(const config::RunConfig& config,
                                     const std::filesystem::path& dir) {
  const nlohmann::json manifest = read_json_file(dir / "manifest.json");
  const auto algo = agents::algo_from_name(manifest.at("algorithm").get<std::string>());
  if (manifest.at("num_users").get<int>() != config.env.channel.num_users ||
      manifest.at("num_channels").get<int>() != config.env.channel.num_channels)
    throw std::invalid_argument("checkpoint " + dir.string() +
                                " was written for a different scenario size");

  RandomStream scratch_rng(0);
  agents::HybridPolicy policy(config.env, algo, config.ppo, scratch_rng);
  for (const auto& role : policy.roles())
    policy.agent_from_json(role, read_json_file(dir / ("agent_" + role + ".json")));
  return policy;
}

EvalSummary evaluate_policy(const env::EnvConfig& config,
                            const agents::PolicyFn& policy, int episodes,
                            std::uint64_t seed, bool freeze_seed,
                            const std::optional<std::filesystem::path>& trace_csv) {
  if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
  config.validate();

  std::optional<csv::CsvWriter> trace;
  if (trace_csv) {
    std::vector<std::string> header = {"slot", "uav_x", "uav_y"};
    for (int n = 0; n < config.channel.num_users; ++n)
      header.push_back("remaining_" + std::to_string(n));
    for (int n = 0; n < config.channel.num_users; ++n)
      header.push_back("rate_" + std::to_string(n));
    header.push_back("reward_d");
    header.push_back("reward_c");
    trace.emplace(*trace_csv, header);
  }

  EvalSummary summary;
  summary.episodes = episodes;
  std::vector<double> mission_times;
  mission_times.reserve(episodes);

  for (int e = 0; e < episodes; ++e) {
    const std::uint64_t tag = kEvalSeedTag + (freeze_seed ? 0 : e);
    RandomStream rng(derive_seed(seed, tag));
    env::MissionState state = env::reset(config, rng);

    double eta_sum = 0.0;
    int eta_slots = 0;
    bool done = false;
    bool failed = false;
    while (!done) {
      const env::HybridAction action = policy(state, config, rng);
      env::StepOutcome out = env::step(state, action, config, rng);

      summary.mean_reward_d += out.reward_discrete;
      summary.mean_reward_c += out.reward_continuous;
      summary.mean_energy_j += out.diagnostics.energy_sum_j;
      summary.mean_quality += out.diagnostics.quality_sum;
      if (out.diagnostics.active_users > 0) {
        eta_sum += out.diagnostics.mean_eta;
        ++eta_slots;
      }

      if (trace && e == 0) {
        std::vector<std::string> row = {std::to_string(out.next_state.slot),
                                        format_double(out.next_state.uav_x),
                                        format_double(out.next_state.uav_y)};
        for (double r : out.next_state.remaining_bits)
          row.push_back(format_double(r));
        for (double r : out.diagnostics.rates_bps) row.push_back(format_double(r));
        row.push_back(format_double(out.reward_discrete));
        row.push_back(format_double(out.reward_continuous));
        trace->row(row);
      }

      done = out.done;
      failed = out.failed;
      state = std::move(out.next_state);
    }

    mission_times.push_back(state.slot * config.slot_seconds);
    if (!failed) summary.completion_rate += 1.0;
    summary.mean_eta += eta_slots > 0 ? eta_sum / eta_slots : 0.0;
  }

  const double n = static_cast<double>(episodes);
  double mean_time = 0.0;
  for (double t : mission_times) mean_time += t;
  mean_time /= n;
  double var = 0.0;
  for (double t : mission_times) var += (t - mean_time) * (t - mean_time);
  summary.mean_mission_time_s = mean_time;
  summary.std_mission_time_s = std::sqrt(var / n);
  summary.completion_rate /= n;
  summary.mean_eta /= n;
  summary.mean_energy_j /= n;
  summary.mean_quality /= n;
  summary.mean_reward_d /= n;
  summary.mean_reward_c /= n;
  return summary;
}

EvalSummary evaluate(const config::RunConfig& config,
                     const std::filesystem::path& checkpoint_dir, bool freeze_seed,
                     const std::optional<std::filesystem::path>& trace_csv) {
  config.validate();
  const agents::HybridPolicy policy = load_checkpoint(config, checkpoint_dir);
  return evaluate_policy(config.env, agents::mean_policy(policy),
                         config.eval_episodes, config.seed, freeze_seed, trace_csv);
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::num_users: return "num_users";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::data_size: return "data_size";
  }
  throw std::logic_error("sweep_axis_name: unknown axis");
}

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "num_users") return SweepAxis::num_users;
  if (name == "lambda") return SweepAxis::lambda;
  if (name == "data_size") return SweepAxis::data_size;
  throw std::invalid_argument(
      "sweep axis must be num_users, lambda or data_size, got '" + name + "'");
}

std::vector<SweepRow> sweep(const config::RunConfig& base, SweepAxis axis,
                            const std::vector<double>& values,
                            const std::filesystem::path& out_csv, bool scripted) {
  if (values.empty()) throw std::invalid_argument("sweep: no axis values given");
  csv::CsvWriter out(out_csv,
                     {"axis", "value", "algo", "mean_mission_time_s",
                      "completion_rate", "mean_eta", "mean_quality",
                      "mean_energy_j", "eta_star"});

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    config::RunConfig point = base;
    point.seed = base.seed + i;
    switch (axis) {
      case SweepAxis::num_users: {
        const double v = values[i];
        const int n = static_cast<int>(v);
        if (n < 1 || static_cast<double>(n) != v)
          throw std::invalid_argument("sweep: num_users values must be integers >= 1");
        if (point.env.placement.mode == env::UserPlacement::Mode::fixed)
          throw std::invalid_argument(
              "sweep: num_users axis requires uniform_random user placement");
        point.env.channel.num_users = n;
        break;
      }
      case SweepAxis::lambda:
        point.env.weights.lambda = values[i];
        break;
      case SweepAxis::data_size:
        point.env.data_size_bits = values[i];
        break;
    }
    point.validate();

    SweepRow row;
    row.axis = axis;
    row.value = values[i];
    row.algo = point.algo;
    row.eta_star = semantic::optimal_eta(point.env.weights.lambda, 1000,
                                         point.env.quality, point.env.energy,
                                         point.env.resolved_energy_norm());

    if (scripted) {
      const auto policy = agents::scripted_round_robin_action(
          point.env.max_power_w, row.eta_star);
      row.summary = evaluate_policy(point.env, policy, point.eval_episodes,
                                    point.seed, false);
    } else {
      agents::Trainer trainer(point.env, point.algo, point.ppo, point.seed);
      trainer.train(point.episodes);
      row.summary =
          evaluate_policy(point.env, agents::mean_policy(trainer.policy()),
                          point.eval_episodes, point.seed, false);
    }

    out.row({sweep_axis_name(axis), format_double(row.value),
             config::algo_cli_name(row.algo),
             format_double(row.summary.mean_mission_time_s),
             format_double(row.summary.completion_rate),
             format_double(row.summary.mean_eta),
             format_double(row.summary.mean_quality),
             format_double(row.summary.mean_energy_j),
             format_double(row.eta_star)});
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::pair<agents::Algo, EvalSummary>> compare(
    const config::RunConfig& base, const std::filesystem::path& out_csv) {
  base.validate();
  csv::CsvWriter out(out_csv,
                     {"algo", "episodes", "mean_mission_time_s",
                      "std_mission_time_s", "completion_rate", "mean_eta",
                      "mean_quality", "mean_energy_j"});

  std::vector<std::pair<agents::Algo, EvalSummary>> results;
  for (const auto algo :
       {agents::Algo::hybrid, agents::Algo::equal_power, agents::Algo::triple}) {
    config::RunConfig point = base;
    point.algo = algo;
    agents::Trainer trainer(point.env, point.algo, point.ppo, point.seed);
    trainer.train(point.episodes);
    const EvalSummary summary =
        evaluate_policy(point.env, agents::mean_policy(trainer.policy()),
                        point.eval_episodes, point.seed, false);
    out.row({config::algo_cli_name(algo), std::to_string(point.episodes),
             format_double(summary.mean_mission_time_s),
             format_double(summary.std_mission_time_s),
             format_double(summary.completion_rate),
             format_double(summary.mean_eta), format_double(summary.mean_quality),
             format_double(summary.mean_energy_j)});
    results.emplace_back(algo, summary);
  }
  return results;
}

}  // namespace uavsc::harness
