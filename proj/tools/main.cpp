#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uavsc/csv.hpp"
#include "uavsc/harness.hpp"

namespace {

using uavsc::config::RunConfig;

struct CommonOpts {
  std::string config_path;
  std::string algo;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_algo = true) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  if (with_algo)
    cmd->add_option("--algo", opts.algo, "algorithm: hybrid, ep or triple")
        ->check(CLI::IsMember({"hybrid", "ep", "equal_power", "triple"}));
  cmd->add_option("--seed", opts.seed, "random seed");
  cmd->add_option("--episodes", opts.episodes, "training episode count");
  cmd->add_option("--out", opts.out_dir, "output directory");
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig config;
  if (!opts.config_path.empty())
    config = uavsc::config::load_config(opts.config_path);
  if (!opts.algo.empty()) config.algo = uavsc::config::algo_from_cli_name(opts.algo);
  if (opts.seed) config.seed = *opts.seed;
  if (opts.episodes) config.episodes = *opts.episodes;
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  config.validate();
  return config;
}

void print_summary(const std::string& label, const uavsc::harness::EvalSummary& s) {
  std::cout << label << ": episodes=" << s.episodes
            << " mean_mission_time_s=" << uavsc::csv::format_double(s.mean_mission_time_s)
            << " std_mission_time_s=" << uavsc::csv::format_double(s.std_mission_time_s)
            << " completion_rate=" << uavsc::csv::format_double(s.completion_rate)
            << " mean_eta=" << uavsc::csv::format_double(s.mean_eta)
            << " mean_quality=" << uavsc::csv::format_double(s.mean_quality)
            << " mean_energy_j=" << uavsc::csv::format_double(s.mean_energy_j) << '\n';
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size())
      throw std::invalid_argument("--values: cannot parse '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("--values: no values given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-assisted semantic data collection: simulator and trainers"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  auto* train_cmd = app.add_subcommand("train", "train one algorithm on one scenario");
  add_common(train_cmd, train_opts);

  CommonOpts eval_opts;
  std::string eval_checkpoint;
  std::string eval_trace;
  int eval_episodes = 0;
  bool eval_freeze = false;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a stored checkpoint");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint directory")
      ->required();
  eval_cmd->add_option("--eval-episodes", eval_episodes, "evaluation episode count");
  eval_cmd->add_option("--trace", eval_trace, "write a per-slot CSV of episode 0");
  eval_cmd->add_flag("--freeze-seed", eval_freeze,
                     "reuse one episode seed for every evaluation episode");

  CommonOpts sweep_opts;
  std::string sweep_axis;
  std::string sweep_values;
  bool sweep_scripted = false;
  auto* sweep_cmd =
      app.add_subcommand("sweep", "train/evaluate along one scenario axis");
  add_common(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", sweep_axis, "num_users, lambda or data_size")
      ->required();
  sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")
      ->required();
  sweep_cmd->add_flag("--scripted", sweep_scripted,
                      "skip training; evaluate the round-robin baseline");

  CommonOpts compare_opts;
  auto* compare_cmd =
      app.add_subcommand("compare", "train all three algorithms on one scenario");
  add_common(compare_cmd, compare_opts, /*with_algo=*/false);

  try {
    app.parse(argc, argv);

    if (train_cmd->parsed()) {
      const RunConfig config = resolve_config(train_opts);
      const auto outcome = uavsc::harness::train(config);
      std::cout << "trained " << outcome.episodes.size() << " episodes, metrics at "
                << outcome.metrics_csv.string() << ", checkpoint at "
                << outcome.final_checkpoint.string() << '\n';
    } else if (eval_cmd->parsed()) {
      RunConfig config = resolve_config(eval_opts);
      if (eval_episodes > 0) config.eval_episodes = eval_episodes;
      std::optional<std::filesystem::path> trace;
      if (!eval_trace.empty()) trace = eval_trace;
      const auto summary =
          uavsc::harness::evaluate(config, eval_checkpoint, eval_freeze, trace);
      print_summary("eval", summary);
    } else if (sweep_cmd->parsed()) {
      const RunConfig config = resolve_config(sweep_opts);
      const auto axis = uavsc::harness::sweep_axis_from_name(sweep_axis);
      const auto values = parse_values(sweep_values);
      const std::filesystem::path out_csv =
          std::filesystem::path(config.output_dir) /
          ("sweep_" + uavsc::harness::sweep_axis_name(axis) + ".csv");
      const auto rows =
          uavsc::harness::sweep(config, axis, values, out_csv, sweep_scripted);
      std::cout << "swept " << rows.size() << " points, table at "
                << out_csv.string() << '\n';
    } else if (compare_cmd->parsed()) {
      const RunConfig config = resolve_config(compare_opts);
      const std::filesystem::path out_csv =
          std::filesystem::path(config.output_dir) / "compare.csv";
      const auto results = uavsc::harness::compare(config, out_csv);
      for (const auto& [algo, summary] : results)
        print_summary(uavsc::config::algo_cli_name(algo), summary);
      std::cout << "comparison table at " << out_csv.string() << '\n';
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
