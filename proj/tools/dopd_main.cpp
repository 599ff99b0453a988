// Command-line front end: run experiments and presets, validate graph
// sequences, evaluate bound constants, recompute regret from a trajectory.

#include "dopd/experiment.hpp"
#include "dopd/series_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dopd::ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw dopd::ValidationError(path + ": " + e.what());
  }
}

dopd::Vec read_comparator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dopd::ValidationError("cannot open " + path);
  std::vector<double> values;
  if (fs::path(path).extension() == ".json") {
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw dopd::ValidationError("comparator file is not valid JSON");
    const json& arr = j.is_object() ? j.at("x") : j;
    values = arr.get<std::vector<double>>();
  } else {
    std::string tok;
    while (in >> tok) {
      std::stringstream ss(tok);
      std::string cell;
      while (std::getline(ss, cell, ','))
        if (!cell.empty()) values.push_back(std::stod(cell));
    }
  }
  return Eigen::Map<dopd::Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int cmd_run(const std::string& config_path, const std::string& output) {
  dopd::ExperimentConfig cfg = dopd::experiment_config_from_json(read_json(config_path));
  if (!output.empty()) cfg.output_dir = output;
  const auto r = dopd::run_experiment(cfg);
  std::cout << r.summary.dump(2) << '\n';
  std::cerr << "wrote " << r.directory.string() << '\n';
  return 0;
}

int cmd_preset(const std::string& name, int horizon, std::uint64_t seed, std::string output) {
  if (output.empty()) output = "runs/" + name;
  const auto r = dopd::run_preset(name, horizon, seed, output);
  std::cout << r.summary.dump(2) << '\n';
  return 0;
}

int cmd_check_graph(const std::string& path, int horizon) {
  const json doc = read_json(path);
  std::shared_ptr<const dopd::GraphSequence> seq;
  if (doc.contains("scenario") && doc.at("scenario").is_string()) {
    // An experiment config: validate the sequence it would generate.
    auto cfg = dopd::experiment_config_from_json(doc);
    if (horizon > 0) cfg.horizon = horizon;
    try {
      const auto setup = dopd::prepare_experiment(cfg);
      std::cout << dopd::to_json(setup.graph_report).dump(2) << '\n';
      return 0;
    } catch (const dopd::ValidationError& e) {
      std::cout << e.what() << '\n';
      return 2;
    }
  }
  seq = std::make_shared<dopd::GraphSequence>(dopd::graph_sequence_from_json(doc));
  if (horizon <= 0) horizon = std::max(seq->q(), 1);
  const auto report = dopd::check_assumption1(*seq, horizon);
  std::cout << dopd::to_json(report).dump(2) << '\n';
  return report.pass() ? 0 : 2;
}

int cmd_bounds(double eta, int n, int q, const std::string& constants_file) {
  dopd::BoundInputs in;
  if (!constants_file.empty()) in = dopd::bound_inputs_from_json(read_json(constants_file));
  if (eta > 0.0) in.eta = eta;
  if (n > 0) in.n = n;
  if (q > 0) in.q = q;
  std::cout << dopd::to_json(dopd::bound_constants(in)).dump(2) << '\n';
  return 0;
}

int cmd_regret(const std::string& trajectory_path, const std::string& config_path, const std::string& comparator,
               const std::string& output) {
  std::ifstream in(trajectory_path);
  if (!in) throw dopd::ValidationError("cannot open " + trajectory_path);
  const dopd::Trajectory traj = dopd::read_trajectory_csv(in);

  std::string cfg_path = config_path;
  if (cfg_path.empty()) cfg_path = (fs::path(trajectory_path).parent_path() / "config.json").string();
  dopd::ExperimentConfig cfg = dopd::experiment_config_from_json(read_json(cfg_path));
  cfg.horizon = traj.horizon;
  const auto setup = dopd::prepare_experiment(cfg);
  dopd::require(setup.problem->agents() == traj.agents, "trajectory and config disagree on the agent count");

  dopd::Vec x_star;
  json comparator_info;
  if (comparator == "oracle") {
    const auto o = dopd::offline_oracle(*setup.problem, traj.horizon);
    x_star = o.x;
    comparator_info = {{"method", o.method}, {"kkt_residual", o.kkt_residual}, {"value", o.value}};
  } else {
    x_star = read_comparator(comparator);
    comparator_info = {{"method", "file"}, {"path", comparator}};
  }
  const auto regret = dopd::regret_report(traj, *setup.problem, x_star, *setup.penalty);
  const dopd::Vec strict =
      dopd::constraint_regret(traj.constraint_sum, dopd::strict_smooth_max_penalty(traj.constraint_dim, cfg.penalty.mu));
  const auto bounds = dopd::bound_constants(
      dopd::empirical_bound_inputs(traj, *setup.problem, *setup.penalty, setup.graph->eta(), cfg.graph.q));
  const auto table = dopd::regret_table(regret.cost, regret.constraint, strict, bounds);

  const double t = traj.horizon;
  const json summary = {{"horizon", traj.horizon},
                        {"final_cost_regret", regret.cost(traj.horizon - 1)},
                        {"final_avg_cost_regret", regret.cost(traj.horizon - 1) / t},
                        {"final_constraint_regret", regret.constraint(traj.horizon - 1)},
                        {"final_avg_constraint_regret", regret.constraint(traj.horizon - 1) / t},
                        {"final_avg_constraint_regret_strict", strict(traj.horizon - 1) / t},
                        {"c_lambda", traj.c_lambda},
                        {"c_y", traj.c_y},
                        {"c_F", traj.c_penalty},
                        {"comparator", comparator_info}};
  if (output.empty()) {
    dopd::write_regret_csv(table, std::cout);
    std::cerr << summary.dump(2) << '\n';
  } else {
    fs::create_directories(output);
    std::ofstream csv(fs::path(output) / "regret.csv");
    dopd::write_regret_csv(table, csv);
    std::ofstream js(fs::path(output) / "regret_summary.json");
    js << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed online primal-dual simulator"};
  app.require_subcommand(1);

  std::string config_path, output;
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config file")->required();
  run->add_option("--output", output, "Override the output directory");

  std::string preset_name;
  int horizon = 10000;
  std::uint64_t seed = 1;
  auto* preset = app.add_subcommand("preset", "Run a named preset (fig4, fig5, synthetic)");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_option("--horizon", horizon, "Rounds T");
  preset->add_option("--seed", seed, "Base seed");
  preset->add_option("--output", output, "Output root (default runs/<name>)");

  std::string graph_path;
  int check_horizon = 0;
  auto* check = app.add_subcommand("check-graph", "Validate a graph sequence or the one a config generates");
  check->add_option("file", graph_path, "Graph sequence JSON or experiment config")->required();
  check->add_option("--horizon", check_horizon, "Rounds to check (default Q, or the config horizon)");

  double eta = 0.0;
  int n = 0, q = 0;
  std::string constants_file;
  auto* bounds = app.add_subcommand("bounds", "Evaluate the theoretical bound constants");
  bounds->add_option("--eta", eta, "Nondegeneracy bound");
  bounds->add_option("--n", n, "Agent count");
  bounds->add_option("--q", q, "Connectivity window");
  bounds->add_option("--constants-file", constants_file, "JSON with c_x, c_lambda, c_y, c_g, c_f, l_f, l_g, l_F, g_F, c_F");

  std::string trajectory_path, comparator = "oracle", regret_config;
  auto* regret = app.add_subcommand("regret", "Recompute regret from a trajectory CSV");
  regret->add_option("trajectory", trajectory_path, "trajectory.csv")->required();
  regret->add_option("--comparator", comparator, "oracle, or a file with the stacked comparator");
  regret->add_option("--config", regret_config, "Experiment config (default: config.json beside the CSV)");
  regret->add_option("--output", output, "Directory for regret.csv and regret_summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config_path, output);
    if (*preset) return cmd_preset(preset_name, horizon, seed, output);
    if (*check) return cmd_check_graph(graph_path, check_horizon);
    if (*bounds) return cmd_bounds(eta, n, q, constants_file);
    if (*regret) return cmd_regret(trajectory_path, regret_config, comparator, output);
  } catch (const dopd::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
