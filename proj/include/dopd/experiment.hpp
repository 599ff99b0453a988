#pragma once

// Reproducible experiments: a serializable config, a runner that persists
// trajectory, regret and summary files, and the named presets.

#include "dopd/engine.hpp"
#include "dopd/metrics.hpp"
#include "dopd/routing.hpp"
#include "dopd/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dopd {

struct GraphParams {
  /// "ring", "complete", or "geometric" (routing communication graph).
  std::string base = "ring";
  int q = 1;
  double extra_edge_prob = 0.1;
};

struct ExperimentConfig {
  std::string scenario = "synthetic";  // synthetic | routing
  std::uint64_t seed = 1;
  int horizon = 1000;
  int agents = 5;  // synthetic only; routing uses routing.n_sources
  SyntheticParams synthetic;
  RoutingParams routing;
  GraphParams graph;
  PenaltySpec penalty;
  StepSize step;
  std::optional<double> dual_cap;
  bool record_snapshots = false;
  std::string output_dir = "run";
};

nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);

/// Objects built from a config before anything runs.
struct ExperimentSetup {
  std::shared_ptr<const OnlineProblem> problem;
  std::shared_ptr<const GraphSequence> graph;
  std::shared_ptr<const PenaltyFunction> penalty;
  std::optional<RoutingNetwork> network;
  ValidationReport graph_report;
};

/// Builds and validates (graph over max(T, Q) rounds). Throws ValidationError.
ExperimentSetup prepare_experiment(const ExperimentConfig& config);

struct ExperimentResult {
  std::filesystem::path directory;
  Trajectory trajectory;
  RegretReport regret;
  Vec constraint_strict;
  BoundConstants bounds;
  OracleResult comparator;
  nlohmann::json summary;
};

/// Runs and writes config.json, trajectory.csv, regret.csv, summary.json (and
/// positions.csv for routing) into config.output_dir atomically.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Run without touching the filesystem.
ExperimentResult evaluate_experiment(const ExperimentConfig& config);

/// First t such that R(s)/s <= threshold for every s >= t; horizon + 1 if none.
int time_to_threshold(const Vec& cumulative, double threshold);

struct PresetMember {
  std::string label;
  ExperimentConfig config;
};

struct Preset {
  std::string name;
  std::vector<PresetMember> members;
  double cost_threshold;        // on R(t)/t
  double constraint_threshold;  // on R^c(t)/t
};

Preset make_preset(const std::string& name, int horizon, std::uint64_t seed, const std::string& output_root);

struct PresetResult {
  std::vector<std::string> labels;
  std::vector<std::filesystem::path> directories;
  std::vector<int> cost_time_to_threshold;
  std::vector<int> constraint_time_to_threshold;
  nlohmann::json summary;
};

/// Runs every member (concurrently), then writes comparison.csv and
/// preset_summary.json under output_root.
PresetResult run_preset(const std::string& name, int horizon, std::uint64_t seed, const std::string& output_root);

}  // namespace dopd
