#include "support.hpp"

#include "dopd/experiment.hpp"
#include "dopd/series_io.hpp"

#include <doctest.h>

#include <sstream>

using namespace dopd;
namespace fs = std::filesystem;

namespace {

ExperimentConfig random_config(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ExperimentConfig c;
  c.scenario = gen() % 2 ? "synthetic" : "routing";
  c.seed = gen();
  c.horizon = 1 + static_cast<int>(gen() % 100000);
  c.agents = 1 + static_cast<int>(gen() % 50);
  c.step = {gen() % 2 ? StepSize::Kind::Constant : StepSize::Kind::InverseSqrt, 0.01 + u(gen)};
  c.penalty = {static_cast<PenaltyKind>(gen() % 3), 1e-4 + u(gen)};
  c.graph = {gen() % 2 ? "ring" : "complete", 1 + static_cast<int>(gen() % 20), u(gen)};
  if (gen() % 2) c.synthetic.targets = {u(gen), u(gen)};
  c.synthetic.noise = u(gen);
  if (gen() % 2) c.synthetic.budget = u(gen);
  if (gen() % 2) c.synthetic.offsets = {u(gen)};
  c.routing.n_sources = 2 + static_cast<int>(gen() % 20);
  c.routing.n_aps = 1 + static_cast<int>(gen() % 3);
  if (gen() % 2) c.routing.positions = {{u(gen), u(gen)}, {u(gen), u(gen)}};
  c.routing.box_width = 0.5 + u(gen);
  c.routing.l = 0.1 + 0.3 * u(gen);
  c.routing.u = 0.5 + 0.4 * u(gen);
  c.routing.noise_amplitude = u(gen);
  if (gen() % 2) c.routing.r_min = {u(gen), u(gen)};
  if (gen() % 2) c.routing.z_max = 1 + u(gen);
  if (gen() % 2) c.dual_cap = 1 + u(gen);
  c.record_snapshots = gen() % 2;
  c.output_dir = "out_" + std::to_string(gen() % 1000);
  return c;
}

ExperimentConfig small_synthetic(const fs::path& dir) {
  ExperimentConfig c;
  c.agents = 4;
  c.horizon = 300;
  c.seed = 99;
  c.output_dir = dir.string();
  return c;
}

}  // namespace

TEST_CASE("property: config round trip") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 200; ++trial) {
    const ExperimentConfig c = random_config(gen);
    const auto j = to_json(c);
    const auto back = experiment_config_from_json(nlohmann::json::parse(j.dump()));
    CHECK(to_json(back) == j);
    CHECK(back.seed == c.seed);
    CHECK(back.routing.positions == c.routing.positions);
    CHECK(back.synthetic.budget == c.synthetic.budget);
  }
}

TEST_CASE("bad configs are rejected") {
  using nlohmann::json;
  CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"scenario": "weather"})")), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"horizon": "long"})")), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"penalty": {"kind": "cube"}})")), ValidationError);
  CHECK_THROWS_AS(experiment_config_from_json(json::parse(R"({"routing": {"positions": "grid"}})")), ValidationError);
  ExperimentConfig c;
  c.graph.base = "star";
  CHECK_THROWS_AS(prepare_experiment(c), ValidationError);
  c.graph.base = "geometric";
  CHECK_THROWS_AS(prepare_experiment(c), ValidationError);
  c = ExperimentConfig{};
  c.horizon = 0;
  CHECK_THROWS_AS(prepare_experiment(c), ValidationError);
  c = ExperimentConfig{};
  c.scenario = "routing";
  c.routing.l = 0.9;
  CHECK_THROWS_AS(prepare_experiment(c), ValidationError);
}

TEST_CASE("run writes the artifact set and replaces old output") {
  const auto root = testkit::scratch_dir("artifacts");
  auto c = small_synthetic(root / "run");
  c.record_snapshots = true;
  fs::create_directories(root / "run");
  std::ofstream(root / "run" / "stale.txt") << "old";
  const auto r = run_experiment(c);
  for (const char* f : {"config.json", "trajectory.csv", "regret.csv", "summary.json", "snapshots.json"})
    CHECK(fs::exists(root / "run" / f));
  CHECK_FALSE(fs::exists(root / "run" / "stale.txt"));
  CHECK_FALSE(fs::exists(root / "run.partial"));
  const auto cfg_back = experiment_config_from_json(nlohmann::json::parse(testkit::read_file(root / "run" / "config.json")));
  CHECK(to_json(cfg_back) == to_json(c));
  const auto summary = nlohmann::json::parse(testkit::read_file(root / "run" / "summary.json"));
  CHECK(summary.contains("final_avg_cost_regret"));
  CHECK(summary.contains("final_avg_constraint_regret"));
  fs::remove_all(root);
}

TEST_CASE("routing run writes positions") {
  const auto root = testkit::scratch_dir("routing");
  ExperimentConfig c;
  c.scenario = "routing";
  c.routing.n_sources = 4;
  c.graph.base = "geometric";
  c.horizon = 50;
  c.output_dir = (root / "r").string();
  run_experiment(c);
  CHECK(fs::exists(root / "r" / "positions.csv"));
  fs::remove_all(root);
}

TEST_CASE("determinism: identical configs give byte-identical CSVs") {
  const auto root = testkit::scratch_dir("determinism");
  for (const char* scenario : {"synthetic", "routing"}) {
    auto a = small_synthetic(root / "a");
    a.scenario = scenario;
    a.routing.n_sources = 5;
    auto b = a;
    b.output_dir = (root / "b").string();
    run_experiment(a);
    run_experiment(b);
    for (const char* f : {"trajectory.csv", "regret.csv"})
      CHECK(testkit::read_file(root / "a" / f) == testkit::read_file(root / "b" / f));
  }
  fs::remove_all(root);
}

TEST_CASE("trajectory CSV re-ingests with identical recomputed summaries") {
  const auto root = testkit::scratch_dir("reingest");
  for (const char* scenario : {"synthetic", "routing"}) {
    auto c = small_synthetic(root / scenario);
    c.scenario = scenario;
    c.routing.n_sources = 4;
    const auto r = run_experiment(c);
    std::ifstream in(root / scenario / "trajectory.csv");
    const Trajectory back = read_trajectory_csv(in);
    CHECK(back.horizon == c.horizon);
    CHECK(back.c_lambda == r.trajectory.c_lambda);
    CHECK(back.c_y == r.trajectory.c_y);
    CHECK(back.c_penalty == r.trajectory.c_penalty);

    const auto setup = prepare_experiment(c);
    const auto again = regret_report(back, *setup.problem, r.comparator.x, *setup.penalty);
    CHECK((again.cost - r.regret.cost).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((again.constraint - r.regret.constraint).cwiseAbs().maxCoeff() <= 1e-9);
    const auto bounds = bound_constants(
        empirical_bound_inputs(back, *setup.problem, *setup.penalty, setup.graph->eta(), c.graph.q));
    for (int k = 0; k < 4; ++k) CHECK(std::abs(bounds.d[k] - r.bounds.d[k]) <= 1e-9 * std::max(1.0, r.bounds.d[k]));

    // Written regret table agrees with the recomputed series.
    std::ifstream reg(root / scenario / "regret.csv");
    std::string line;
    std::getline(reg, line);
    int t = 0;
    while (std::getline(reg, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
      CHECK(std::abs(v[1] - again.cost(t)) <= 1e-9);
      CHECK(std::abs(v[3] - again.constraint(t)) <= 1e-9);
      ++t;
    }
    CHECK(t == c.horizon);
  }
  fs::remove_all(root);
}

TEST_CASE("malformed trajectory CSVs are rejected") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_trajectory_csv(empty), ValidationError);
  std::istringstream bad_header("x,cost_0\n1,2\n");
  CHECK_THROWS_AS(read_trajectory_csv(bad_header), ValidationError);
  Trajectory tr;
  {
    RunConfig c;
    c.problem = std::make_shared<SyntheticProblem>(2, SyntheticParams{}, 1);
    c.graph = testkit::ring_graph(2, 1);
    c.penalty = std::make_shared<PenaltyFunction>(identity_penalty(1));
    c.horizon = 3;
    tr = run_dopd(c);
  }
  std::ostringstream out;
  write_trajectory_csv(tr, out);
  std::string text = out.str();
  text.replace(text.rfind("\n3,"), 3, "\n9,");
  std::istringstream gap(text);
  CHECK_THROWS_AS(read_trajectory_csv(gap), ValidationError);
  std::string junk = out.str();
  junk.insert(junk.rfind('\n'), "x");
  std::istringstream junk_in(junk);
  CHECK_THROWS_AS(read_trajectory_csv(junk_in), ValidationError);
}

TEST_CASE("synthetic preset: average regrets fall from t=100 to t=1000") {
  const auto root = testkit::scratch_dir("preset");
  const auto pr = run_preset("synthetic", 1000, 3, root.string());
  CHECK(pr.labels.size() == 3);
  CHECK(fs::exists(root / "comparison.csv"));
  CHECK(fs::exists(root / "preset_summary.json"));
  for (const auto& dir : pr.directories) {
    std::ifstream reg(dir / "regret.csv");
    std::string line;
    std::vector<std::vector<double>> rows;
    std::getline(reg, line);
    while (std::getline(reg, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
      rows.push_back(v);
    }
    CHECK(std::abs(rows[999][2]) < std::abs(rows[99][2]));
    CHECK(rows[999][4] < rows[99][4]);
  }
  fs::remove_all(root);
}

TEST_CASE("presets with a single round give single-row outputs") {
  const auto root = testkit::scratch_dir("t1");
  for (const char* name : {"synthetic", "fig4", "fig5"}) {
    const auto pr = run_preset(name, 1, 1, (root / name).string());
    for (const auto& dir : pr.directories) {
      const std::string csv = testkit::read_file(dir / "trajectory.csv");
      CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    }
  }
  CHECK_THROWS_AS(make_preset("fig6", 10, 1, root.string()), ValidationError);
  fs::remove_all(root);
}

TEST_CASE("preset definitions") {
  const auto f4 = make_preset("fig4", 100, 1, "x");
  REQUIRE(f4.members.size() == 3);
  CHECK(f4.members[0].config.routing.n_sources == 10);
  CHECK(f4.members[2].config.routing.n_sources == 20);
  CHECK(f4.members[1].config.routing.n_aps == 2);
  CHECK(f4.members[1].config.penalty.mu == 0.001);
  const auto f5 = make_preset("fig5", 100, 1, "x");
  CHECK(f5.members[2].config.graph.q == 10);
  CHECK(f5.members[2].config.routing.n_sources == 10);
}
