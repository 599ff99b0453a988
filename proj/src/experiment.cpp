#include "dopd/experiment.hpp"

#include "dopd/random.hpp"
#include "dopd/series_io.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <future>

namespace dopd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string step_kind_name(StepSize::Kind k) { return k == StepSize::Kind::Constant ? "constant" : "inverse_sqrt"; }

StepSize::Kind step_kind_from(const std::string& s) {
  if (s == "inverse_sqrt") return StepSize::Kind::InverseSqrt;
  if (s == "constant") return StepSize::Kind::Constant;
  throw ValidationError("unknown step size rule: " + s);
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  j["agents"] = c.agents;
  j["step"] = {{"kind", step_kind_name(c.step.kind)}, {"scale", c.step.scale}};
  j["penalty"] = {{"kind", to_string(c.penalty.kind)}, {"mu", c.penalty.mu}};
  j["graph"] = {{"base", c.graph.base}, {"q", c.graph.q}, {"extra_edge_prob", c.graph.extra_edge_prob}};
  const auto& s = c.synthetic;
  j["synthetic"] = {{"targets", s.targets}, {"target_lo", s.target_lo}, {"target_hi", s.target_hi},
                    {"noise", s.noise},     {"offsets", s.offsets},     {"budget", optional_json(s.budget)}};
  const auto& r = c.routing;
  json positions = "random_box";
  if (!r.positions.empty()) positions = r.positions;
  j["routing"] = {{"n_sources", r.n_sources},
                  {"n_aps", r.n_aps},
                  {"positions", positions},
                  {"box", {r.box_width, r.box_height}},
                  {"l", r.l},
                  {"u", r.u},
                  {"noise_amplitude", r.noise_amplitude},
                  {"r_min", r.r_min},
                  {"z_max", optional_json(r.z_max)}};
  j["dual_cap"] = optional_json(c.dual_cap);
  j["record_snapshots"] = c.record_snapshots;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig experiment_config_from_json(const json& doc) {
  try {
    ExperimentConfig c;
    c.scenario = doc.value("scenario", c.scenario);
    require(c.scenario == "synthetic" || c.scenario == "routing", "scenario must be synthetic or routing");
    c.seed = doc.value("seed", c.seed);
    c.horizon = doc.value("horizon", c.horizon);
    c.agents = doc.value("agents", c.agents);
    if (doc.contains("step")) {
      const auto& s = doc.at("step");
      c.step.kind = step_kind_from(s.value("kind", std::string("inverse_sqrt")));
      c.step.scale = s.value("scale", 1.0);
    }
    if (doc.contains("penalty")) {
      const auto& p = doc.at("penalty");
      c.penalty.kind = penalty_kind_from_string(p.value("kind", std::string("smooth_max")));
      c.penalty.mu = p.value("mu", c.penalty.mu);
    }
    if (doc.contains("graph")) {
      const auto& g = doc.at("graph");
      c.graph.base = g.value("base", c.graph.base);
      c.graph.q = g.value("q", c.graph.q);
      c.graph.extra_edge_prob = g.value("extra_edge_prob", c.graph.extra_edge_prob);
    }
    if (doc.contains("synthetic")) {
      const auto& s = doc.at("synthetic");
      c.synthetic.targets = s.value("targets", std::vector<double>{});
      c.synthetic.target_lo = s.value("target_lo", c.synthetic.target_lo);
      c.synthetic.target_hi = s.value("target_hi", c.synthetic.target_hi);
      c.synthetic.noise = s.value("noise", c.synthetic.noise);
      c.synthetic.offsets = s.value("offsets", std::vector<double>{});
      c.synthetic.budget = optional_from<double>(s, "budget");
    }
    if (doc.contains("routing")) {
      const auto& r = doc.at("routing");
      auto& p = c.routing;
      p.n_sources = r.value("n_sources", p.n_sources);
      p.n_aps = r.value("n_aps", p.n_aps);
      if (r.contains("positions") && r.at("positions").is_array())
        p.positions = r.at("positions").get<std::vector<std::array<double, 2>>>();
      else if (r.contains("positions"))
        require(r.at("positions") == "random_box", "positions must be \"random_box\" or a list of [x, y]");
      if (r.contains("box")) {
        const auto box = r.at("box").get<std::array<double, 2>>();
        p.box_width = box[0];
        p.box_height = box[1];
      }
      p.l = r.value("l", p.l);
      p.u = r.value("u", p.u);
      p.noise_amplitude = r.value("noise_amplitude", p.noise_amplitude);
      p.r_min = r.value("r_min", std::vector<double>{});
      p.z_max = optional_from<double>(r, "z_max");
    }
    c.dual_cap = optional_from<double>(doc, "dual_cap");
    c.record_snapshots = doc.value("record_snapshots", c.record_snapshots);
    c.output_dir = doc.value("output_dir", c.output_dir);
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad experiment config: ") + e.what());
  }
}

ExperimentSetup prepare_experiment(const ExperimentConfig& c) {
  require(c.horizon >= 1, "horizon must be at least 1");
  require(c.graph.q >= 1, "Q must be at least 1");
  ExperimentSetup s;
  Adjacency base;
  if (c.scenario == "synthetic") {
    require(c.agents >= 1, "synthetic scenario needs at least one agent");
    s.problem = std::make_shared<SyntheticProblem>(c.agents, c.synthetic, substream(c.seed, "synthetic"));
  } else {
    s.network = make_routing_network(c.routing, substream(c.seed, "positions"));
    s.problem = std::make_shared<RoutingProblem>(*s.network, substream(c.seed, "rates"));
  }
  const int n = s.problem->agents();
  if (c.graph.base == "ring") {
    base = ring_adjacency(n);
  } else if (c.graph.base == "complete") {
    base = complete_adjacency(n);
  } else if (c.graph.base == "geometric") {
    require(s.network.has_value(), "geometric base graph needs the routing scenario");
    base = communication_base(*s.network);
  } else {
    throw ValidationError("unknown base graph: " + c.graph.base);
  }
  ThinningScenario scenario;
  scenario.base = base;
  scenario.extra_edge_prob = c.graph.extra_edge_prob;
  scenario.base_kind = c.graph.base;
  s.graph = std::make_shared<GraphSequence>(random_graph_sequence(scenario, substream(c.seed, "graph"), c.graph.q));
  s.graph_report = check_assumption1(*s.graph, std::max(c.horizon, c.graph.q));
  if (!s.graph_report.pass()) {
    throw ValidationError("graph sequence fails validation: " + to_json(s.graph_report).dump());
  }
  s.penalty = std::make_shared<PenaltyFunction>(make_penalty(c.penalty, s.problem->constraint_dim()));
  return s;
}

int time_to_threshold(const Vec& cumulative, double threshold) {
  const auto horizon = static_cast<int>(cumulative.size());
  int first = horizon + 1;
  for (int t = horizon; t >= 1; --t) {
    if (cumulative(t - 1) / t <= threshold)
      first = t;
    else
      break;
  }
  return first;
}

namespace {

double min_slack(const Vec& values, const std::function<double(double)>& bound) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < values.size(); ++c) m = std::min(m, bound(static_cast<double>(c + 1)) - values(c));
  return m;
}

json summary_json(const ExperimentConfig& c, const ExperimentSetup& s, const ExperimentResult& r) {
  const auto& tr = r.trajectory;
  const double t = tr.horizon;
  const Vec identity_rc = constraint_regret(tr.constraint_sum, identity_penalty(tr.constraint_dim));
  double positive_part = 0.0;
  {
    Vec acc = Vec::Zero(tr.constraint_dim);
    for (Eigen::Index k = 0; k < tr.constraint_sum.cols(); ++k) acc += tr.constraint_sum.col(k).cwiseMax(0.0);
    positive_part = acc.norm();
  }
  const auto dis = disagreement_series(tr);
  json j;
  j["scenario"] = c.scenario;
  j["agents"] = tr.agents;
  j["horizon"] = tr.horizon;
  j["q"] = c.graph.q;
  j["eta"] = s.graph->eta();
  j["penalty"] = s.penalty->name();
  j["final_cost_regret"] = r.regret.cost(tr.horizon - 1);
  j["final_avg_cost_regret"] = r.regret.cost(tr.horizon - 1) / t;
  j["final_constraint_regret"] = r.regret.constraint(tr.horizon - 1);
  j["final_avg_constraint_regret"] = r.regret.constraint(tr.horizon - 1) / t;
  j["final_avg_constraint_regret_strict"] = r.constraint_strict(tr.horizon - 1) / t;
  // Signed sums can cancel under the identity map; report both views.
  j["identity_constraint_regret"] = identity_rc(tr.horizon - 1);
  j["positive_part_violation"] = positive_part;
  j["c_lambda"] = tr.c_lambda;
  j["c_y"] = tr.c_y;
  j["c_F"] = tr.c_penalty;
  j["max_conservation_error"] = tr.conservation_error.maxCoeff();
  j["bound_slack_cost"] = min_slack(r.regret.cost, [&](double x) { return r.bounds.cost_bound(x); });
  j["bound_slack_constraint"] = min_slack(r.regret.constraint, [&](double x) { return r.bounds.constraint_bound(x); });
  j["bound_slack_constraint_strict"] =
      min_slack(r.constraint_strict, [&](double x) { return r.bounds.constraint_bound(x); });
  j["bound_slack_lambda_disagreement"] =
      min_slack(dis.lambda_cumulative, [&](double x) { return r.bounds.lambda_disagreement_bound(x); });
  j["bound_slack_y_disagreement"] =
      min_slack(dis.y_cumulative, [&](double x) { return r.bounds.y_disagreement_bound(x); });
  j["bounds"] = to_json(r.bounds);
  j["comparator"] = {{"method", r.comparator.method},
                     {"value", r.comparator.value},
                     {"kkt_residual", r.comparator.kkt_residual},
                     {"max_violation", r.comparator.max_violation},
                     {"x", std::vector<double>(r.comparator.x.data(), r.comparator.x.data() + r.comparator.x.size())}};
  j["graph_validation"] = to_json(s.graph_report);
  return j;
}

void write_text(const fs::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + p.string());
  body(out);
  if (!out) throw RuntimeAbort("failed writing " + p.string());
}

ExperimentResult evaluate(const ExperimentConfig& c, const ExperimentSetup& s) {
  RunConfig rc;
  rc.horizon = c.horizon;
  rc.step = c.step;
  rc.penalty = s.penalty;
  rc.graph = s.graph;
  rc.problem = s.problem;
  rc.dual_cap = c.dual_cap;
  rc.diagnostics.record_states = c.record_snapshots;
  rc.validate_graph = false;  // done in prepare_experiment

  ExperimentResult r;
  r.trajectory = run_dopd(rc);
  r.comparator = offline_oracle(*s.problem, c.horizon);
  r.regret = regret_report(r.trajectory, *s.problem, r.comparator.x, *s.penalty);
  r.constraint_strict = constraint_regret(r.trajectory.constraint_sum,
                                          strict_smooth_max_penalty(s.problem->constraint_dim(), c.penalty.mu));
  r.bounds = bound_constants(empirical_bound_inputs(r.trajectory, *s.problem, *s.penalty, s.graph->eta(), c.graph.q));
  r.summary = summary_json(c, s, r);
  return r;
}

}  // namespace

ExperimentResult evaluate_experiment(const ExperimentConfig& config) {
  const ExperimentSetup setup = prepare_experiment(config);
  return evaluate(config, setup);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const ExperimentSetup setup = prepare_experiment(config);
  ExperimentResult r = evaluate(config, setup);

  const fs::path dir(config.output_dir);
  fs::path staging = dir;
  staging += ".partial";
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    write_text(staging / "config.json", [&](std::ostream& o) { o << to_json(config).dump(2) << '\n'; });
    write_text(staging / "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(r.trajectory, o); });
    write_text(staging / "regret.csv", [&](std::ostream& o) {
      write_regret_csv(regret_table(r.regret.cost, r.regret.constraint, r.constraint_strict, r.bounds), o);
    });
    write_text(staging / "summary.json", [&](std::ostream& o) { o << r.summary.dump(2) << '\n'; });
    if (setup.network) write_text(staging / "positions.csv", [&](std::ostream& o) { write_positions_csv(*setup.network, o); });
    if (config.record_snapshots)
      write_text(staging / "snapshots.json", [&](std::ostream& o) { write_snapshots_json(r.trajectory, o); });
    fs::remove_all(dir);
    fs::rename(staging, dir);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  r.directory = dir;
  return r;
}

Preset make_preset(const std::string& name, int horizon, std::uint64_t seed, const std::string& output_root) {
  require(horizon >= 1, "preset horizon must be at least 1");
  Preset p;
  p.name = name;
  auto routing_member = [&](const std::string& label, int n, int q) {
    ExperimentConfig c;
    c.scenario = "routing";
    c.seed = seed;
    c.horizon = horizon;
    c.routing.n_sources = n;
    c.routing.n_aps = 2;
    c.graph.base = "geometric";
    c.graph.q = q;
    c.penalty = {PenaltyKind::SmoothMax, 0.001};
    c.output_dir = (fs::path(output_root) / label).string();
    p.members.push_back({label, c});
  };
  if (name == "fig4") {
    for (int n : {10, 15, 20}) routing_member("N" + std::to_string(n), n, 1);
    p.cost_threshold = 0.05;
    p.constraint_threshold = 0.01;
  } else if (name == "fig5") {
    for (int q : {1, 5, 10}) routing_member("Q" + std::to_string(q), 10, q);
    p.cost_threshold = 0.05;
    p.constraint_threshold = 0.01;
  } else if (name == "synthetic") {
    for (int n : {2, 5, 10}) {
      ExperimentConfig c;
      c.scenario = "synthetic";
      c.seed = seed;
      c.horizon = horizon;
      c.agents = n;
      c.output_dir = (fs::path(output_root) / ("N" + std::to_string(n))).string();
      p.members.push_back({"N" + std::to_string(n), c});
    }
    p.cost_threshold = 0.05;
    p.constraint_threshold = 0.01;
  } else {
    throw ValidationError("unknown preset: " + name);
  }
  return p;
}

PresetResult run_preset(const std::string& name, int horizon, std::uint64_t seed, const std::string& output_root) {
  const Preset preset = make_preset(name, horizon, seed, output_root);
  fs::create_directories(output_root);
  std::vector<std::future<ExperimentResult>> jobs;
  for (const auto& m : preset.members)
    jobs.push_back(std::async(std::launch::async, [cfg = m.config] { return run_experiment(cfg); }));
  std::vector<ExperimentResult> results;
  for (auto& j : jobs) results.push_back(j.get());

  PresetResult pr;
  json members = json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    pr.labels.push_back(preset.members[k].label);
    pr.directories.push_back(r.directory);
    pr.cost_time_to_threshold.push_back(time_to_threshold(r.regret.cost, preset.cost_threshold));
    pr.constraint_time_to_threshold.push_back(time_to_threshold(r.regret.constraint, preset.constraint_threshold));
    members.push_back({{"label", pr.labels.back()},
                       {"directory", r.directory.string()},
                       {"cost_time_to_threshold", pr.cost_time_to_threshold.back()},
                       {"constraint_time_to_threshold", pr.constraint_time_to_threshold.back()},
                       {"final_avg_cost_regret", r.summary["final_avg_cost_regret"]},
                       {"final_avg_constraint_regret", r.summary["final_avg_constraint_regret"]}});
  }
  pr.summary = {{"preset", name},
                {"horizon", horizon},
                {"seed", seed},
                {"cost_threshold", preset.cost_threshold},
                {"constraint_threshold", preset.constraint_threshold},
                {"members", members}};

  write_text(fs::path(output_root) / "comparison.csv", [&](std::ostream& o) {
    o << "t";
    for (const auto& l : pr.labels) o << ",R_avg_" << l << ",Rc_avg_" << l;
    o << '\n';
    for (int t = 1; t <= horizon; ++t) {
      o << t;
      for (const auto& r : results)
        o << ',' << format_double(r.regret.cost(t - 1) / t) << ',' << format_double(r.regret.constraint(t - 1) / t);
      o << '\n';
    }
  });
  write_text(fs::path(output_root) / "preset_summary.json", [&](std::ostream& o) { o << pr.summary.dump(2) << '\n'; });
  return pr;
}

}  // namespace dopd
