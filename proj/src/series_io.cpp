#include "dopd/series_io.hpp"

#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace dopd {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw ValidationError("malformed number in CSV: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("malformed number in CSV: " + s);
  }
}

const char* const kTail[] = {"lambda_spread",       "lambda_tilde_spread", "y_spread",           "y_tilde_spread",
                             "lambda_perturbation", "y_perturbation",      "conservation_error", "max_lambda_norm",
                             "max_y_norm",          "max_penalty_norm"};
constexpr int kTailCount = 10;

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << "t";
  for (int i = 0; i < traj.agents; ++i) out << ",cost_" << i;
  for (int k = 0; k < traj.constraint_dim; ++k) out << ",gsum_" << k;
  for (const char* name : kTail) out << ',' << name;
  out << '\n';
  for (int t = 1; t <= traj.horizon; ++t) {
    const int c = t - 1;
    out << t;
    for (int i = 0; i < traj.agents; ++i) out << ',' << format_double(traj.agent_cost(i, c));
    for (int k = 0; k < traj.constraint_dim; ++k) out << ',' << format_double(traj.constraint_sum(k, c));
    for (const Vec* v : {&traj.lambda_spread, &traj.lambda_tilde_spread, &traj.y_spread, &traj.y_tilde_spread,
                         &traj.lambda_perturbation, &traj.y_perturbation, &traj.conservation_error,
                         &traj.max_lambda_norm, &traj.max_y_norm, &traj.max_penalty_norm})
      out << ',' << format_double((*v)(c));
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trajectory CSV is empty");
  const auto header = split(line);
  require(!header.empty() && header[0] == "t", "trajectory CSV must start with a t column");
  int n = 0, m = 0;
  for (const auto& h : header) {
    if (h.rfind("cost_", 0) == 0) ++n;
    if (h.rfind("gsum_", 0) == 0) ++m;
  }
  require(static_cast<int>(header.size()) == 1 + n + m + kTailCount, "trajectory CSV has unexpected columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    require(cells.size() == header.size(), "trajectory CSV row has the wrong width");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }
  const int horizon = static_cast<int>(rows.size());
  require(horizon >= 1, "trajectory CSV has no rounds");

  Trajectory tr;
  tr.agents = n;
  tr.constraint_dim = m;
  tr.horizon = horizon;
  tr.agent_cost.resize(n, horizon);
  tr.constraint_sum.resize(m, horizon);
  Vec* tail[] = {&tr.lambda_spread,       &tr.lambda_tilde_spread, &tr.y_spread,
                 &tr.y_tilde_spread,      &tr.lambda_perturbation, &tr.y_perturbation,
                 &tr.conservation_error,  &tr.max_lambda_norm,     &tr.max_y_norm,
                 &tr.max_penalty_norm};
  for (Vec* v : tail) v->resize(horizon);
  for (int c = 0; c < horizon; ++c) {
    const auto& r = rows[c];
    require(static_cast<int>(r[0]) == c + 1, "trajectory CSV rounds must be consecutive from 1");
    for (int i = 0; i < n; ++i) tr.agent_cost(i, c) = r[1 + i];
    for (int k = 0; k < m; ++k) tr.constraint_sum(k, c) = r[1 + n + k];
    for (int j = 0; j < kTailCount; ++j) (*tail[j])(c) = r[1 + n + m + j];
  }
  tr.c_lambda = tr.max_lambda_norm(horizon - 1);
  tr.c_y = tr.max_y_norm(horizon - 1);
  tr.c_penalty = tr.max_penalty_norm(horizon - 1);
  return tr;
}

RegretTable regret_table(const Vec& cost, const Vec& constraint, const Vec& constraint_strict,
                         const BoundConstants& bounds) {
  require(cost.size() == constraint.size() && cost.size() == constraint_strict.size(),
          "regret series cover different horizons");
  RegretTable table;
  for (Eigen::Index c = 0; c < cost.size(); ++c) {
    const double t = static_cast<double>(c + 1);
    table.rows.push_back({static_cast<int>(c + 1), cost(c), cost(c) / t, constraint(c), constraint(c) / t,
                          constraint_strict(c), constraint_strict(c) / t, bounds.cost_bound(t),
                          bounds.constraint_bound(t)});
  }
  return table;
}

void write_regret_csv(const RegretTable& table, std::ostream& out) {
  out << "t,R,R_avg,Rc,Rc_avg,Rc_strict,Rc_strict_avg,bound_R,bound_Rc\n";
  for (const auto& r : table.rows) {
    out << r.t;
    for (double v : {r.r, r.r_avg, r.rc, r.rc_avg, r.rc_strict, r.rc_strict_avg, r.bound_r, r.bound_rc})
      out << ',' << format_double(v);
    out << '\n';
  }
}

namespace {

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) j.push_back(std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows()));
  return j;
}

nlohmann::json snapshot_json(const Snapshot& s) {
  nlohmann::json j;
  j["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
  j["lambda"] = matrix_json(s.lambda);
  j["y"] = matrix_json(s.y);
  if (s.lambda_tilde.size() > 0) {
    j["lambda_tilde"] = matrix_json(s.lambda_tilde);
    j["y_tilde"] = matrix_json(s.y_tilde);
  }
  return j;
}

}  // namespace

void write_snapshots_json(const Trajectory& traj, std::ostream& out) {
  nlohmann::json j;
  j["agents"] = traj.agents;
  j["offsets"] = traj.offsets;
  j["states"] = nlohmann::json::array();
  for (const auto& s : traj.states) j["states"].push_back(snapshot_json(s));
  j["final"] = snapshot_json(traj.final_state);
  out << j.dump() << '\n';
}

}  // namespace dopd
