#pragma once

// Regret measurement, the offline comparator and the theoretical bound
// calculator.

#include "dopd/engine.hpp"
#include "dopd/penalty.hpp"
#include "dopd/problems.hpp"

#include <string>
#include <vector>

namespace dopd {

// ---------------------------------------------------------------------------
// Offline comparator: argmin sum_t sum_i f_{i,t}(x_i) s.t. sum_i g_i(x_i) <= 0.

struct OracleOptions {
  enum class Method { SaddlePoint, Grid };
  Method method = Method::SaddlePoint;
  double grid_resolution = 1e-3;
  std::size_t max_grid_points = 20'000'000;
  double tolerance = 1e-8;
  int max_inner_iterations = 200'000;
  int max_outer_iterations = 60;
};

struct OracleResult {
  Vec x;              // stacked comparator
  double value = 0;   // sum over rounds and agents at x
  Vec multiplier;     // constraint multiplier of the averaged problem (saddle point only)
  double kkt_residual = 0.0;
  double max_violation = 0.0;  // max_k [sum_i g_i(x_i)]_k^+
  std::string method;
};

OracleResult offline_oracle(const OnlineProblem& problem, int horizon, const OracleOptions& options = {});

// ---------------------------------------------------------------------------
// Regret.

/// Per-round sum_i f_{i,t}(x*_i), t = 1..horizon.
Vec comparator_round_costs(const OnlineProblem& problem, const Vec& comparator, int horizon);

/// Cumulative R(t) from realized per-agent costs (N x T) and comparator round costs.
Vec cost_regret(const Mat& agent_cost, const Vec& comparator_costs);

/// Cumulative R^c(t) = || sum_{s<=t} F(sum_i g_i(x_{i,s})) ||.
Vec constraint_regret(const Mat& constraint_sum, const PenaltyFunction& penalty);

struct RegretReport {
  Vec cost;             // R(t)
  Vec constraint;       // R^c(t) under `penalty_name`
  std::string penalty_name;
  Vec comparator;
  Vec cost_average() const;
  Vec constraint_average() const;
};

RegretReport regret_report(const Trajectory& traj, const OnlineProblem& problem, const Vec& comparator,
                           const PenaltyFunction& penalty);

// ---------------------------------------------------------------------------
// Disagreement.

struct DisagreementSeries {
  Vec lambda;             // per round sum_i ||lt_i - lambda_bar||
  Vec y;                  // per round sum_i ||yt_i - y_bar||
  Vec lambda_cumulative;
  Vec y_cumulative;
};

DisagreementSeries disagreement_series(const Trajectory& traj);

// ---------------------------------------------------------------------------
// Theoretical constants.

struct BoundInputs {
  double eta = 0.0;
  int n = 1;
  int q = 1;
  double c_x = 0.0;
  double c_lambda = 0.0;
  double c_y = 0.0;
  double c_g = 0.0;
  double c_f = 0.0;
  double l_f = 0.0;
  double l_g = 0.0;
  double l_penalty = 0.0;  // L_F
  double g_penalty = 0.0;  // G_F
  double c_penalty = 0.0;  // C_F
};

struct BoundConstants {
  BoundInputs inputs;
  double gamma = 0.0;
  double beta = 0.0;
  double a_n = 0.0;
  double b[4] = {0, 0, 0, 0};
  double d[4] = {0, 0, 0, 0};
  double k[10] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0};

  double cost_bound(double t) const { return d[0] + d[1] * std::sqrt(t); }
  double constraint_bound(double t) const { return d[2] + d[3] * std::sqrt(t); }
  double lambda_disagreement_bound(double t) const { return b[0] + b[1] * std::sqrt(t); }
  double y_disagreement_bound(double t) const { return b[2] + b[3] * std::sqrt(t); }
};

/// Throws ValidationError("divergent A_N") when beta rounds to 1.
BoundConstants bound_constants(const BoundInputs& in);

/// Tracker bound C_y from the initial trackers and problem constants.
double tracker_bound(double eta, int n, int q, double y1_spread_max, double y1_max, double l_g, double c_x,
                     double c_g);

/// Inputs assembled from a run: declared problem constants, penalty constants
/// and the run's tracked maxima for C_lambda, C_y and C_F.
BoundInputs empirical_bound_inputs(const Trajectory& traj, const OnlineProblem& problem,
                                   const PenaltyFunction& penalty, double eta, int q);

nlohmann::json to_json(const BoundConstants& c);
BoundInputs bound_inputs_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// Lagrangian H_t(x, lambda) = sum_i f_{i,t}(x_i) + (1/N) lambda' F(sum_i g_i(x_i)).

double lagrangian_value(const OnlineProblem& problem, int t, const Vec& x, const Vec& lambda,
                        const PenaltyFunction& penalty);
Vec lagrangian_grad_x(const OnlineProblem& problem, int t, const Vec& x, const Vec& lambda,
                      const PenaltyFunction& penalty);
Vec lagrangian_grad_lambda(const OnlineProblem& problem, const Vec& x, const PenaltyFunction& penalty);

}  // namespace dopd
