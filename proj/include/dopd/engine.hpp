#pragma once

// Distributed online primal-dual iteration and its centralized counterpart.
//
// Round t maps (x_t, lambda_t, y_t) to round t+1 in four stages:
//   consensus   lt_i = sum_j W_ij lambda_j,  yt_i = sum_j W_ij y_j
//   primal      x_i <- P_i[x_i - a_t (grad f_it(x_i) + (1/N) Jg_i' JF(N yt_i) lt_i)]
//   dual        lambda_i <- [lt_i + (a_t/N) F(N yt_i)]_+
//   tracker     y_i <- yt_i + g_i(x_i new) - g_i(x_i old)
// Round 1 holds the initial point with y_i = g_i(x_i).

#include "dopd/graphnet.hpp"
#include "dopd/penalty.hpp"
#include "dopd/problems.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace dopd {

struct StepSize {
  enum class Kind { InverseSqrt, Constant };
  Kind kind = Kind::InverseSqrt;
  double scale = 1.0;

  double at(int t) const;
};

struct Diagnostics {
  /// Keep every round's full state (needed by the iterate-relation audit).
  bool record_states = false;
  /// Check conservation every k rounds; 0 disables. Abort above the tolerance.
  int conservation_every = 1;
  double conservation_tol = 1e-9;
};

struct RunConfig {
  int horizon = 1;
  StepSize step;
  std::shared_ptr<const PenaltyFunction> penalty;
  std::shared_ptr<const GraphSequence> graph;
  std::shared_ptr<const OnlineProblem> problem;
  /// Optional radius cap on each ||lambda_i||; off by default.
  std::optional<double> dual_cap;
  /// Per-agent starting points; problem->initial_point when empty.
  std::vector<Vec> initial_x;
  /// m x N starting duals; zero when unset.
  std::optional<Mat> initial_lambda;
  Diagnostics diagnostics;
  bool validate_graph = true;
};

/// System state at one round. Columns of the m x N blocks index agents.
struct Snapshot {
  Vec x;  // stacked per-agent decisions
  Mat lambda;
  Mat y;
  Mat lambda_tilde;  // consensus outputs of this round (empty for the final state)
  Mat y_tilde;
};

struct Trajectory {
  int agents = 0;
  int constraint_dim = 0;
  int horizon = 0;
  std::vector<int> offsets;
  std::vector<double> step;  // a_t, t = 1..T

  Mat agent_cost;      // N x T: f_{i,t}(x_{i,t})
  Mat constraint_sum;  // m x T: sum_i g_i(x_{i,t})

  // Disagreement sums around the per-round averages lambda_bar_t, y_bar_t.
  Vec lambda_spread;        // sum_i ||lambda_i - lambda_bar||
  Vec lambda_tilde_spread;  // sum_i ||lt_i - lambda_bar||
  Vec y_spread;
  Vec y_tilde_spread;
  Vec lambda_spread_max;  // max_i ||lambda_i - lambda_bar||
  Vec y_spread_max;

  // Perturbations added after averaging in round t (entering round t+1).
  Vec lambda_perturbation;  // sum_i ||lambda_{i,t+1} - lt_i||
  Vec y_perturbation;       // sum_i ||g_i(x_{i,t+1}) - g_i(x_{i,t})||
  Vec lambda_perturbation_max;
  Vec y_perturbation_max;

  Vec conservation_error;  // ||sum y - sum g||_inf, NaN when not checked
  // Running maxima over agents and over rounds 1..t+1 (state after round t).
  Vec max_lambda_norm;
  Vec max_y_norm;
  Vec max_penalty_norm;  // max ||F(N yt_i)|| over rounds 1..t

  double c_lambda = 0.0;   // max ||lambda_{i,t}|| over rounds 1..T+1
  double c_y = 0.0;
  double c_penalty = 0.0;  // max ||F(N yt_i)||
  double max_direction = 0.0;  // max ||s_i||
  double initial_lambda_max = 0.0;  // max_j ||lambda_{j,1}||
  double initial_y_max = 0.0;
  double initial_y_spread_max = 0.0;  // max_i ||y_{i,1} - y_bar_1||

  std::vector<Snapshot> states;  // rounds 1..T when recorded
  Snapshot final_state;          // round T+1

  Vec agent_x(const Vec& stacked, int i) const { return stacked.segment(offsets[i], offsets[i + 1] - offsets[i]); }
};

/// lt = Lambda W', yt = Y W'. Throws on dimension mismatch.
std::pair<Mat, Mat> consensus_step(const Mat& lambda, const Mat& y, const Mat& w);

/// Search direction s_i. Also returns F(N yt_i) for the dual step.
struct PrimalResult {
  Vec x;
  Vec direction;
};
PrimalResult primal_step(const OnlineProblem& problem, int agent, const Vec& x, const Vec& grad_f, const Vec& lambda_tilde,
                         const Vec& y_tilde, const PenaltyFunction& penalty, double alpha, int n);

Vec dual_step(const Vec& lambda_tilde, const Vec& penalty_value, double alpha, int n,
              std::optional<double> cap = std::nullopt);

/// Returns (y_new, perturbation) with perturbation = g_new - g_old computed first.
std::pair<Vec, Vec> tracker_step(const Vec& y_tilde, const Vec& g_new, const Vec& g_old);

Trajectory run_dopd(const RunConfig& config);

/// Arrow-Hurwicz-Uzawa on the aggregated problem with one node. The graph in
/// the config is ignored.
Trajectory run_centralized(const RunConfig& config);

/// Per-round result of checking the two iterate relations at a comparator.
struct IterateAudit {
  std::vector<double> slack_primal;  // bound minus left side, relation (a)
  std::vector<double> slack_dual;    // relation (b) as stated
  std::vector<double> slack_dual_scaled;  // relation (b) with the left side scaled by N
  bool primal_pass() const;
  bool dual_pass() const;
  bool dual_scaled_pass() const;
  std::optional<int> first_failure_primal() const;
  std::optional<int> first_failure_dual() const;
};

struct AuditConstants {
  double c_x = 0.0;
  double c_lambda = 0.0;
  double c_penalty = 0.0;
  double l_f = 0.0;
  double l_g = 0.0;
  double l_penalty = 0.0;
  double g_penalty = 0.0;
};

/// Constants from the problem, the penalty and the trajectory's tracked maxima.
AuditConstants audit_constants(const Trajectory& traj, const OnlineProblem& problem, const PenaltyFunction& penalty);

/// Requires recorded states. Comparator x must lie in X, lambda >= 0.
IterateAudit audit_iterate_relations(const Trajectory& traj, const OnlineProblem& problem,
                                     const PenaltyFunction& penalty, const Vec& comparator_x,
                                     const Vec& comparator_lambda, const AuditConstants& constants);

/// Evaluates the perturbed-averaging disagreement bound from the recorded
/// perturbations. Entry t-1 holds, for round t+1 (t = 1..T-1), the bound minus
/// the observed max_i ||theta_i - theta_bar||. `lambda` picks duals or trackers.
std::vector<double> disagreement_recursion_slack(const Trajectory& traj, double eta, int q, bool lambda);

/// Max deviation of theta_{t+1} - W_t theta_t from the recorded perturbations.
double perturbation_identity_error(const Trajectory& traj, const GraphSequence& graph, const OnlineProblem& problem);

}  // namespace dopd
