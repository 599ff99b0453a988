#include "dopd/metrics.hpp"

namespace dopd {

Vec comparator_round_costs(const OnlineProblem& problem, const Vec& comparator, int horizon) {
  const auto off = problem.offsets();
  require(comparator.size() == off.back(), "comparator has the wrong dimension");
  Vec out = Vec::Zero(horizon);
  for (int t = 1; t <= horizon; ++t)
    for (int i = 0; i < problem.agents(); ++i)
      out(t - 1) += problem.cost(i, t, comparator.segment(off[i], off[i + 1] - off[i])).value;
  return out;
}

Vec cost_regret(const Mat& agent_cost, const Vec& comparator_costs) {
  require(agent_cost.cols() == comparator_costs.size(), "comparator costs cover a different horizon");
  Vec r(agent_cost.cols());
  double acc = 0.0;
  for (Eigen::Index t = 0; t < agent_cost.cols(); ++t) {
    acc += agent_cost.col(t).sum() - comparator_costs(t);
    r(t) = acc;
  }
  return r;
}

Vec constraint_regret(const Mat& constraint_sum, const PenaltyFunction& penalty) {
  require(constraint_sum.rows() == penalty.dim(), "penalty dimension differs from constraint dimension");
  Vec r(constraint_sum.cols());
  Vec acc = Vec::Zero(constraint_sum.rows());
  for (Eigen::Index t = 0; t < constraint_sum.cols(); ++t) {
    acc += penalty(constraint_sum.col(t));
    r(t) = acc.norm();
  }
  return r;
}

namespace {

Vec per_round_average(const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index t = 0; t < v.size(); ++t) out(t) = v(t) / static_cast<double>(t + 1);
  return out;
}

Vec cumulative(const Vec& v) {
  Vec out(v.size());
  double acc = 0.0;
  for (Eigen::Index t = 0; t < v.size(); ++t) out(t) = (acc += v(t));
  return out;
}

}  // namespace

Vec RegretReport::cost_average() const { return per_round_average(cost); }
Vec RegretReport::constraint_average() const { return per_round_average(constraint); }

RegretReport regret_report(const Trajectory& traj, const OnlineProblem& problem, const Vec& comparator,
                           const PenaltyFunction& penalty) {
  RegretReport r;
  r.cost = cost_regret(traj.agent_cost, comparator_round_costs(problem, comparator, traj.horizon));
  r.constraint = constraint_regret(traj.constraint_sum, penalty);
  r.penalty_name = penalty.name();
  r.comparator = comparator;
  return r;
}

DisagreementSeries disagreement_series(const Trajectory& traj) {
  DisagreementSeries d;
  d.lambda = traj.lambda_tilde_spread;
  d.y = traj.y_tilde_spread;
  d.lambda_cumulative = cumulative(d.lambda);
  d.y_cumulative = cumulative(d.y);
  return d;
}

namespace {

Vec stacked_constraint(const OnlineProblem& problem, const Vec& x) {
  const auto off = problem.offsets();
  require(x.size() == off.back(), "state has the wrong dimension");
  Vec s = Vec::Zero(problem.constraint_dim());
  for (int i = 0; i < problem.agents(); ++i) s += problem.constraint(i, x.segment(off[i], off[i + 1] - off[i]));
  return s;
}

}  // namespace

double lagrangian_value(const OnlineProblem& problem, int t, const Vec& x, const Vec& lambda,
                        const PenaltyFunction& penalty) {
  const auto off = problem.offsets();
  double f = 0.0;
  for (int i = 0; i < problem.agents(); ++i) f += problem.cost(i, t, x.segment(off[i], off[i + 1] - off[i])).value;
  return f + lambda.dot(penalty(stacked_constraint(problem, x))) / problem.agents();
}

Vec lagrangian_grad_x(const OnlineProblem& problem, int t, const Vec& x, const Vec& lambda,
                      const PenaltyFunction& penalty) {
  const auto off = problem.offsets();
  const Vec jf_lambda = penalty.jacobian(stacked_constraint(problem, x)) * lambda / problem.agents();
  Vec g(x.size());
  for (int i = 0; i < problem.agents(); ++i) {
    const Vec xi = x.segment(off[i], off[i + 1] - off[i]);
    g.segment(off[i], xi.size()) =
        problem.cost(i, t, xi).gradient + problem.constraint_jacobian(i, xi).transpose() * jf_lambda;
  }
  return g;
}

Vec lagrangian_grad_lambda(const OnlineProblem& problem, const Vec& x, const PenaltyFunction& penalty) {
  return penalty(stacked_constraint(problem, x)) / problem.agents();
}

}  // namespace dopd
