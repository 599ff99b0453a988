#include "dopd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dopd {

double StepSize::at(int t) const {
  require(t >= 1, "step size index starts at 1");
  switch (kind) {
    case Kind::InverseSqrt:
      return scale / std::sqrt(static_cast<double>(t));
    case Kind::Constant:
      return scale;
  }
  return scale;
}

std::pair<Mat, Mat> consensus_step(const Mat& lambda, const Mat& y, const Mat& w) {
  require(w.rows() == w.cols(), "weight matrix must be square");
  require(lambda.cols() == w.rows() && y.cols() == w.rows(), "weight matrix size differs from agent count");
  return {lambda * w.transpose(), y * w.transpose()};
}

namespace {

bool finite(const Vec& v) { return v.allFinite(); }

[[noreturn]] void abort_at(int t, const std::string& what) {
  std::ostringstream os;
  os << what << " at round " << t;
  throw RuntimeAbort(os.str());
}

}  // namespace

PrimalResult primal_step(const OnlineProblem& problem, int agent, const Vec& x, const Vec& grad_f, const Vec& lambda_tilde,
                         const Vec& y_tilde, const PenaltyFunction& penalty, double alpha, int n) {
  const Mat jg = problem.constraint_jacobian(agent, x);
  const Mat jf = penalty.jacobian(static_cast<double>(n) * y_tilde);
  Vec s = grad_f + jg.transpose() * (jf * lambda_tilde) / static_cast<double>(n);
  if (!finite(s)) throw RuntimeAbort("non-finite search direction");
  return {problem.project(agent, x - alpha * s), std::move(s)};
}

Vec dual_step(const Vec& lambda_tilde, const Vec& penalty_value, double alpha, int n, std::optional<double> cap) {
  Vec out = (lambda_tilde + (alpha / n) * penalty_value).cwiseMax(0.0);
  if (cap) {
    const double norm = out.norm();
    if (norm > *cap) out *= *cap / norm;
  }
  return out;
}

std::pair<Vec, Vec> tracker_step(const Vec& y_tilde, const Vec& g_new, const Vec& g_old) {
  Vec eps = g_new - g_old;
  Vec y = y_tilde + eps;
  return {std::move(y), std::move(eps)};
}

namespace {

void check_config(const RunConfig& c, bool need_graph) {
  require(c.horizon >= 1, "horizon must be at least 1");
  require(c.step.scale > 0.0 && std::isfinite(c.step.scale), "step size scale must be positive");
  require(c.problem != nullptr, "run needs a problem");
  require(c.penalty != nullptr, "run needs a penalty");
  require(c.penalty->dim() == c.problem->constraint_dim(), "penalty dimension differs from constraint dimension");
  if (c.dual_cap) require(*c.dual_cap > 0.0, "dual cap must be positive");
  if (!c.initial_x.empty())
    require(static_cast<int>(c.initial_x.size()) == c.problem->agents(), "one initial point per agent");
  if (c.initial_lambda) {
    require(c.initial_lambda->rows() == c.problem->constraint_dim(), "initial duals have the wrong dimension");
    require((c.initial_lambda->array() >= 0.0).all(), "initial duals must be nonnegative");
  }
  if (!need_graph) return;
  require(c.graph != nullptr, "run needs a graph sequence");
  require(c.graph->agents() == c.problem->agents(), "graph size differs from agent count");
  if (c.validate_graph) {
    const auto report = check_assumption1(*c.graph, std::max(c.horizon, c.graph->q()));
    if (!report.pass()) {
      std::string msg = "graph sequence fails validation:";
      for (const auto* cl : {&report.nondegeneracy, &report.double_stochastic, &report.joint_connectivity})
        if (!cl->pass) msg += " " + cl->detail;
      throw ValidationError(msg);
    }
  }
}

Vec initial_x(const RunConfig& c, int i) {
  const auto& p = *c.problem;
  if (c.initial_x.empty()) return p.initial_point(i);
  const Vec& x = c.initial_x[i];
  require(x.size() == p.decision_dim(i), "initial point has the wrong dimension");
  return p.project(i, x);
}

void allocate(Trajectory& tr, int n, int m, int horizon) {
  tr.agents = n;
  tr.constraint_dim = m;
  tr.horizon = horizon;
  tr.agent_cost = Mat::Zero(n, horizon);
  tr.constraint_sum = Mat::Zero(m, horizon);
  for (Vec* v : {&tr.lambda_spread, &tr.lambda_tilde_spread, &tr.y_spread, &tr.y_tilde_spread, &tr.lambda_spread_max,
                 &tr.y_spread_max, &tr.lambda_perturbation, &tr.y_perturbation, &tr.lambda_perturbation_max,
                 &tr.y_perturbation_max, &tr.max_lambda_norm, &tr.max_y_norm, &tr.max_penalty_norm})
    *v = Vec::Zero(horizon);
  tr.conservation_error = Vec::Constant(horizon, std::numeric_limits<double>::quiet_NaN());
}

struct Spread {
  double sum = 0.0;
  double max = 0.0;
};

Spread spread(const Mat& cols, const Vec& mean) {
  Spread s;
  for (Eigen::Index i = 0; i < cols.cols(); ++i) {
    const double d = (cols.col(i) - mean).norm();
    s.sum += d;
    s.max = std::max(s.max, d);
  }
  return s;
}

double max_col_norm(const Mat& m) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < m.cols(); ++i) r = std::max(r, m.col(i).norm());
  return r;
}

}  // namespace

Trajectory run_dopd(const RunConfig& config) {
  check_config(config, true);
  const auto& problem = *config.problem;
  const auto& penalty = *config.penalty;
  const int n = problem.agents();
  const int m = problem.constraint_dim();
  const int horizon = config.horizon;

  Trajectory tr;
  allocate(tr, n, m, horizon);
  tr.offsets = problem.offsets();

  std::vector<Vec> x(n);
  Mat lambda = config.initial_lambda.value_or(Mat::Zero(m, n));
  Mat y(m, n);
  Mat g_old(m, n);
  for (int i = 0; i < n; ++i) {
    x[i] = initial_x(config, i);
    g_old.col(i) = problem.constraint(i, x[i]);
  }
  y = g_old;
  tr.initial_lambda_max = max_col_norm(lambda);
  tr.initial_y_max = max_col_norm(y);
  tr.c_lambda = tr.initial_lambda_max;
  tr.c_y = tr.initial_y_max;
  tr.initial_y_spread_max = spread(y, y.rowwise().mean()).max;

  auto stacked = [&] {
    Vec s(tr.offsets.back());
    for (int i = 0; i < n; ++i) s.segment(tr.offsets[i], x[i].size()) = x[i];
    return s;
  };

  const bool check_every = config.diagnostics.conservation_every > 0;
  if (config.diagnostics.record_states) tr.states.reserve(horizon);

  std::vector<Vec> grad(n);
  Mat g_new(m, n);
  for (int t = 1; t <= horizon; ++t) {
    const double alpha = config.step.at(t);
    tr.step.push_back(alpha);

    // Reveal f_{i,t} at the committed decision.
    for (int i = 0; i < n; ++i) {
      CostValue c = problem.cost(i, t, x[i]);
      if (!std::isfinite(c.value) || !finite(c.gradient)) abort_at(t, "non-finite cost or gradient");
      tr.agent_cost(i, t - 1) = c.value;
      grad[i] = std::move(c.gradient);
    }
    const Vec g_sum = g_old.rowwise().sum();
    tr.constraint_sum.col(t - 1) = g_sum;

    const Vec lambda_bar = lambda.rowwise().mean();
    const Vec y_bar = y.rowwise().mean();
    const Spread ls = spread(lambda, lambda_bar);
    const Spread ys = spread(y, y_bar);
    tr.lambda_spread(t - 1) = ls.sum;
    tr.lambda_spread_max(t - 1) = ls.max;
    tr.y_spread(t - 1) = ys.sum;
    tr.y_spread_max(t - 1) = ys.max;

    if (check_every && (t - 1) % config.diagnostics.conservation_every == 0) {
      const double err = (y.rowwise().sum() - g_sum).cwiseAbs().maxCoeff();
      tr.conservation_error(t - 1) = err;
      if (!(err <= config.diagnostics.conservation_tol)) abort_at(t, "tracker conservation broken");
    }
    const WeightMatrix w = config.graph->at(t);
    auto [lt, yt] = consensus_step(lambda, y, w.w);
    tr.lambda_tilde_spread(t - 1) = spread(lt, lambda_bar).sum;
    tr.y_tilde_spread(t - 1) = spread(yt, y_bar).sum;

    if (config.diagnostics.record_states) tr.states.push_back({stacked(), lambda, y, lt, yt});

    Mat lambda_next(m, n);
    for (int i = 0; i < n; ++i) {
      const Vec fy = penalty(static_cast<double>(n) * yt.col(i));
      tr.c_penalty = std::max(tr.c_penalty, fy.norm());
      PrimalResult pr = primal_step(problem, i, x[i], grad[i], lt.col(i), yt.col(i), penalty, alpha, n);
      tr.max_direction = std::max(tr.max_direction, pr.direction.norm());
      x[i] = std::move(pr.x);
      lambda_next.col(i) = dual_step(lt.col(i), fy, alpha, n, config.dual_cap);
      g_new.col(i) = problem.constraint(i, x[i]);
    }

    for (int i = 0; i < n; ++i) {
      auto [y_i, eps] = tracker_step(yt.col(i), g_new.col(i), g_old.col(i));
      y.col(i) = y_i;
      const double ey = eps.norm();
      const double el = (lambda_next.col(i) - lt.col(i)).norm();
      tr.y_perturbation(t - 1) += ey;
      tr.y_perturbation_max(t - 1) = std::max(tr.y_perturbation_max(t - 1), ey);
      tr.lambda_perturbation(t - 1) += el;
      tr.lambda_perturbation_max(t - 1) = std::max(tr.lambda_perturbation_max(t - 1), el);
    }
    lambda = std::move(lambda_next);
    g_old = g_new;
    if (!lambda.allFinite() || !y.allFinite()) abort_at(t, "non-finite dual or tracker state");
    tr.c_lambda = std::max(tr.c_lambda, max_col_norm(lambda));
    tr.c_y = std::max(tr.c_y, max_col_norm(y));
    tr.max_lambda_norm(t - 1) = tr.c_lambda;
    tr.max_y_norm(t - 1) = tr.c_y;
    tr.max_penalty_norm(t - 1) = tr.c_penalty;
  }
  tr.final_state = {stacked(), lambda, y, Mat(), Mat()};
  return tr;
}

Trajectory run_centralized(const RunConfig& config) {
  check_config(config, false);
  const auto& problem = *config.problem;
  const auto& penalty = *config.penalty;
  const int n = problem.agents();
  const int m = problem.constraint_dim();
  const int horizon = config.horizon;

  Trajectory tr;
  allocate(tr, n, m, horizon);
  tr.offsets = problem.offsets();

  std::vector<Vec> x(n);
  for (int i = 0; i < n; ++i) x[i] = initial_x(config, i);
  // One dual for the whole system, replicated into every agent column.
  Vec lambda = config.initial_lambda ? Vec(config.initial_lambda->col(0)) : Vec::Zero(m);
  auto stacked = [&] {
    Vec s(tr.offsets.back());
    for (int i = 0; i < n; ++i) s.segment(tr.offsets[i], x[i].size()) = x[i];
    return s;
  };
  auto constraint_sum = [&] {
    Vec g = Vec::Zero(m);
    for (int i = 0; i < n; ++i) g += problem.constraint(i, x[i]);
    return g;
  };
  Vec g = constraint_sum();
  tr.initial_lambda_max = lambda.norm();
  tr.initial_y_max = g.norm();
  tr.c_lambda = tr.initial_lambda_max;
  tr.c_y = tr.initial_y_max;

  for (int t = 1; t <= horizon; ++t) {
    const double alpha = config.step.at(t);
    tr.step.push_back(alpha);
    tr.constraint_sum.col(t - 1) = g;
    tr.conservation_error(t - 1) = 0.0;
    const Mat lam_cols = lambda.replicate(1, n);
    const Mat g_cols = g.replicate(1, n);
    if (config.diagnostics.record_states) tr.states.push_back({stacked(), lam_cols, g_cols, lam_cols, g_cols});

    const Vec fv = penalty(g);
    const Mat jf = penalty.jacobian(g);
    tr.c_penalty = std::max(tr.c_penalty, fv.norm());
    const Vec jf_lambda = jf * lambda;
    for (int i = 0; i < n; ++i) {
      CostValue c = problem.cost(i, t, x[i]);
      if (!std::isfinite(c.value) || !finite(c.gradient)) abort_at(t, "non-finite cost or gradient");
      tr.agent_cost(i, t - 1) = c.value;
      const Vec s = c.gradient + problem.constraint_jacobian(i, x[i]).transpose() * jf_lambda;
      if (!finite(s)) abort_at(t, "non-finite search direction");
      tr.max_direction = std::max(tr.max_direction, s.norm());
      x[i] = problem.project(i, x[i] - alpha * s);
    }
    lambda = dual_step(lambda, fv, alpha, 1, config.dual_cap);
    g = constraint_sum();
    if (!lambda.allFinite()) abort_at(t, "non-finite dual state");
    tr.c_lambda = std::max(tr.c_lambda, lambda.norm());
    tr.c_y = std::max(tr.c_y, g.norm());
    tr.max_lambda_norm(t - 1) = tr.c_lambda;
    tr.max_y_norm(t - 1) = tr.c_y;
    tr.max_penalty_norm(t - 1) = tr.c_penalty;
  }
  tr.final_state = {stacked(), lambda.replicate(1, n), g.replicate(1, n), Mat(), Mat()};
  return tr;
}

namespace {

// slack within rounding of zero counts as met; both sides can tie exactly
constexpr double kSlackFloor = -1e-12;

bool all_nonneg(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double s) { return s >= kSlackFloor; });
}

std::optional<int> first_negative(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!(v[i] >= kSlackFloor)) return static_cast<int>(i) + 1;
  return std::nullopt;
}

}  // namespace

bool IterateAudit::primal_pass() const { return all_nonneg(slack_primal); }
bool IterateAudit::dual_pass() const { return all_nonneg(slack_dual); }
bool IterateAudit::dual_scaled_pass() const { return all_nonneg(slack_dual_scaled); }
std::optional<int> IterateAudit::first_failure_primal() const { return first_negative(slack_primal); }
std::optional<int> IterateAudit::first_failure_dual() const { return first_negative(slack_dual); }

AuditConstants audit_constants(const Trajectory& traj, const OnlineProblem& problem, const PenaltyFunction& penalty) {
  const auto pc = problem.constants();
  AuditConstants c;
  c.c_x = pc.c_x;
  c.l_f = pc.l_f;
  c.l_g = pc.l_g;
  c.c_lambda = traj.c_lambda;
  c.c_penalty = traj.c_penalty;
  c.l_penalty = penalty.lipschitz();
  c.g_penalty = penalty.jacobian_lipschitz();
  return c;
}

IterateAudit audit_iterate_relations(const Trajectory& traj, const OnlineProblem& problem,
                                     const PenaltyFunction& penalty, const Vec& comparator_x,
                                     const Vec& comparator_lambda, const AuditConstants& k) {
  require(static_cast<int>(traj.states.size()) == traj.horizon, "audit needs recorded states for every round");
  require(comparator_x.size() == traj.offsets.back(), "comparator has the wrong dimension");
  require(comparator_lambda.size() == traj.constraint_dim, "comparator dual has the wrong dimension");
  require((comparator_lambda.array() >= 0.0).all(), "comparator dual must be nonnegative");
  const int n = traj.agents;
  for (int i = 0; i < n; ++i) {
    const Vec xi = traj.agent_x(comparator_x, i);
    require((problem.project(i, xi) - xi).norm() <= 1e-9, "comparator lies outside the feasible set");
  }

  auto g_sum = [&](const Vec& x) {
    Vec s = Vec::Zero(traj.constraint_dim);
    for (int i = 0; i < n; ++i) s += problem.constraint(i, traj.agent_x(x, i));
    return s;
  };
  const Vec fc_star = penalty(g_sum(comparator_x));
  const double nn = n;

  IterateAudit audit;
  for (int t = 1; t <= traj.horizon; ++t) {
    const Snapshot& cur = traj.states[t - 1];
    const Snapshot& next = t < traj.horizon ? traj.states[t] : traj.final_state;
    const double alpha = traj.step[t - 1];
    const Vec lambda_bar = cur.lambda.rowwise().mean();
    const Vec y_bar = cur.y.rowwise().mean();
    const double lt_spread = spread(cur.lambda_tilde, lambda_bar).sum;
    const double yt_spread = spread(cur.y_tilde, y_bar).sum;

    double f_cur = 0.0, f_star = 0.0, dx_cur = 0.0, dx_next = 0.0, dl_cur = 0.0, dl_next = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec xs = traj.agent_x(comparator_x, i);
      f_cur += traj.agent_cost(i, t - 1);
      f_star += problem.cost(i, t, xs).value;
      dx_cur += (traj.agent_x(cur.x, i) - xs).squaredNorm();
      dx_next += (traj.agent_x(next.x, i) - xs).squaredNorm();
      dl_cur += (cur.lambda.col(i) - comparator_lambda).squaredNorm();
      dl_next += (next.lambda.col(i) - comparator_lambda).squaredNorm();
    }
    const Vec fc_cur = penalty(traj.constraint_sum.col(t - 1));

    // (a) H(x_t, lbar) - H(x, lbar)
    const double lhs_a = (f_cur + lambda_bar.dot(fc_cur) / nn) - (f_star + lambda_bar.dot(fc_star) / nn);
    const double drift = k.l_f + k.l_g * k.l_penalty * k.c_lambda / nn;
    const double rhs_a = (dx_cur - dx_next) / (2.0 * alpha) + 0.5 * alpha * nn * drift * drift +
                         2.0 * k.c_x * k.c_lambda * k.l_g * k.g_penalty * yt_spread +
                         2.0 / nn * k.c_x * k.l_g * k.l_penalty * lt_spread;
    audit.slack_primal.push_back(rhs_a - lhs_a);

    // (b) H(x_t, lambda) - H(x_t, lbar)
    const double lhs_b = (comparator_lambda - lambda_bar).dot(fc_cur) / nn;
    const double rhs_b = (dl_cur - dl_next) / (2.0 * alpha) + alpha / (2.0 * nn) * k.c_penalty * k.c_penalty +
                         k.c_penalty / nn * lt_spread + 2.0 * k.c_lambda * k.l_penalty * yt_spread;
    audit.slack_dual.push_back(rhs_b - lhs_b);
    audit.slack_dual_scaled.push_back(rhs_b - nn * lhs_b);
  }
  return audit;
}

std::vector<double> disagreement_recursion_slack(const Trajectory& traj, double eta, int q, bool lambda) {
  const GammaBeta gb = gamma_beta(eta, traj.agents, q);
  const Vec& observed = lambda ? traj.lambda_spread_max : traj.y_spread_max;
  const Vec& e_sum = lambda ? traj.lambda_perturbation : traj.y_perturbation;
  const Vec& e_max = lambda ? traj.lambda_perturbation_max : traj.y_perturbation_max;
  const double theta1 = lambda ? traj.initial_lambda_max : traj.initial_y_max;
  const double nn = traj.agents;

  std::vector<double> slack;
  double s = 0.0;             // sum_{l<t} beta^{t-l} E_{l+1}
  double beta_pow = gb.beta;  // beta^t
  for (int t = 1; t < traj.horizon; ++t) {
    const double bound = nn * gb.gamma * beta_pow * theta1 + gb.gamma * s + e_sum(t - 1) / nn + e_max(t - 1);
    slack.push_back(bound - observed(t));
    s = gb.beta * (s + e_sum(t - 1));
    beta_pow *= gb.beta;
  }
  return slack;
}

double perturbation_identity_error(const Trajectory& traj, const GraphSequence& graph, const OnlineProblem& problem) {
  require(static_cast<int>(traj.states.size()) == traj.horizon, "identity check needs recorded states");
  double worst = 0.0;
  for (int t = 1; t <= traj.horizon; ++t) {
    const Snapshot& cur = traj.states[t - 1];
    const Snapshot& next = t < traj.horizon ? traj.states[t] : traj.final_state;
    const Mat w = graph.at(t).w;
    const Mat lam_avg = cur.lambda * w.transpose();
    const Mat y_avg = cur.y * w.transpose();
    for (int i = 0; i < traj.agents; ++i) {
      const Vec eps_l = next.lambda.col(i) - cur.lambda_tilde.col(i);
      const Vec eps_y =
          problem.constraint(i, traj.agent_x(next.x, i)) - problem.constraint(i, traj.agent_x(cur.x, i));
      worst = std::max(worst, (next.lambda.col(i) - lam_avg.col(i) - eps_l).cwiseAbs().maxCoeff());
      worst = std::max(worst, (next.y.col(i) - y_avg.col(i) - eps_y).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace dopd
