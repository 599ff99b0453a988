#include "dopd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace dopd {

namespace {

struct Aggregated {
  const OnlineProblem& problem;
  std::vector<std::unique_ptr<AggregateCost>> costs;
  std::vector<int> off;
  double scale;  // 1 / horizon

  Aggregated(const OnlineProblem& p, int horizon) : problem(p), off(p.offsets()), scale(1.0 / horizon) {
    for (int i = 0; i < p.agents(); ++i) costs.push_back(p.aggregate(i, horizon));
  }

  Vec part(const Vec& x, int i) const { return x.segment(off[i], off[i + 1] - off[i]); }

  // Averaged objective and gradient.
  double eval(const Vec& x, Vec* grad) const {
    double v = 0.0;
    if (grad) grad->resize(x.size());
    for (int i = 0; i < problem.agents(); ++i) {
      const CostValue c = costs[i]->eval(part(x, i));
      v += c.value;
      if (grad) grad->segment(off[i], c.gradient.size()) = scale * c.gradient;
    }
    return scale * v;
  }

  Vec constraint(const Vec& x) const {
    Vec s = Vec::Zero(problem.constraint_dim());
    for (int i = 0; i < problem.agents(); ++i) s += problem.constraint(i, part(x, i));
    return s;
  }

  // J(x)' w for the stacked constraint map.
  Vec jacobian_t(const Vec& x, const Vec& w) const {
    Vec out(x.size());
    for (int i = 0; i < problem.agents(); ++i) {
      const Vec xi = part(x, i);
      out.segment(off[i], xi.size()) = problem.constraint_jacobian(i, xi).transpose() * w;
    }
    return out;
  }

  Vec project(const Vec& x) const {
    Vec out(x.size());
    for (int i = 0; i < problem.agents(); ++i) out.segment(off[i], off[i + 1] - off[i]) = problem.project(i, part(x, i));
    return out;
  }
};

double positive_max(const Vec& v) { return std::max(0.0, v.maxCoeff()); }

// Augmented Lagrangian: minimise phi + (1/2rho)(||[mu + rho c]_+||^2 - ||mu||^2)
// over X with accelerated projected gradient, then mu <- [mu + rho c]_+.
OracleResult saddle_point(const Aggregated& a, int horizon, const OracleOptions& o) {
  const int m = a.problem.constraint_dim();
  Vec x(a.off.back());
  for (int i = 0; i < a.problem.agents(); ++i) x.segment(a.off[i], a.off[i + 1] - a.off[i]) = a.problem.initial_point(i);
  Vec mu = Vec::Zero(m);
  double rho = 10.0;
  double lip = 1.0;

  auto merit = [&](const Vec& z, Vec* grad) {
    const Vec c = a.constraint(z);
    const Vec shifted = (mu + rho * c).cwiseMax(0.0);
    double v = a.eval(z, grad) + (shifted.squaredNorm() - mu.squaredNorm()) / (2.0 * rho);
    if (grad) *grad += a.jacobian_t(z, shifted);
    return v;
  };

  auto kkt = [&](const Vec& z, const Vec& mult) {
    Vec g;
    a.eval(z, &g);
    g += a.jacobian_t(z, mult);
    const Vec c = a.constraint(z);
    const double stationarity = (z - a.project(z - g)).lpNorm<Eigen::Infinity>();
    return std::max({stationarity, positive_max(c), std::abs(mult.dot(c))});
  };

  double residual = kkt(x, mu);
  double last_violation = positive_max(a.constraint(x));
  for (int outer = 0; outer < o.max_outer_iterations && residual > o.tolerance; ++outer) {
    const double inner_tol = 0.1 * o.tolerance;
    // Accelerated projected gradient. Step acceptance and momentum restart use
    // gradient tests only: objective values of the closed-form aggregates carry
    // cancellation noise near the optimum.
    Vec y = x, gy, gn;
    merit(y, &gy);
    double tk = 1.0;
    for (int it = 0; it < o.max_inner_iterations; ++it) {
      Vec xn, d;
      for (int bt = 0; bt < 60; ++bt) {
        xn = a.project(y - gy / lip);
        d = xn - y;
        merit(xn, &gn);
        const double dn = d.norm();
        if (dn == 0.0 || (gn - gy).norm() <= lip * dn) break;
        lip *= 2.0;
      }
      const double step_residual = lip * d.lpNorm<Eigen::Infinity>();
      if (step_residual <= inner_tol) {
        x = std::move(xn);
        break;
      }
      if ((y - xn).dot(xn - x) > 0.0) {
        // Momentum points uphill: restart from the new iterate.
        tk = 1.0;
        x = std::move(xn);
        y = x;
        gy = gn;
        continue;
      }
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
      y = xn + ((tk - 1.0) / tn) * (xn - x);
      x = std::move(xn);
      tk = tn;
      merit(y, &gy);
    }
    const Vec c = a.constraint(x);
    mu = (mu + rho * c).cwiseMax(0.0);
    const double violation = positive_max(c);
    if (violation > 0.25 * last_violation && violation > o.tolerance) rho = std::min(rho * 10.0, 1e10);
    last_violation = violation;
    residual = kkt(x, mu);
  }

  OracleResult r;
  r.x = x;
  r.value = a.eval(x, nullptr) * horizon;
  r.multiplier = mu;
  r.kkt_residual = residual;
  r.max_violation = positive_max(a.constraint(x));
  r.method = "saddle_point";
  return r;
}

struct GridTable {
  std::vector<Vec> points;
  std::vector<double> value;
  std::vector<Vec> g;
};

GridTable agent_grid(const OnlineProblem& p, int agent, const AggregateCost& cost, double res) {
  const auto box = p.bounding_box(agent);
  require(box.has_value(), "grid search needs a bounding box for every agent");
  const Vec& lo = box->first;
  const Vec& hi = box->second;
  const int dim = static_cast<int>(lo.size());
  require(dim <= 2, "grid search supports at most two coordinates per agent");
  std::vector<int> count(dim);
  std::vector<double> step(dim);
  for (int k = 0; k < dim; ++k) {
    count[k] = std::max(1, static_cast<int>(std::ceil((hi(k) - lo(k)) / res - 1e-9)));
    step[k] = (hi(k) - lo(k)) / count[k];
  }
  GridTable table;
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec pt(dim);
    for (int k = 0; k < dim; ++k) pt(k) = lo(k) + idx[k] * step[k];
    if ((p.project(agent, pt) - pt).norm() <= 1e-12) {
      table.value.push_back(cost.eval(pt).value);
      table.g.push_back(p.constraint(agent, pt));
      table.points.push_back(std::move(pt));
    }
    int k = 0;
    while (k < dim && ++idx[k] > count[k]) idx[k++] = 0;
    if (k == dim) break;
  }
  return table;
}

OracleResult grid_search(const OnlineProblem& p, int horizon, const OracleOptions& o) {
  const int n = p.agents();
  std::vector<GridTable> tables;
  double total = 1.0;
  for (int i = 0; i < n; ++i) {
    const auto cost = p.aggregate(i, horizon);
    tables.push_back(agent_grid(p, i, *cost, o.grid_resolution));
    total *= static_cast<double>(tables.back().points.size());
  }
  require(total <= static_cast<double>(o.max_grid_points), "grid search would exceed the point budget");

  const int m = p.constraint_dim();
  std::vector<int> choice(n, 0), best;
  double best_value = std::numeric_limits<double>::infinity();
  std::function<void(int, double, const Vec&)> walk = [&](int i, double value, const Vec& g) {
    if (i == n) {
      if (g.maxCoeff() <= 1e-12 && value < best_value) {
        best_value = value;
        best = choice;
      }
      return;
    }
    const auto& t = tables[i];
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      choice[i] = static_cast<int>(k);
      walk(i + 1, value + t.value[k], g + t.g[k]);
    }
  };
  walk(0, 0.0, Vec::Zero(m));
  if (best.empty()) throw ValidationError("offline problem is infeasible on the grid");

  const auto off = p.offsets();
  OracleResult r;
  r.x.resize(off.back());
  Vec g = Vec::Zero(m);
  for (int i = 0; i < n; ++i) {
    r.x.segment(off[i], off[i + 1] - off[i]) = tables[i].points[best[i]];
    g += tables[i].g[best[i]];
  }
  r.value = best_value;
  r.multiplier = Vec::Zero(m);
  r.kkt_residual = std::numeric_limits<double>::quiet_NaN();
  r.max_violation = positive_max(g);
  r.method = "grid";
  return r;
}

}  // namespace

OracleResult offline_oracle(const OnlineProblem& problem, int horizon, const OracleOptions& options) {
  require(horizon >= 1, "oracle horizon must be at least 1");
  require(options.tolerance > 0.0, "oracle tolerance must be positive");
  if (options.method == OracleOptions::Method::Grid) {
    require(options.grid_resolution > 0.0, "grid resolution must be positive");
    return grid_search(problem, horizon, options);
  }
  const Aggregated a(problem, horizon);
  OracleResult r = saddle_point(a, horizon, options);
  if (r.max_violation > std::sqrt(options.tolerance))
    throw ValidationError("offline problem appears infeasible: constraint violation persists at the solver limit");
  return r;
}

}  // namespace dopd
