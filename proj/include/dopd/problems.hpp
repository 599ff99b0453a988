#pragma once

// Online problem oracles: per-agent time-varying costs, time-invariant
// coupling constraints sum_i g_i(x_i) <= 0, and local feasible sets X_i.

#include "dopd/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dopd {

struct CostValue {
  double value = 0.0;
  Vec gradient;
};

/// Declared problem constants (norm bounds over the local feasible sets).
struct ProblemConstants {
  double c_x = 0.0;  // ||x|| <= C_x on every X_i
  double c_f = 0.0;  // |f_{i,t}(x)| <= C_f
  double c_g = 0.0;  // ||g_i(x)|| <= C_g
  double l_f = 0.0;  // ||grad f_{i,t}(x)|| <= L_f
  double l_g = 0.0;  // ||grad g_i(x)|| <= L_g
};

/// Sum of one agent's costs over rounds 1..horizon, cheap to evaluate
/// repeatedly (used by the offline comparator).
class AggregateCost {
 public:
  virtual ~AggregateCost() = default;
  virtual CostValue eval(const Vec& x) const = 0;
};

class OnlineProblem {
 public:
  virtual ~OnlineProblem() = default;

  virtual std::string name() const = 0;
  virtual int agents() const = 0;
  virtual int constraint_dim() const = 0;
  virtual int decision_dim(int agent) const = 0;

  /// f_{i,t} and its gradient at x. Rounds start at 1.
  virtual CostValue cost(int agent, int t, const Vec& x) const = 0;
  virtual std::unique_ptr<AggregateCost> aggregate(int agent, int horizon) const;

  virtual Vec constraint(int agent, const Vec& x) const = 0;
  /// m x n_i Jacobian of g_i.
  virtual Mat constraint_jacobian(int agent, const Vec& x) const = 0;
  virtual Vec project(int agent, const Vec& v) const = 0;
  virtual Vec initial_point(int agent) const { return project(agent, Vec::Zero(decision_dim(agent))); }
  /// Axis-aligned box containing X_i, when one is known.
  virtual std::optional<std::pair<Vec, Vec>> bounding_box(int /*agent*/) const { return std::nullopt; }

  virtual ProblemConstants constants() const = 0;

  int total_dim() const;
  std::vector<int> offsets() const;
};

/// Euclidean projection onto the probability simplex (sort and threshold).
Vec project_simplex(const Vec& v);
Vec project_box(const Vec& v, double lo, double hi);

}  // namespace dopd
