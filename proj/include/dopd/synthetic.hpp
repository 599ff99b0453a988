#pragma once

#include "dopd/problems.hpp"

#include <cstdint>
#include <vector>

namespace dopd {

struct SyntheticParams {
  /// Base targets a_i; drawn uniformly from [target_lo, target_hi] when empty.
  std::vector<double> targets;
  double target_lo = 0.0;
  double target_hi = 1.0;
  /// a_{i,t} = a_i + noise * u, u uniform on [-1, 1].
  double noise = 0.2;
  /// Offsets c_i in g_i(x) = x - c_i; budget / N each when empty.
  std::vector<double> offsets;
  /// Total budget sum_i c_i used when offsets are not given; defaults to N/4.
  std::optional<double> budget;
};

/// Scalar agents on [0,1] with f_{i,t}(x) = (x - a_{i,t})^2 and one shared
/// budget constraint sum_i (x_i - c_i) <= 0.
class SyntheticProblem final : public OnlineProblem {
 public:
  SyntheticProblem(int n, SyntheticParams params, std::uint64_t seed);

  std::string name() const override { return "synthetic"; }
  int agents() const override { return n_; }
  int constraint_dim() const override { return 1; }
  int decision_dim(int) const override { return 1; }

  CostValue cost(int agent, int t, const Vec& x) const override;
  std::unique_ptr<AggregateCost> aggregate(int agent, int horizon) const override;
  Vec constraint(int agent, const Vec& x) const override;
  Mat constraint_jacobian(int agent, const Vec& x) const override;
  Vec project(int agent, const Vec& v) const override;
  std::optional<std::pair<Vec, Vec>> bounding_box(int agent) const override;
  ProblemConstants constants() const override;

  double target(int agent, int t) const;
  double base_target(int agent) const { return base_[agent]; }
  double offset(int agent) const { return offsets_[agent]; }

 private:
  int n_;
  double noise_;
  std::vector<double> base_;
  std::vector<double> offsets_;
  std::uint64_t seed_;
};

/// Same cost class as SyntheticProblem, but the constraint is removed (g = 0).
/// Used to check the decoupled dynamics.
class UnconstrainedSynthetic final : public OnlineProblem {
 public:
  explicit UnconstrainedSynthetic(SyntheticProblem inner) : inner_(std::move(inner)) {}
  std::string name() const override { return "synthetic_unconstrained"; }
  int agents() const override { return inner_.agents(); }
  int constraint_dim() const override { return 1; }
  int decision_dim(int) const override { return 1; }
  CostValue cost(int agent, int t, const Vec& x) const override { return inner_.cost(agent, t, x); }
  std::unique_ptr<AggregateCost> aggregate(int agent, int horizon) const override {
    return inner_.aggregate(agent, horizon);
  }
  Vec constraint(int, const Vec&) const override { return Vec::Zero(1); }
  Mat constraint_jacobian(int, const Vec&) const override { return Mat::Zero(1, 1); }
  Vec project(int agent, const Vec& v) const override { return inner_.project(agent, v); }
  std::optional<std::pair<Vec, Vec>> bounding_box(int agent) const override { return inner_.bounding_box(agent); }
  ProblemConstants constants() const override {
    auto c = inner_.constants();
    c.c_g = 0.0;
    c.l_g = 0.0;
    return c;
  }

 private:
  SyntheticProblem inner_;
};

}  // namespace dopd
