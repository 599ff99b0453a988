#include "dopd/synthetic.hpp"

#include "dopd/random.hpp"

#include <algorithm>
#include <cmath>

namespace dopd {

SyntheticProblem::SyntheticProblem(int n, SyntheticParams params, std::uint64_t seed)
    : n_(n), noise_(params.noise), seed_(seed) {
  require(n >= 1, "synthetic problem needs at least one agent");
  require(params.noise >= 0.0, "noise amplitude must be nonnegative");
  require(params.target_lo <= params.target_hi, "target range is inverted");
  if (params.targets.empty()) {
    Rng rng(seed, {hash_label("synthetic-targets")});
    for (int i = 0; i < n; ++i) base_.push_back(rng.uniform(params.target_lo, params.target_hi));
  } else {
    require(static_cast<int>(params.targets.size()) == n, "targets must have one entry per agent");
    base_ = params.targets;
  }
  if (params.offsets.empty()) {
    const double budget = params.budget.value_or(n / 4.0);
    offsets_.assign(n, budget / n);
  } else {
    require(static_cast<int>(params.offsets.size()) == n, "offsets must have one entry per agent");
    offsets_ = params.offsets;
  }
}

double SyntheticProblem::target(int agent, int t) const {
  if (noise_ == 0.0) return base_[agent];
  Rng rng(seed_, {hash_label("synthetic-cost"), static_cast<std::uint64_t>(agent), static_cast<std::uint64_t>(t)});
  return base_[agent] + noise_ * rng.uniform(-1.0, 1.0);
}

CostValue SyntheticProblem::cost(int agent, int t, const Vec& x) const {
  require(t >= 1, "cost rounds start at 1");
  const double r = x(0) - target(agent, t);
  CostValue c;
  c.value = r * r;
  c.gradient = Vec::Constant(1, 2.0 * r);
  return c;
}

namespace {

// sum_t (x - a_t)^2 = h x^2 - 2 x S1 + S2
class SyntheticAggregate final : public AggregateCost {
 public:
  SyntheticAggregate(double h, double s1, double s2) : h_(h), s1_(s1), s2_(s2) {}
  CostValue eval(const Vec& x) const override {
    const double v = x(0);
    return {h_ * v * v - 2.0 * v * s1_ + s2_, Vec::Constant(1, 2.0 * (h_ * v - s1_))};
  }

 private:
  double h_, s1_, s2_;
};

}  // namespace

std::unique_ptr<AggregateCost> SyntheticProblem::aggregate(int agent, int horizon) const {
  double s1 = 0.0, s2 = 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const double a = target(agent, t);
    s1 += a;
    s2 += a * a;
  }
  return std::make_unique<SyntheticAggregate>(static_cast<double>(horizon), s1, s2);
}

Vec SyntheticProblem::constraint(int agent, const Vec& x) const { return Vec::Constant(1, x(0) - offsets_[agent]); }

Mat SyntheticProblem::constraint_jacobian(int, const Vec&) const { return Mat::Constant(1, 1, 1.0); }

Vec SyntheticProblem::project(int, const Vec& v) const { return project_box(v, 0.0, 1.0); }

std::optional<std::pair<Vec, Vec>> SyntheticProblem::bounding_box(int) const {
  return std::make_pair(Vec::Zero(1), Vec::Ones(1));
}

ProblemConstants SyntheticProblem::constants() const {
  double a_lo = base_[0], a_hi = base_[0];
  for (double a : base_) {
    a_lo = std::min(a_lo, a - noise_);
    a_hi = std::max(a_hi, a + noise_);
  }
  // x in [0,1], a in [a_lo, a_hi]: |x - a| <= max(a_hi, 1 - a_lo, |a_lo|, |1 - a_hi|).
  const double gap = std::max({std::abs(a_hi), std::abs(1.0 - a_lo), std::abs(a_lo), std::abs(1.0 - a_hi)});
  double c_g = 0.0;
  for (double c : offsets_) c_g = std::max({c_g, std::abs(c), std::abs(1.0 - c)});
  ProblemConstants k;
  k.c_x = 1.0;
  k.c_f = gap * gap;
  k.c_g = c_g;
  k.l_f = 2.0 * gap;
  k.l_g = 1.0;
  return k;
}

}  // namespace dopd
