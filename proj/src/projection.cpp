#include "dopd/problems.hpp"

#include <algorithm>
#include <functional>

namespace dopd {

namespace {

class LoopAggregate final : public AggregateCost {
 public:
  LoopAggregate(const OnlineProblem& p, int agent, int horizon) : p_(p), agent_(agent), horizon_(horizon) {}

  CostValue eval(const Vec& x) const override {
    CostValue acc{0.0, Vec::Zero(x.size())};
    for (int t = 1; t <= horizon_; ++t) {
      const CostValue c = p_.cost(agent_, t, x);
      acc.value += c.value;
      acc.gradient += c.gradient;
    }
    return acc;
  }

 private:
  const OnlineProblem& p_;
  int agent_;
  int horizon_;
};

}  // namespace

std::unique_ptr<AggregateCost> OnlineProblem::aggregate(int agent, int horizon) const {
  return std::make_unique<LoopAggregate>(*this, agent, horizon);
}

int OnlineProblem::total_dim() const {
  int n = 0;
  for (int i = 0; i < agents(); ++i) n += decision_dim(i);
  return n;
}

std::vector<int> OnlineProblem::offsets() const {
  std::vector<int> off(agents() + 1, 0);
  for (int i = 0; i < agents(); ++i) off[i + 1] = off[i] + decision_dim(i);
  return off;
}

Vec project_simplex(const Vec& v) {
  const auto n = v.size();
  require(n >= 1, "cannot project an empty vector onto the simplex");
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - candidate > 0.0) theta = candidate;
  }
  return (v.array() - theta).max(0.0).matrix();
}

Vec project_box(const Vec& v, double lo, double hi) { return v.cwiseMax(lo).cwiseMin(hi); }

}  // namespace dopd
