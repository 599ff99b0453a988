#pragma once

// Multi-hop wireless routing under channel uncertainty, cast as an online
// problem. Agent i owns x_i = (T_i, z_i): time shares over the N sources and
// K access points, and an auxiliary flow vector tracking R_i T_i.

#include "dopd/graphnet.hpp"
#include "dopd/problems.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <vector>

namespace dopd {

struct RoutingParams {
  int n_sources = 10;
  int n_aps = 2;
  /// Explicit positions (sources first, then APs); drawn in the box when empty.
  std::vector<std::array<double, 2>> positions;
  double box_width = 1.0;
  double box_height = 0.6;
  double l = 0.5;
  double u = 0.8;
  double noise_amplitude = 0.1;
  /// Per-source thresholds; 0.001 each when empty.
  std::vector<double> r_min;
  /// Box half-width for z_i; N + K when unset.
  std::optional<double> z_max;
};

struct RoutingNetwork {
  int n = 0;  // sources
  int k = 0;  // access points
  std::vector<std::array<double, 2>> positions;
  double l = 0.5;
  double u = 0.8;
  double noise_amplitude = 0.0;
  Vec r_min;
  double z_max = 0.0;
  /// Noise-free rate matrix, (N+K) x (N+K); zero diagonal, zero AP rows.
  Mat nominal;

  int nodes() const { return n + k; }
};

struct CubicCoefficients {
  double a, b, c, d;
};

CubicCoefficients cubic_coefficients(double l, double u);

/// 1 below l, 0 above u, decreasing cubic in between (C^1 at both ends).
double rate_fn(double dist, double l, double u);

/// Builds the network; random positions are redrawn (deterministically) until
/// the source communication graph is connected.
RoutingNetwork make_routing_network(const RoutingParams& params, std::uint64_t seed);

/// Noisy rates for round t, clipped to [0,1]. Deterministic in (seed, t).
Mat realize_rates(const RoutingNetwork& net, int t, std::uint64_t seed);

/// Running mean: ((t-1) prev + r_t) / t.
Mat empirical_mean_update(const Mat& previous, const Mat& r_t, int t);

/// N x (N+K) matrix whose product with T_i gives the flow contributions of
/// source i: +sum_j T_ij R_ij on row i, -T_ij R_ij on row j for j a source.
Mat build_flow_matrix(const Vec& rate_row, int source, int n, int k);

/// 1/2 ||z - M T||^2 and its gradient with respect to (T, z).
CostValue routing_cost(const Vec& x, const Mat& flow);

/// g_i(z_i) = -z_i + r_min / N.
Vec routing_constraint_g(const Vec& z, const Vec& r_min, int n);
Mat routing_constraint_jacobian(int n, int k);

/// Simplex projection of T, box clamp of z.
Vec project_routing(const Vec& raw, int n, int k, double z_max);

/// Source pairs whose noise-free rate is positive.
Adjacency communication_base(const RoutingNetwork& net);

/// Net end-to-end rates r_k(T) computed directly from a full routing matrix.
Vec net_rates(const Mat& routing, const Mat& rates, int n);

void write_positions_csv(const RoutingNetwork& net, std::ostream& out);
void write_rate_trace_csv(const RoutingNetwork& net, std::uint64_t seed, int horizon, std::ostream& out);

class RoutingProblem final : public OnlineProblem {
 public:
  RoutingProblem(RoutingNetwork net, std::uint64_t rate_seed);

  std::string name() const override { return "routing"; }
  int agents() const override { return net_.n; }
  int constraint_dim() const override { return net_.n; }
  int decision_dim(int) const override { return 2 * net_.n + net_.k; }

  CostValue cost(int agent, int t, const Vec& x) const override;
  std::unique_ptr<AggregateCost> aggregate(int agent, int horizon) const override;
  Vec constraint(int agent, const Vec& x) const override;
  Mat constraint_jacobian(int agent, const Vec& x) const override;
  Vec project(int agent, const Vec& v) const override;
  std::optional<std::pair<Vec, Vec>> bounding_box(int agent) const override;
  ProblemConstants constants() const override;

  const RoutingNetwork& network() const { return net_; }
  /// Empirical mean rates after round t (source rows only, N x (N+K)).
  Mat mean_rates(int t) const;

 private:
  const Mat& advance_to(int t) const;

  RoutingNetwork net_;
  std::uint64_t seed_;
  // Sequential cursor over the running mean; rewinds by replaying from t = 1.
  mutable std::mutex mutex_;
  mutable int cursor_ = 0;
  mutable Mat mean_;
};

}  // namespace dopd
