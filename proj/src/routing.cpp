#include "dopd/routing.hpp"

#include "dopd/random.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace dopd {

CubicCoefficients cubic_coefficients(double l, double u) {
  require(0.0 < l && l < u && u < 1.0, "rate cutoffs must satisfy 0 < l < u < 1");
  const double den = std::pow(l - u, 3);
  return {-2.0 / den, 3.0 * (l + u) / den, -6.0 * l * u / den, (3.0 * l * u * u - u * u * u) / den};
}

double rate_fn(double dist, double l, double u) {
  const auto c = cubic_coefficients(l, u);
  if (dist <= l) return 1.0;
  if (dist >= u) return 0.0;
  return ((c.a * dist + c.b) * dist + c.c) * dist + c.d;
}

namespace {

double distance(const std::array<double, 2>& p, const std::array<double, 2>& q) {
  return std::hypot(p[0] - q[0], p[1] - q[1]);
}

Mat nominal_rates(const RoutingNetwork& net) {
  const int nodes = net.nodes();
  Mat r = Mat::Zero(nodes, nodes);
  for (int i = 0; i < net.n; ++i)
    for (int j = 0; j < nodes; ++j)
      if (i != j) r(i, j) = rate_fn(distance(net.positions[i], net.positions[j]), net.l, net.u);
  return r;
}

}  // namespace

Adjacency communication_base(const RoutingNetwork& net) {
  Adjacency a = Adjacency::Constant(net.n, net.n, false);
  for (int i = 0; i < net.n; ++i)
    for (int j = 0; j < net.n; ++j)
      if (i != j && net.nominal(i, j) > 0.0) a(i, j) = true;
  return a;
}

RoutingNetwork make_routing_network(const RoutingParams& params, std::uint64_t seed) {
  require(params.n_sources >= 1, "routing needs at least one source");
  require(params.n_aps >= 1, "routing needs at least one access point");
  require(params.noise_amplitude >= 0.0, "noise amplitude must be nonnegative");
  require(params.box_width > 0.0 && params.box_height > 0.0, "placement box must have positive size");
  cubic_coefficients(params.l, params.u);

  RoutingNetwork net;
  net.n = params.n_sources;
  net.k = params.n_aps;
  net.l = params.l;
  net.u = params.u;
  net.noise_amplitude = params.noise_amplitude;
  if (params.r_min.empty()) {
    net.r_min = Vec::Constant(net.n, 0.001);
  } else {
    require(static_cast<int>(params.r_min.size()) == net.n, "r_min must have one entry per source");
    net.r_min = Eigen::Map<const Vec>(params.r_min.data(), net.n);
  }
  net.z_max = params.z_max.value_or(static_cast<double>(net.n + net.k));
  require(net.z_max > 0.0, "z_max must be positive");

  if (!params.positions.empty()) {
    require(static_cast<int>(params.positions.size()) == net.nodes(), "positions must list every source and AP");
    net.positions = params.positions;
    net.nominal = nominal_rates(net);
    return net;
  }
  constexpr int kPlacementAttempts = 64;
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    Rng rng(seed, {hash_label("placement"), static_cast<std::uint64_t>(attempt)});
    net.positions.clear();
    for (int i = 0; i < net.nodes(); ++i)
      net.positions.push_back({rng.uniform(0.0, params.box_width), rng.uniform(0.0, params.box_height)});
    net.nominal = nominal_rates(net);
    if (is_connected(communication_base(net))) return net;
  }
  throw ValidationError("could not place sources with a connected communication graph");
}

Mat realize_rates(const RoutingNetwork& net, int t, std::uint64_t seed) {
  if (net.noise_amplitude == 0.0) return net.nominal;
  Rng rng(seed, {hash_label("rates"), static_cast<std::uint64_t>(t)});
  Mat r = Mat::Zero(net.nodes(), net.nodes());
  for (int i = 0; i < net.n; ++i) {
    for (int j = 0; j < net.nodes(); ++j) {
      if (i == j) continue;
      const double noisy = net.nominal(i, j) + net.noise_amplitude * rng.uniform(-1.0, 1.0);
      r(i, j) = std::clamp(noisy, 0.0, 1.0);
    }
  }
  return r;
}

Mat empirical_mean_update(const Mat& previous, const Mat& r_t, int t) {
  require(t >= 1, "running mean index starts at 1");
  if (t == 1) return r_t;
  require(previous.rows() == r_t.rows() && previous.cols() == r_t.cols(), "rate matrices differ in shape");
  return (static_cast<double>(t - 1) * previous + r_t) / static_cast<double>(t);
}

Mat build_flow_matrix(const Vec& rate_row, int source, int n, int k) {
  require(rate_row.size() == n + k, "rate row must have N+K entries");
  require(source >= 0 && source < n, "flow matrix source must be a source node");
  Mat m = Mat::Zero(n, n + k);
  m.row(source) = rate_row.transpose();
  m(source, source) = 0.0;
  for (int j = 0; j < n; ++j)
    if (j != source) m(j, j) = -rate_row(j);
  return m;
}

CostValue routing_cost(const Vec& x, const Mat& flow) {
  const auto n = flow.rows();
  const auto cols = flow.cols();
  require(x.size() == cols + n, "decision vector must be (T_i, z_i)");
  const Vec residual = x.tail(n) - flow * x.head(cols);
  CostValue c;
  c.value = 0.5 * residual.squaredNorm();
  c.gradient.resize(x.size());
  c.gradient.head(cols) = -flow.transpose() * residual;
  c.gradient.tail(n) = residual;
  return c;
}

Vec routing_constraint_g(const Vec& z, const Vec& r_min, int n) {
  require(z.size() == n && r_min.size() == n, "constraint dimensions must equal N");
  return -z + r_min / static_cast<double>(n);
}

Mat routing_constraint_jacobian(int n, int k) {
  Mat j = Mat::Zero(n, 2 * n + k);
  j.rightCols(n) = -Mat::Identity(n, n);
  return j;
}

Vec project_routing(const Vec& raw, int n, int k, double z_max) {
  require(raw.size() == 2 * n + k, "routing decision must have 2N+K entries");
  Vec out(raw.size());
  out.head(n + k) = project_simplex(raw.head(n + k));
  out.tail(n) = project_box(raw.tail(n), -z_max, z_max);
  return out;
}

Vec net_rates(const Mat& routing, const Mat& rates, int n) {
  // r_i = sum_{j in V u K} T_ij R_ij - sum_{j in V} T_ji R_ji
  Vec r = Vec::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < routing.cols(); ++j) r(i) += routing(i, j) * rates(i, j);
    for (int j = 0; j < n; ++j) r(i) -= routing(j, i) * rates(j, i);
  }
  return r;
}

void write_positions_csv(const RoutingNetwork& net, std::ostream& out) {
  out << "node,kind,x,y\n" << std::setprecision(17);
  for (int i = 0; i < net.nodes(); ++i)
    out << i << ',' << (i < net.n ? "source" : "ap") << ',' << net.positions[i][0] << ',' << net.positions[i][1]
        << '\n';
}

void write_rate_trace_csv(const RoutingNetwork& net, std::uint64_t seed, int horizon, std::ostream& out) {
  out << "t,i,j,rate\n" << std::setprecision(17);
  for (int t = 1; t <= horizon; ++t) {
    const Mat r = realize_rates(net, t, seed);
    for (int i = 0; i < net.n; ++i)
      for (int j = 0; j < net.nodes(); ++j)
        if (i != j) out << t << ',' << i << ',' << j << ',' << r(i, j) << '\n';
  }
}

RoutingProblem::RoutingProblem(RoutingNetwork net, std::uint64_t rate_seed) : net_(std::move(net)), seed_(rate_seed) {
  require(net_.nominal.rows() == net_.nodes(), "routing network is not initialised");
}

const Mat& RoutingProblem::advance_to(int t) const {
  require(t >= 1, "cost rounds start at 1");
  if (t < cursor_) cursor_ = 0;
  while (cursor_ < t) {
    ++cursor_;
    const Mat r = realize_rates(net_, cursor_, seed_).topRows(net_.n);
    mean_ = cursor_ == 1 ? r : empirical_mean_update(mean_, r, cursor_);
  }
  return mean_;
}

Mat RoutingProblem::mean_rates(int t) const {
  std::lock_guard lock(mutex_);
  return advance_to(t);
}

CostValue RoutingProblem::cost(int agent, int t, const Vec& x) const {
  Vec row;
  {
    std::lock_guard lock(mutex_);
    row = advance_to(t).row(agent).transpose();
  }
  return routing_cost(x, build_flow_matrix(row, agent, net_.n, net_.k));
}

namespace {

// sum_t 1/2 ||z - M_t T||^2 = 1/2 (h z'z - 2 z' S1 T + T' S2 T)
// with S1 = sum M_t, S2 = sum M_t' M_t = sum (R R' + diag of squared source rates).
class RoutingAggregate final : public AggregateCost {
 public:
  RoutingAggregate(double h, Mat s1, Mat s2) : h_(h), s1_(std::move(s1)), s2_(std::move(s2)) {}

  CostValue eval(const Vec& x) const override {
    const auto cols = s1_.cols();
    const auto n = s1_.rows();
    const Vec tshare = x.head(cols);
    const Vec z = x.tail(n);
    const Vec s1t = s1_ * tshare;
    const Vec s2t = s2_ * tshare;
    CostValue c;
    c.value = 0.5 * (h_ * z.squaredNorm() - 2.0 * z.dot(s1t) + tshare.dot(s2t));
    c.gradient.resize(x.size());
    c.gradient.head(cols) = s2t - s1_.transpose() * z;
    c.gradient.tail(n) = h_ * z - s1t;
    return c;
  }

 private:
  double h_;
  Mat s1_;
  Mat s2_;
};

}  // namespace

std::unique_ptr<AggregateCost> RoutingProblem::aggregate(int agent, int horizon) const {
  const int n = net_.n, cols = net_.nodes();
  Mat s1 = Mat::Zero(n, cols);
  Mat s2 = Mat::Zero(cols, cols);
  std::lock_guard lock(mutex_);
  for (int t = 1; t <= horizon; ++t) {
    const Vec row = advance_to(t).row(agent).transpose();
    s1 += build_flow_matrix(row, agent, n, net_.k);
    s2.selfadjointView<Eigen::Lower>().rankUpdate(row);
    for (int j = 0; j < n; ++j)
      if (j != agent) s2(j, j) += row(j) * row(j);
  }
  s2.triangularView<Eigen::StrictlyUpper>() = s2.transpose().triangularView<Eigen::StrictlyUpper>();
  return std::make_unique<RoutingAggregate>(static_cast<double>(horizon), std::move(s1), std::move(s2));
}

Vec RoutingProblem::constraint(int, const Vec& x) const {
  return routing_constraint_g(x.tail(net_.n), net_.r_min, net_.n);
}

Mat RoutingProblem::constraint_jacobian(int, const Vec&) const { return routing_constraint_jacobian(net_.n, net_.k); }

Vec RoutingProblem::project(int, const Vec& v) const { return project_routing(v, net_.n, net_.k, net_.z_max); }

std::optional<std::pair<Vec, Vec>> RoutingProblem::bounding_box(int) const {
  const int dim = 2 * net_.n + net_.k;
  Vec lo = Vec::Zero(dim), hi = Vec::Ones(dim);
  lo.tail(net_.n).setConstant(-net_.z_max);
  hi.tail(net_.n).setConstant(net_.z_max);
  return std::make_pair(lo, hi);
}

ProblemConstants RoutingProblem::constants() const {
  const double n = net_.n, k = net_.k;
  // Rates lie in [0,1] with a zero self entry, so ||M||_F^2 <= (N+K-1) + (N-1).
  const double flow_norm = std::sqrt(std::max(1.0, 2.0 * n + k - 2.0));
  const double z_norm = std::sqrt(n) * net_.z_max;
  const double residual = z_norm + flow_norm;
  ProblemConstants c;
  c.c_x = std::sqrt(1.0 + z_norm * z_norm);
  c.c_f = 0.5 * residual * residual;
  c.l_f = residual * std::sqrt(1.0 + flow_norm * flow_norm);
  c.l_g = 1.0;
  c.c_g = z_norm + net_.r_min.norm() / n;
  return c;
}

}  // namespace dopd
