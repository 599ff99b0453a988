#include "support.hpp"

#include "dopd/experiment.hpp"
#include "dopd/metrics.hpp"
#include "dopd/synthetic.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>

using namespace dopd;
using testkit::ScalarProblem;

namespace {

using Big = boost::multiprecision::cpp_dec_float_50;

OracleOptions grid(double res = 1e-3) {
  OracleOptions o;
  o.method = OracleOptions::Method::Grid;
  o.grid_resolution = res;
  return o;
}

// Bound constants written out from the nomenclature display in 50 digits.
struct BigBounds {
  Big a_n, b[4], d[4];
};

BigBounds big_bounds(const BoundInputs& in) {
  const Big n = in.n, cx = in.c_x, cl = in.c_lambda, cy = in.c_y, cf = in.c_penalty;
  const Big lf = in.l_f, lg = in.l_g, lF = in.l_penalty, gF = in.g_penalty;
  const Big base = Big(1) - Big(in.eta) / (2 * n * n);
  const Big gamma = 1 / (base * base);
  const Big beta = boost::multiprecision::pow(base, Big(1) / Big(in.q));
  BigBounds r;
  const Big a = gamma * beta / (1 - beta);
  r.a_n = a;
  r.b[0] = (2 * n + a * n * n) * cl;
  r.b[1] = 4 * cf + 2 * cf * a * n;
  r.b[2] = (2 * n + a * n * n) * cy;
  r.b[3] = 4 * lg * lg * lF * cl + (4 * lf * lg + 2 * lg * lg * lF * cl * a) * n + 2 * lf * lg * a * n * n;
  const Big k1 = (2 * cx * lg * lf + cf) * cl / n + (2 * cx * cl * lg * gF + 2 * cl * lF) * cy;
  const Big k2 = (lg * lg * lf * lf * cl * cl + cf * cf + 8 * cf * cx * lg * lf + 4 * cf) / n +
                 8 * cx * cl * cl * lg * lg * lg * gF * lF + 8 * lg * lg * cl * cl * lF * lF + 2 * lf * lg * lF * cl;
  const Big k3 = 2 * (cx * cx + cl * cl) + lf * lf + 8 * lf * lg * (cx * cl * lg * gF + cl * lF);
  const Big k4 = 4 * lg * lg * lF * cl * (cx * cl * lg * gF + cl * lF);
  const Big k5 = 4 * lf * lg * (cx * cl * lg * gF + cl * lF);
  const Big k6 = lF * cy;
  const Big k7 = 4 * lg * lg * lF * lF * cl;
  const Big k8 = 4 * lf * lg * lF + cl;
  const Big k9 = 2 * lg * lg * lF * lF * cl;
  const Big k10 = 2 * lf * lg * lF;
  r.d[0] = k1 * (2 * n + a * n * n);
  r.d[1] = k2 + (k3 + k4 * a) * n + k5 * a * n * n;
  r.d[2] = k6 * (2 * n + a * n * n);
  r.d[3] = k7 + (k8 + k9 * a) * n + k10 * a * n * n;
  return r;
}

double rel(double got, const Big& want) {
  const double w = want.convert_to<double>();
  return w == 0.0 ? std::abs(got) : std::abs(got - w) / std::abs(w);
}

}  // namespace

TEST_CASE("oracle: single agent with an active constraint") {
  const ScalarProblem p({1.0}, {0.5}, 0.0, 2.0);
  const auto r = offline_oracle(p, 10);
  CHECK(r.x(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(r.multiplier(0) == doctest::Approx(1.0).epsilon(1e-4));  // averaged problem: 2(x-1) + mu = 0
  CHECK(r.kkt_residual <= 1e-8);
  CHECK(std::abs(offline_oracle(p, 10, grid()).x(0) - 0.5) <= 1e-3);
}

TEST_CASE("oracle: inactive constraint gives the unconstrained minimizer") {
  const ScalarProblem p({1.3}, {1.0}, 0.0, 2.0, 0.0);  // g = -1
  CHECK(offline_oracle(p, 5).x(0) == doctest::Approx(1.3).epsilon(1e-7));
  CHECK(offline_oracle(p, 5).multiplier(0) == 0.0);
}

TEST_CASE("oracle: two agents share one budget") {
  const ScalarProblem p({1.0, 0.0}, {0.5, 0.5}, 0.0, 1.0);
  const Vec x = offline_oracle(p, 3).x;
  CHECK(std::abs(x(0) - 1.0) <= 1e-6);
  CHECK(std::abs(x(1)) <= 1e-6);
  const Vec xg = offline_oracle(p, 3, grid()).x;
  CHECK(std::abs(xg(0) - 1.0) <= 1e-3);
  CHECK(std::abs(xg(1)) <= 1e-3);
}

TEST_CASE("oracle: infeasible problems and bad options are rejected") {
  const ScalarProblem p({0.5}, {-1.0}, 0.0, 1.0);  // x <= -1 on [0,1]
  CHECK_THROWS_AS(offline_oracle(p, 3), ValidationError);
  CHECK_THROWS_AS(offline_oracle(p, 3, grid(0.01)), ValidationError);
  CHECK_THROWS_AS(offline_oracle(p, 0), ValidationError);
  CHECK_THROWS_AS(offline_oracle(p, 3, grid(0.0)), ValidationError);
  const ScalarProblem q({0.5, 0.5, 0.5}, {1, 1, 1}, 0.0, 1.0);
  CHECK_THROWS_AS(offline_oracle(q, 3, grid(1e-4)), ValidationError);  // point budget
}

TEST_CASE("property: oracle agrees with grid search on random synthetic instances") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 2);
    const SyntheticProblem p(n, {}, gen());
    const int horizon = 5 + static_cast<int>(gen() % 20);
    const auto exact = offline_oracle(p, horizon);
    const auto coarse = offline_oracle(p, horizon, grid(n == 1 ? 1e-4 : 2e-3));
    CHECK(exact.max_violation <= 1e-6);
    // The grid can only be worse, and at most by the cost variation over one cell.
    CHECK(coarse.value >= exact.value - 1e-6 * horizon);
    CHECK((coarse.x - exact.x).cwiseAbs().maxCoeff() <= (n == 1 ? 1e-4 : 4e-3));
  }
}

TEST_CASE("cost regret examples") {
  Mat at(1, 4);
  at << 0.3, 0.2, 0.1, 0.4;
  CHECK(cost_regret(at, Vec(at.row(0).transpose())).isZero());

  const ScalarProblem sq({0.0}, {0.0}, -1.0, 1.0, 0.0);  // f = x^2
  const Vec star = comparator_round_costs(sq, Vec::Zero(1), 1);
  CHECK(cost_regret(Mat::Ones(1, 1), star)(0) == 1.0);

  std::mt19937_64 gen(2);
  const Mat costs = Mat::Random(3, 50);
  const Vec comp = Vec::Random(50);
  const Vec r = cost_regret(costs, comp);
  for (int t = 1; t < 50; ++t) CHECK(r(t) == r(t - 1) + (costs.col(t).sum() - comp(t)));
  CHECK_THROWS_AS(cost_regret(costs, Vec::Zero(49)), ValidationError);
}

TEST_CASE("constraint regret examples") {
  const auto smooth = smooth_max_penalty(1, 0.01);
  CHECK(constraint_regret(Mat::Constant(1, 10, -0.02), smooth).isZero());
  const auto id = identity_penalty(1);
  CHECK(constraint_regret(Mat::Constant(1, 10, 0.1), id)(9) == doctest::Approx(1.0).epsilon(1e-15));
  Mat pm(1, 2);
  pm << 1.0, -1.0;
  CHECK(constraint_regret(pm, id)(1) == 0.0);
  CHECK(constraint_regret(pm, smooth)(1) == 1.0);
}

TEST_CASE("disagreement series by hand") {
  const auto p = std::make_shared<ScalarProblem>(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 1}, 0.0, 1.0);
  Adjacency a = Adjacency::Constant(2, 2, false);
  a(0, 1) = a(1, 0) = true;
  RunConfig c;
  c.problem = p;
  c.penalty = std::make_shared<PenaltyFunction>(identity_penalty(1));
  c.graph = std::make_shared<GraphSequence>(GraphSequence::from_matrices({build_weight_matrix(a)}, 0.5, 1));
  c.horizon = 1;
  Mat l(1, 2);
  l << 0.0, 2.0;
  c.initial_lambda = l;
  const auto tr = run_dopd(c);
  const auto d = disagreement_series(tr);
  CHECK(d.lambda(0) == 0.0);
  CHECK(tr.lambda_spread(0) == 2.0);
}

TEST_CASE("disagreement vanishes at consensus with no perturbation") {
  const auto p = std::make_shared<UnconstrainedSynthetic>(SyntheticProblem(4, {}, 3));
  RunConfig c;
  c.problem = p;
  c.penalty = std::make_shared<PenaltyFunction>(identity_penalty(1));
  c.graph = testkit::identity_graph(4);
  c.validate_graph = false;
  c.horizon = 30;
  c.initial_lambda = Mat::Constant(1, 4, 0.2);
  const auto d = disagreement_series(run_dopd(c));
  CHECK(d.lambda_cumulative.isZero());
  CHECK(d.y_cumulative.isZero());
}

TEST_CASE("random run: cumulative disagreement below its bound") {
  ExperimentConfig cfg;
  cfg.agents = 6;
  cfg.horizon = 2000;
  cfg.seed = 5;
  cfg.graph.q = 3;
  const auto r = evaluate_experiment(cfg);
  const auto d = disagreement_series(r.trajectory);
  for (int t = 1; t <= cfg.horizon; ++t) {
    CHECK(d.lambda_cumulative(t - 1) <= r.bounds.lambda_disagreement_bound(t));
    CHECK(d.y_cumulative(t - 1) <= r.bounds.y_disagreement_bound(t));
  }
}

TEST_CASE("bound constants examples") {
  BoundInputs in;
  in.eta = 0.1;
  in.n = 10;
  in.q = 1;
  in.c_lambda = 1.0;
  const auto c = bound_constants(in);
  CHECK(c.gamma == doctest::Approx(1.0010008).epsilon(1e-7));
  CHECK(c.beta == doctest::Approx(0.9995));
  CHECK(c.a_n == doctest::Approx(2001.0).epsilon(1e-6));
  CHECK(c.b[0] == doctest::Approx(200120.0).epsilon(1e-6));

  BoundInputs zero;
  zero.eta = 0.3;
  zero.n = 4;
  zero.q = 2;
  const auto z = bound_constants(zero);
  for (double v : z.b) CHECK(v == 0.0);
  for (double v : z.d) CHECK(v == 0.0);
  for (double v : z.k) CHECK(v == 0.0);

  BoundInputs tiny = in;
  tiny.eta = 1e-300;
  CHECK_THROWS_WITH_AS(bound_constants(tiny), "divergent A_N", ValidationError);
  tiny = in;
  tiny.c_x = -1.0;
  CHECK_THROWS_AS(bound_constants(tiny), ValidationError);
}

TEST_CASE("property: bound constants agree with a 50-digit evaluation") {
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(0.0, 5.0), ue(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    BoundInputs in;
    in.eta = ue(gen);
    in.n = 1 + static_cast<int>(gen() % 30);
    in.q = 1 + static_cast<int>(gen() % 10);
    for (double* v : {&in.c_x, &in.c_lambda, &in.c_y, &in.c_g, &in.c_f, &in.l_f, &in.l_g, &in.l_penalty,
                      &in.g_penalty, &in.c_penalty})
      *v = u(gen);
    const auto c = bound_constants(in);
    const auto big = big_bounds(in);
    CHECK(rel(c.a_n, big.a_n) <= 1e-12);
    for (int k = 0; k < 4; ++k) {
      CHECK(rel(c.b[k], big.b[k]) <= 1e-12);
      CHECK(rel(c.d[k], big.d[k]) <= 1e-12);
    }
    // More agents or a longer window never tightens the bound.
    BoundInputs wider = in;
    wider.q += 1;
    CHECK(bound_constants(wider).d[1] >= c.d[1]);
  }
}

TEST_CASE("bound constants survive JSON") {
  BoundInputs in;
  in.eta = 0.2;
  in.n = 5;
  in.q = 2;
  in.c_x = 1;
  in.c_lambda = 2;
  in.c_y = 3;
  in.l_f = 4;
  in.l_g = 1;
  in.l_penalty = 1;
  in.g_penalty = 1000;
  in.c_penalty = 0.5;
  const auto j = to_json(bound_constants(in));
  const auto again = bound_constants(bound_inputs_from_json(j["inputs"]));
  CHECK(again.d[1] == bound_constants(in).d[1]);
  CHECK(j["B1"].get<double>() == bound_constants(in).b[0]);
  CHECK(j.contains("K10"));
  CHECK_THROWS_AS(bound_inputs_from_json(nlohmann::json::parse(R"({"eta": "x"})")), ValidationError);
}

TEST_CASE("tracker bound dominates observed trackers") {
  ExperimentConfig cfg;
  cfg.agents = 5;
  cfg.horizon = 3000;
  cfg.seed = 12;
  const auto r = evaluate_experiment(cfg);
  const auto& tr = r.trajectory;
  const auto setup = prepare_experiment(cfg);
  const auto pc = setup.problem->constants();
  const double cy =
      tracker_bound(setup.graph->eta(), 5, 1, tr.initial_y_spread_max, tr.initial_y_max, pc.l_g, pc.c_x, pc.c_g);
  CHECK(tr.c_y <= cy);
}

TEST_CASE("lagrangian examples") {
  const ScalarProblem sq({0.0}, {0.0}, -5.0, 5.0);  // f = x^2, g = x
  const auto id = identity_penalty(1);
  CHECK(lagrangian_value(sq, 1, Vec::Constant(1, 2.0), Vec::Constant(1, 3.0), id) == 10.0);
  CHECK(lagrangian_value(sq, 1, Vec::Constant(1, 2.0), Vec::Zero(1), id) == 4.0);
  CHECK(lagrangian_grad_lambda(sq, Vec::Constant(1, 2.0), id)(0) == 2.0);
}

TEST_CASE("property: lagrangian gradients match finite differences") {
  RoutingParams rp;
  rp.n_sources = 3;
  rp.n_aps = 1;
  const RoutingProblem p(make_routing_network(rp, 9), 9);
  const auto f = smooth_max_penalty(3, 0.3);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vec x(p.total_dim());
    for (int j = 0; j < x.size(); ++j) x(j) = u(gen);
    const auto off = p.offsets();
    for (int i = 0; i < 3; ++i) x.segment(off[i], off[i + 1] - off[i]) = p.project(i, x.segment(off[i], off[i + 1] - off[i]));
    Vec lam(3);
    for (int k = 0; k < 3; ++k) lam(k) = 1.0 + u(gen);
    const int t = 1 + static_cast<int>(gen() % 10);
    const Vec g = lagrangian_grad_x(p, t, x, lam, f);
    const double h = 1e-6;
    for (int j = 0; j < x.size(); ++j) {
      Vec a = x, b = x;
      a(j) += h;
      b(j) -= h;
      const double fd = (lagrangian_value(p, t, a, lam, f) - lagrangian_value(p, t, b, lam, f)) / (2 * h);
      CHECK(std::abs(fd - g(j)) <= 1e-5);
    }
    const Vec gl = lagrangian_grad_lambda(p, x, f);
    for (int k = 0; k < 3; ++k) {
      Vec a = lam, b = lam;
      a(k) += h;
      b(k) -= h;
      const double fd = (lagrangian_value(p, t, x, a, f) - lagrangian_value(p, t, x, b, f)) / (2 * h);
      CHECK(std::abs(fd - gl(k)) <= 1e-5);
    }
  }
}

TEST_CASE("time to threshold is one-sided") {
  Vec r(6);
  r << 1, 0.1, 3, 0.2, 0.2, 0.2;  // averages 1, .05, 1, .05, .04, .033
  CHECK(time_to_threshold(r, 0.06) == 4);
  CHECK(time_to_threshold(r, 10.0) == 1);
  CHECK(time_to_threshold(r, 0.01) == 7);
}
