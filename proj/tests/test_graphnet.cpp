#include "support.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>

using namespace dopd;
using testkit::Mat;

namespace {

using Big = boost::multiprecision::cpp_dec_float_50;

Adjacency edges_of(int n, std::initializer_list<std::pair<int, int>> list) {
  Adjacency a = Adjacency::Constant(n, n, false);
  for (auto [i, j] : list) a(i, j) = a(j, i) = true;
  return a;
}

Adjacency random_adjacency(int n, double p, std::mt19937_64& gen) {
  std::bernoulli_distribution coin(p);
  Adjacency a = Adjacency::Constant(n, n, false);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = coin(gen);
  return a;
}

}  // namespace

TEST_CASE("weight matrix examples") {
  const Mat two = build_weight_matrix(edges_of(2, {{0, 1}})).w;
  CHECK((two - Mat::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  CHECK(build_weight_matrix(edges_of(3, {})).w == Mat::Identity(3, 3));

  Mat expect(3, 3);
  expect << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3, 0, 0, 0, 1;
  CHECK((build_weight_matrix(edges_of(3, {{0, 1}})).w - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("weight matrix rejects asymmetric adjacency") {
  Adjacency a = Adjacency::Constant(3, 3, false);
  a(0, 1) = true;
  CHECK_THROWS_AS(build_weight_matrix(a), ValidationError);
}

TEST_CASE("property: weight matrices are symmetric, doubly stochastic, weights at least 1/N") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 12);
    const Adjacency a = random_adjacency(n, 0.4, gen);
    const WeightMatrix w = build_weight_matrix(a);
    CHECK((w.w - w.w.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((w.w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= kStochasticTol);
    CHECK((w.w.colwise().sum().array() - 1.0).abs().maxCoeff() <= kStochasticTol);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (w.w(i, j) != 0.0) CHECK(w.w(i, j) >= 1.0 / n - 1e-15);
    CHECK(w.edges() == a);
  }
}

TEST_CASE("validation: identity matrices never connect") {
  const auto seq = GraphSequence::from_matrices({WeightMatrix{Mat::Identity(3, 3), 1.0 / 3}}, 1.0 / 3, 5);
  const auto rep = check_assumption1(seq, 20);
  CHECK(rep.nondegeneracy.pass);
  CHECK(rep.double_stochastic.pass);
  CHECK_FALSE(rep.joint_connectivity.pass);
  CHECK_FALSE(rep.pass());
}

TEST_CASE("validation: alternating edges with Q=2 pass") {
  const auto a = build_weight_matrix(edges_of(3, {{0, 1}}));
  const auto b = build_weight_matrix(edges_of(3, {{1, 2}}));
  const auto seq = GraphSequence::from_matrices({a, b}, 1.0 / 3, 2);
  CHECK(check_assumption1(seq, 50).pass());
  // The same pair is not connected in every single round.
  const auto single = GraphSequence::from_matrices({a, b}, 1.0 / 3, 1);
  CHECK_FALSE(check_assumption1(single, 50).joint_connectivity.pass);
}

TEST_CASE("validation: row sum 0.9 fails stochasticity") {
  Mat w = build_weight_matrix(edges_of(3, {{0, 1}, {1, 2}})).w;
  w(2, 2) -= 0.1;
  const auto seq = GraphSequence::from_matrices({WeightMatrix{w, 1.0 / 3}}, 1.0 / 3, 1);
  const auto rep = check_assumption1(seq, 4);
  CHECK_FALSE(rep.double_stochastic.pass);
  REQUIRE(rep.double_stochastic.first_violation.has_value());
  CHECK(*rep.double_stochastic.first_violation == 1);
}

TEST_CASE("validation: window longer than horizon is rejected") {
  const auto seq = GraphSequence::from_matrices({WeightMatrix{Mat::Identity(2, 2), 0.5}}, 0.5, 5);
  CHECK_THROWS_AS(check_assumption1(seq, 3), ValidationError);
}

TEST_CASE("gamma and beta examples") {
  const auto q1 = gamma_beta(0.1, 10, 1);
  CHECK(q1.gamma == doctest::Approx(1.0010008).epsilon(1e-7));
  CHECK(q1.beta == doctest::Approx(0.9995).epsilon(1e-12));
  const auto q10 = gamma_beta(0.1, 10, 10);
  CHECK(q10.gamma == q1.gamma);
  CHECK(q10.beta == doctest::Approx(0.99994999).epsilon(1e-8));
  CHECK_THROWS_AS(gamma_beta(0.0, 3, 1), ValidationError);
  CHECK_THROWS_AS(gamma_beta(0.5, 3, 0), ValidationError);
}

TEST_CASE("property: gamma and beta agree with 50-digit arithmetic, beta increases in Q") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ueta(1e-3, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double eta = ueta(gen);
    const int n = 1 + static_cast<int>(gen() % 200);
    const int q = 1 + static_cast<int>(gen() % 50);
    const auto gb = gamma_beta(eta, n, q);
    const Big base = Big(1) - Big(eta) / (Big(2) * Big(n) * Big(n));
    const Big gamma = 1 / (base * base);
    const Big beta = boost::multiprecision::pow(base, Big(1) / Big(q));
    CHECK(std::abs(gb.gamma - gamma.convert_to<double>()) <= 1e-15 * gb.gamma);
    CHECK(std::abs(gb.beta - beta.convert_to<double>()) <= 1e-15);
    const double omb = (Big(1) - beta).convert_to<double>();
    CHECK(std::abs(gb.one_minus_beta - omb) <= 1e-12 * omb);
    CHECK(gamma_beta(eta, n, q + 1).beta >= gb.beta);
  }
}

TEST_CASE("random sequence on a ring passes validation") {
  ThinningScenario sc;
  sc.base = ring_adjacency(4);
  sc.base_kind = "ring";
  const auto seq = random_graph_sequence(sc, 7, 1);
  for (int t = 1; t <= 200; ++t) CHECK(is_connected(seq.at(t).edges()));
  CHECK(check_assumption1(seq, 1000).pass());
}

TEST_CASE("single agent sequence is the scalar 1") {
  ThinningScenario sc;
  sc.base = Adjacency::Constant(1, 1, false);
  const auto seq = random_graph_sequence(sc, 3, 1);
  for (int t = 1; t <= 10; ++t) CHECK(seq.at(t).w == Mat::Identity(1, 1));
  CHECK(seq.eta() == 1.0);
}

TEST_CASE("disconnected base cannot be thinned") {
  ThinningScenario sc;
  sc.base = edges_of(4, {{0, 1}, {2, 3}});
  CHECK_THROWS_AS(random_graph_sequence(sc, 1, 1), ValidationError);
}

TEST_CASE("property: thinned sequences are deterministic and valid for random bases and windows") {
  std::mt19937_64 gen(19);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(gen() % 9);
    Adjacency base = random_adjacency(n, 0.5, gen);
    for (int i = 0; i + 1 < n; ++i) base(i, i + 1) = base(i + 1, i) = true;  // keep it connected
    ThinningScenario sc;
    sc.base = base;
    sc.extra_edge_prob = 0.3;
    const int q = 1 + static_cast<int>(gen() % 12);
    const std::uint64_t seed = gen();
    const auto a = random_graph_sequence(sc, seed, q);
    const auto b = random_graph_sequence(sc, seed, q);
    const auto rep = check_assumption1(a, 300);
    CHECK(rep.pass());
    CHECK(rep.max_row_error <= 1e-12);
    CHECK(rep.max_col_error <= 1e-12);
    for (int t = 1; t <= 300; t += 7) {
      CHECK(a.at(t).w == b.at(t).w);
      // Only base edges are ever used.
      const Adjacency e = a.at(t).edges();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (e(i, j)) CHECK(base(i, j));
    }
  }
}

TEST_CASE("graph sequences survive a JSON round trip") {
  ThinningScenario sc;
  sc.base = ring_adjacency(5);
  sc.base_kind = "ring";
  const auto gen_seq = random_graph_sequence(sc, 42, 3);
  const auto back = graph_sequence_from_json(to_json(gen_seq));
  for (int t = 1; t <= 50; ++t) CHECK(back.at(t).w == gen_seq.at(t).w);

  const auto a = build_weight_matrix(edges_of(3, {{0, 1}}));
  const auto b = build_weight_matrix(edges_of(3, {{1, 2}}));
  const auto explicit_seq = GraphSequence::from_matrices({a, b}, 1.0 / 3, 2);
  const auto back2 = graph_sequence_from_json(to_json(explicit_seq));
  CHECK(back2.q() == 2);
  for (int t = 1; t <= 6; ++t) CHECK(back2.at(t).w == explicit_seq.at(t).w);
  CHECK(back2.at(3).w == a.w);  // explicit lists repeat
}

TEST_CASE("malformed graph JSON is rejected") {
  CHECK_THROWS_AS(graph_sequence_from_json(nlohmann::json::parse(R"({"n": 2})")), ValidationError);
  CHECK_THROWS_AS(graph_sequence_from_json(nlohmann::json::parse(R"({"n": 2, "eta": 0.5, "q": 1, "matrices": [[[1]]]})")),
                  ValidationError);
}
