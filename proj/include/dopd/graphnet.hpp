#pragma once

// Time-varying communication graphs and their consensus weight matrices.

#include "dopd/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dopd {

/// Symmetric boolean adjacency among agents, no self loops.
using Adjacency = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Doubly stochastic consensus weights for one round, together with the
/// nondegeneracy bound the producer declares for it.
struct WeightMatrix {
  Mat w;
  double eta = 0.0;

  int size() const { return static_cast<int>(w.rows()); }
  /// Off-diagonal nonzero pattern: the realized edge set.
  Adjacency edges() const;
};

inline constexpr double kStochasticTol = 1e-12;

/// Off-diagonal weight 1/n on every edge, remainder on the diagonal.
/// Rejects non-symmetric adjacency since column sums would break.
WeightMatrix build_weight_matrix(const Adjacency& adjacency);

Adjacency ring_adjacency(int n);
Adjacency complete_adjacency(int n);
bool is_connected(const Adjacency& adjacency);

/// Parameters for thinning a connected base graph into a Q-connected sequence.
struct ThinningScenario {
  Adjacency base;
  /// Probability of keeping each non-tree base edge in a given round.
  double extra_edge_prob = 0.1;
  int max_retries = 8;
  /// Label used in serialization ("ring", "complete", "geometric", "explicit").
  std::string base_kind = "explicit";
};

/// Either an explicit (periodically repeated) list of matrices or a seeded
/// generator. Matrices are indexed from t = 1.
class GraphSequence {
 public:
  static GraphSequence from_matrices(std::vector<WeightMatrix> matrices, double eta, int q);
  static GraphSequence thinned(ThinningScenario scenario, std::uint64_t seed, int q);

  int agents() const { return n_; }
  double eta() const { return eta_; }
  int q() const { return q_; }
  bool is_generated() const { return scenario_.has_value(); }

  WeightMatrix at(int t) const;

  const std::vector<WeightMatrix>& matrices() const { return matrices_; }
  const std::optional<ThinningScenario>& scenario() const { return scenario_; }
  std::uint64_t seed() const { return seed_; }

  /// Rounds per block of the thinning generator. Any window of Q rounds
  /// contains a full block, and every block carries a spanning tree.
  int block_length() const { return (q_ + 1) / 2; }

 private:
  GraphSequence() = default;
  Adjacency block_edges(std::int64_t block, int offset) const;

  int n_ = 0;
  double eta_ = 0.0;
  int q_ = 1;
  std::vector<WeightMatrix> matrices_;
  std::optional<ThinningScenario> scenario_;
  std::uint64_t seed_ = 0;
};

struct ClauseResult {
  bool pass = true;
  /// Round (or window start) of the first violation.
  std::optional<int> first_violation;
  std::string detail;
};

struct ValidationReport {
  ClauseResult nondegeneracy;     // (a)
  ClauseResult double_stochastic; // (b)
  ClauseResult joint_connectivity;// (c)
  double max_row_error = 0.0;
  double max_col_error = 0.0;

  bool pass() const { return nondegeneracy.pass && double_stochastic.pass && joint_connectivity.pass; }
};

/// Checks nondegeneracy, double stochasticity and strong connectivity of
/// every window of Q consecutive edge sets over rounds 1..horizon.
ValidationReport check_assumption1(const GraphSequence& seq, int horizon);

/// Contraction constants of the disagreement recursion.
struct GammaBeta {
  double gamma;
  double beta;
  /// 1 - beta, evaluated without cancellation.
  double one_minus_beta;
};

GammaBeta gamma_beta(double eta, int n, int q);

/// Thins `scenario.base` per seed; verifies the result before returning.
GraphSequence random_graph_sequence(const ThinningScenario& scenario, std::uint64_t seed, int q_target);

nlohmann::json to_json(const GraphSequence& seq);
GraphSequence graph_sequence_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ValidationReport& report);

}  // namespace dopd
